#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "magconf/vec2.hpp"

namespace magconf {

/*
 * Field expression grammar (whitespace ignored):
 *
 *   expression = term { ("+" | "-") term } ;
 *   term       = unary { ("*" | "/") unary } ;
 *   unary      = ("-" | "+") unary | power ;
 *   power      = primary [ ("^" | "**") unary ] ;
 *   primary    = number | identifier | function "(" expression ")" | "(" expression ")" ;
 *   function   = "sqrt" | "sin" | "cos" | "exp" | "log" ;
 *   identifier = "x" | "y" | "r" | "pi" | parameter name ;
 *
 * r is sqrt(x^2 + y^2). Parameters are bound to numbers at parse time.
 */

//! var_d is never produced by the parser; see with_boundary_distance.
enum class NodeKind { constant, var_x, var_y, var_r, var_d, neg, add, sub, mul, div, pow, sqrt, sin, cos, exp, log };

struct Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

class Expression {
public:
    Expression();  // the constant 0
    explicit Expression(std::shared_ptr<const Node> node);

    static Expression parse(std::string_view text, const std::map<std::string, double>& parameters = {});
    static Expression constant(double value);
    static Expression x();
    static Expression y();
    static Expression r();

    double evaluate(Vec2 q) const;

    bool is_constant() const { return node_->kind == NodeKind::constant; }
    //! Value if the expression has no free variables (after folding).
    std::optional<double> constant_value() const;

    const Node& node() const { return *node_; }
    const std::shared_ptr<const Node>& ptr() const { return node_; }

    /*!
     * Derivative along a vector field acting on x, y, r through the chain rule,
     * e.g. d/dx uses (1, 0, x/r) and the angular derivative about the origin
     * uses (-y, x, 0).
     */
    Expression derivative(const Expression& dx, const Expression& dy, const Expression& dr) const;
    Expression d_dx() const;
    Expression d_dy() const;
    //! Angular derivative -(y - cy) d/dx + (x - cx) d/dy about `center`.
    Expression d_dtheta(Vec2 center = {}) const;

    std::string to_string() const;

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);
    friend Expression pow(const Expression& a, const Expression& b);

private:
    std::shared_ptr<const Node> node_;
};

Expression apply(NodeKind function, const Expression& argument);

//! Flat postfix program for fast repeated evaluation of one expression.
class CompiledExpression {
public:
    CompiledExpression() = default;
    explicit CompiledExpression(const Expression& e);

    double operator()(Vec2 q) const;
    //! Explicit r and boundary distance d (for rewritten expressions).
    double operator()(Vec2 q, double r, double d) const;
    bool empty() const { return code_.empty(); }

private:
    struct Instr {
        NodeKind op;
        double value;
    };
    std::vector<Instr> code_;
    std::size_t max_depth_ = 0;
    bool uses_r_ = false;
};

//! One singular term c / d^a, where d is the distance to a circular boundary.
struct SingularTerm {
    double coefficient = 0.0;
    double exponent = 0.0;
};

//! Top-level additive split of an expression into boundary-singular terms plus the rest.
struct BoundarySplit {
    std::vector<SingularTerm> singular;
    Expression regular;
};

/*!
 * Recognises the collar templates c/(R - r)^a (outer circle, radius R) and
 * c/(r - R)^a (inner circle), including c/(R - r), c*(R - r)^(-a) and
 * c/sqrt(R - r). Returns nullopt when no top-level term matches.
 */
std::optional<BoundarySplit> split_boundary_terms(const Expression& e, double radius, bool outer);

/*!
 * Replaces every (R - r) / (r - R) by the boundary distance d (or -d), so
 * that collar evaluation does not lose digits to cancellation near r = R.
 * The result cannot be differentiated.
 */
Expression with_boundary_distance(const Expression& e, double radius, bool outer);

} // namespace magconf
