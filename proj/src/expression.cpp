#include "magconf/expression.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "magconf/errors.hpp"

namespace magconf {

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_node(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->value = value;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

bool is_const(const NodePtr& n, double v)
{
    return n->kind == NodeKind::constant && n->value == v;
}

double apply_unary(NodeKind k, double a)
{
    switch (k) {
    case NodeKind::neg: return -a;
    case NodeKind::sqrt: return std::sqrt(a);
    case NodeKind::sin: return std::sin(a);
    case NodeKind::cos: return std::cos(a);
    case NodeKind::exp: return std::exp(a);
    case NodeKind::log: return std::log(a);
    default: return a;
    }
}

double apply_binary(NodeKind k, double a, double b)
{
    switch (k) {
    case NodeKind::add: return a + b;
    case NodeKind::sub: return a - b;
    case NodeKind::mul: return a * b;
    case NodeKind::div: return a / b;
    case NodeKind::pow: return std::pow(a, b);
    default: return 0.0;
    }
}

double eval_node(const Node& n, double x, double y, double r)
{
    switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::var_x: return x;
    case NodeKind::var_y: return y;
    case NodeKind::var_r: return r;
    case NodeKind::var_d: return std::numeric_limits<double>::quiet_NaN();
    case NodeKind::add:
    case NodeKind::sub:
    case NodeKind::mul:
    case NodeKind::div:
    case NodeKind::pow: return apply_binary(n.kind, eval_node(*n.lhs, x, y, r), eval_node(*n.rhs, x, y, r));
    default: return apply_unary(n.kind, eval_node(*n.lhs, x, y, r));
    }
}

class Parser {
public:
    Parser(std::string_view text, const std::map<std::string, double>& parameters)
        : text_(text), parameters_(parameters) {}

    Expression parse()
    {
        Expression e = expression();
        skip_space();
        if (pos_ != text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(std::string_view token)
    {
        skip_space();
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    Expression expression()
    {
        Expression e = term();
        for (;;) {
            if (accept("+"))
                e = e + term();
            else if (accept("-"))
                e = e - term();
            else
                return e;
        }
    }

    Expression term()
    {
        Expression e = unary();
        for (;;) {
            skip_space();
            if (text_.substr(pos_, 2) == "**")
                return e;  // handled by power()
            if (accept("*"))
                e = e * unary();
            else if (accept("/"))
                e = e / unary();
            else
                return e;
        }
    }

    Expression unary()
    {
        if (accept("-"))
            return -unary();
        if (accept("+"))
            return unary();
        return power();
    }

    Expression power()
    {
        Expression base = primary();
        if (accept("^") || accept("**"))
            return pow(base, unary());
        return base;
    }

    Expression primary()
    {
        skip_space();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        if (accept("(")) {
            Expression e = expression();
            if (!accept(")"))
                throw ParseError("expected ')'", pos_);
            return e;
        }
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    Expression number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        const std::string token(text_.substr(start, pos_ - start));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + token + "'", start);
        }
        if (used != token.size())
            throw ParseError("malformed number '" + token + "'", start);
        return Expression::constant(v);
    }

    Expression identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size()
               && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            static const std::map<std::string, NodeKind> functions = {
                {"sqrt", NodeKind::sqrt}, {"sin", NodeKind::sin}, {"cos", NodeKind::cos},
                {"exp", NodeKind::exp},   {"log", NodeKind::log},
            };
            auto it = functions.find(name);
            if (it == functions.end())
                throw ParseError("unsupported function '" + name + "'", start);
            ++pos_;
            Expression arg = expression();
            if (!accept(")"))
                throw ParseError("expected ')'", pos_);
            return apply(it->second, arg);
        }
        if (name == "x")
            return Expression::x();
        if (name == "y")
            return Expression::y();
        if (name == "r")
            return Expression::r();
        if (auto it = parameters_.find(name); it != parameters_.end())
            return Expression::constant(it->second);
        if (name == "pi")
            return Expression::constant(std::numbers::pi);
        throw ParseError("unknown identifier '" + name + "'", start);
    }

    std::string_view text_;
    const std::map<std::string, double>& parameters_;
    std::size_t pos_ = 0;
};

int precedence(NodeKind k)
{
    switch (k) {
    case NodeKind::add:
    case NodeKind::sub: return 1;
    case NodeKind::mul:
    case NodeKind::div: return 2;
    case NodeKind::neg: return 3;
    case NodeKind::pow: return 4;
    default: return 5;
    }
}

void print(std::ostream& os, const Node& n)
{
    auto child = [&os](const Node& c, int parent_prec, bool right) {
        const int p = precedence(c.kind);
        const bool paren = p < parent_prec || (right && p == parent_prec && p != 5);
        if (paren)
            os << '(';
        print(os, c);
        if (paren)
            os << ')';
    };
    switch (n.kind) {
    case NodeKind::constant: {
        std::ostringstream v;
        v.precision(17);
        v << n.value;
        if (n.value < 0)
            os << '(' << v.str() << ')';
        else
            os << v.str();
        return;
    }
    case NodeKind::var_x: os << 'x'; return;
    case NodeKind::var_y: os << 'y'; return;
    case NodeKind::var_r: os << 'r'; return;
    case NodeKind::var_d: os << 'd'; return;
    case NodeKind::neg: os << '-'; child(*n.lhs, 4, false); return;
    case NodeKind::add: child(*n.lhs, 1, false); os << " + "; child(*n.rhs, 1, true); return;
    case NodeKind::sub: child(*n.lhs, 1, false); os << " - "; child(*n.rhs, 1, true); return;
    case NodeKind::mul: child(*n.lhs, 2, false); os << '*'; child(*n.rhs, 2, true); return;
    case NodeKind::div: child(*n.lhs, 2, false); os << '/'; child(*n.rhs, 2, true); return;
    case NodeKind::pow: child(*n.lhs, 5, false); os << '^'; child(*n.rhs, 5, true); return;
    case NodeKind::sqrt: os << "sqrt("; print(os, *n.lhs); os << ')'; return;
    case NodeKind::sin: os << "sin("; print(os, *n.lhs); os << ')'; return;
    case NodeKind::cos: os << "cos("; print(os, *n.lhs); os << ')'; return;
    case NodeKind::exp: os << "exp("; print(os, *n.lhs); os << ')'; return;
    case NodeKind::log: os << "log("; print(os, *n.lhs); os << ')'; return;
    }
}

} // namespace

Expression::Expression() : node_(make_node(NodeKind::constant)) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::parse(std::string_view text, const std::map<std::string, double>& parameters)
{
    return Parser(text, parameters).parse();
}

Expression Expression::constant(double value)
{
    return Expression(make_node(NodeKind::constant, nullptr, nullptr, value));
}

Expression Expression::x() { return Expression(make_node(NodeKind::var_x)); }
Expression Expression::y() { return Expression(make_node(NodeKind::var_y)); }
Expression Expression::r() { return Expression(make_node(NodeKind::var_r)); }

double Expression::evaluate(Vec2 q) const
{
    return eval_node(*node_, q.x, q.y, std::hypot(q.x, q.y));
}

std::optional<double> Expression::constant_value() const
{
    if (node_->kind == NodeKind::constant)
        return node_->value;
    return std::nullopt;
}

Expression operator+(const Expression& a, const Expression& b)
{
    if (a.is_constant() && b.is_constant())
        return Expression::constant(a.node_->value + b.node_->value);
    if (is_const(a.node_, 0.0))
        return b;
    if (is_const(b.node_, 0.0))
        return a;
    return Expression(make_node(NodeKind::add, a.node_, b.node_));
}

Expression operator-(const Expression& a, const Expression& b)
{
    if (a.is_constant() && b.is_constant())
        return Expression::constant(a.node_->value - b.node_->value);
    if (is_const(b.node_, 0.0))
        return a;
    if (is_const(a.node_, 0.0))
        return -b;
    return Expression(make_node(NodeKind::sub, a.node_, b.node_));
}

Expression operator*(const Expression& a, const Expression& b)
{
    if (a.is_constant() && b.is_constant())
        return Expression::constant(a.node_->value * b.node_->value);
    if (is_const(a.node_, 0.0) || is_const(b.node_, 0.0))
        return Expression::constant(0.0);
    if (is_const(a.node_, 1.0))
        return b;
    if (is_const(b.node_, 1.0))
        return a;
    return Expression(make_node(NodeKind::mul, a.node_, b.node_));
}

Expression operator/(const Expression& a, const Expression& b)
{
    if (a.is_constant() && b.is_constant())
        return Expression::constant(a.node_->value / b.node_->value);
    if (is_const(a.node_, 0.0))
        return Expression::constant(0.0);
    if (is_const(b.node_, 1.0))
        return a;
    return Expression(make_node(NodeKind::div, a.node_, b.node_));
}

Expression operator-(const Expression& a)
{
    if (a.is_constant())
        return Expression::constant(-a.node_->value);
    if (a.node_->kind == NodeKind::neg)
        return Expression(a.node_->lhs);
    return Expression(make_node(NodeKind::neg, a.node_));
}

Expression pow(const Expression& a, const Expression& b)
{
    if (a.is_constant() && b.is_constant())
        return Expression::constant(std::pow(a.node_->value, b.node_->value));
    if (is_const(b.node_, 0.0))
        return Expression::constant(1.0);
    if (is_const(b.node_, 1.0))
        return a;
    return Expression(make_node(NodeKind::pow, a.node_, b.node_));
}

Expression apply(NodeKind function, const Expression& argument)
{
    if (argument.is_constant())
        return Expression::constant(apply_unary(function, argument.node().value));
    return Expression(make_node(function, argument.ptr()));
}

Expression Expression::derivative(const Expression& dx, const Expression& dy, const Expression& dr) const
{
    const Node& n = *node_;
    auto sub = [&](const NodePtr& p) { return Expression(p).derivative(dx, dy, dr); };
    switch (n.kind) {
    case NodeKind::constant: return constant(0.0);
    case NodeKind::var_x: return dx;
    case NodeKind::var_y: return dy;
    case NodeKind::var_r: return dr;
    case NodeKind::var_d: throw Error("cannot differentiate a boundary-distance expression");
    case NodeKind::neg: return -sub(n.lhs);
    case NodeKind::add: return sub(n.lhs) + sub(n.rhs);
    case NodeKind::sub: return sub(n.lhs) - sub(n.rhs);
    case NodeKind::mul: {
        const Expression a(n.lhs), b(n.rhs);
        return sub(n.lhs) * b + a * sub(n.rhs);
    }
    case NodeKind::div: {
        const Expression a(n.lhs), b(n.rhs);
        return sub(n.lhs) / b - a * sub(n.rhs) / (b * b);
    }
    case NodeKind::pow: {
        const Expression a(n.lhs), b(n.rhs);
        if (b.is_constant())
            return b * pow(a, constant(b.node().value - 1.0)) * sub(n.lhs);
        return *this * (sub(n.rhs) * apply(NodeKind::log, a) + b * sub(n.lhs) / a);
    }
    case NodeKind::sqrt: return sub(n.lhs) / (constant(2.0) * *this);
    case NodeKind::sin: return apply(NodeKind::cos, Expression(n.lhs)) * sub(n.lhs);
    case NodeKind::cos: return -(apply(NodeKind::sin, Expression(n.lhs)) * sub(n.lhs));
    case NodeKind::exp: return *this * sub(n.lhs);
    case NodeKind::log: return sub(n.lhs) / Expression(n.lhs);
    }
    return constant(0.0);
}

Expression Expression::d_dx() const
{
    return derivative(constant(1.0), constant(0.0), x() / r());
}

Expression Expression::d_dy() const
{
    return derivative(constant(0.0), constant(1.0), y() / r());
}

Expression Expression::d_dtheta(Vec2 center) const
{
    const Expression dx = -(y() - constant(center.y));
    const Expression dy = x() - constant(center.x);
    // d r = (x dx + y dy) / r, which vanishes identically for center = 0
    const Expression dr = (constant(center.y) * x() - constant(center.x) * y()) / r();
    return derivative(dx, dy, dr);
}

std::string Expression::to_string() const
{
    std::ostringstream os;
    print(os, *node_);
    return os.str();
}

CompiledExpression::CompiledExpression(const Expression& e)
{
    std::size_t depth = 0;
    auto emit = [&](auto&& self, const Node& n) -> void {
        switch (n.kind) {
        case NodeKind::constant:
        case NodeKind::var_x:
        case NodeKind::var_y:
        case NodeKind::var_r:
        case NodeKind::var_d:
            if (n.kind == NodeKind::var_r)
                uses_r_ = true;
            code_.push_back({n.kind, n.value});
            max_depth_ = std::max(max_depth_, ++depth);
            return;
        case NodeKind::add:
        case NodeKind::sub:
        case NodeKind::mul:
        case NodeKind::div:
        case NodeKind::pow:
            self(self, *n.lhs);
            self(self, *n.rhs);
            code_.push_back({n.kind, 0.0});
            --depth;
            return;
        default:
            self(self, *n.lhs);
            code_.push_back({n.kind, 0.0});
            return;
        }
    };
    emit(emit, e.node());
}

double CompiledExpression::operator()(Vec2 q) const
{
    return (*this)(q, uses_r_ ? std::hypot(q.x, q.y) : 0.0, std::numeric_limits<double>::quiet_NaN());
}

double CompiledExpression::operator()(Vec2 q, double r, double d) const
{
    constexpr std::size_t inline_depth = 64;
    std::array<double, inline_depth> small;
    std::vector<double> large;
    double* stack = small.data();
    if (max_depth_ > inline_depth) {
        large.resize(max_depth_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case NodeKind::constant: stack[top++] = in.value; break;
        case NodeKind::var_x: stack[top++] = q.x; break;
        case NodeKind::var_y: stack[top++] = q.y; break;
        case NodeKind::var_r: stack[top++] = r; break;
        case NodeKind::var_d: stack[top++] = d; break;
        case NodeKind::add:
        case NodeKind::sub:
        case NodeKind::mul:
        case NodeKind::div:
        case NodeKind::pow:
            --top;
            stack[top - 1] = apply_binary(in.op, stack[top - 1], stack[top]);
            break;
        default: stack[top - 1] = apply_unary(in.op, stack[top - 1]); break;
        }
    }
    return top ? stack[0] : 0.0;
}

namespace {

void flatten_sum(const Expression& e, double sign, std::vector<std::pair<double, Expression>>& out)
{
    const Node& n = e.node();
    if (n.kind == NodeKind::add) {
        flatten_sum(Expression(n.lhs), sign, out);
        flatten_sum(Expression(n.rhs), sign, out);
    } else if (n.kind == NodeKind::sub) {
        flatten_sum(Expression(n.lhs), sign, out);
        flatten_sum(Expression(n.rhs), -sign, out);
    } else if (n.kind == NodeKind::neg) {
        flatten_sum(Expression(n.lhs), -sign, out);
    } else {
        out.emplace_back(sign, e);
    }
}

// Matches d = (R - r) (outer) or (r - R) (inner); `flipped` is set for the reversed order.
bool match_distance(const Node& n, double radius, bool outer, bool& flipped)
{
    if (n.kind != NodeKind::sub)
        return false;
    auto near_radius = [radius](const Node& c) {
        return c.kind == NodeKind::constant && std::abs(c.value - radius) <= 1e-12 * radius;
    };
    const bool r_minus_R = n.lhs->kind == NodeKind::var_r && near_radius(*n.rhs);
    const bool R_minus_r = near_radius(*n.lhs) && n.rhs->kind == NodeKind::var_r;
    if (!r_minus_R && !R_minus_r)
        return false;
    flipped = outer ? r_minus_R : R_minus_r;
    return true;
}

// d^a with a constant; sign absorbs (-d)^a for integer a.
std::optional<SingularTerm> match_power(const Node& n, double radius, bool outer)
{
    bool flipped = false;
    double a = 0.0;
    if (match_distance(n, radius, outer, flipped)) {
        a = 1.0;
    } else if (n.kind == NodeKind::pow && n.rhs->kind == NodeKind::constant
               && match_distance(*n.lhs, radius, outer, flipped)) {
        a = n.rhs->value;
    } else if (n.kind == NodeKind::sqrt && match_distance(*n.lhs, radius, outer, flipped)) {
        if (flipped)
            return std::nullopt;
        a = 0.5;
    } else {
        return std::nullopt;
    }
    double sign = 1.0;
    if (flipped) {
        if (a != std::round(a))
            return std::nullopt;
        sign = std::fmod(std::abs(a), 2.0) == 1.0 ? -1.0 : 1.0;
    }
    // d^a == sign * 1/d^(-a)
    return SingularTerm{sign, -a};
}

std::optional<SingularTerm> match_term(const Node& n, double radius, bool outer)
{
    if (n.kind == NodeKind::neg) {
        auto t = match_term(*n.lhs, radius, outer);
        if (t)
            t->coefficient = -t->coefficient;
        return t;
    }
    if (auto p = match_power(n, radius, outer)) {
        if (p->exponent > 0.0)
            return p;
        return std::nullopt;
    }
    if (n.kind == NodeKind::div) {
        if (n.rhs->kind == NodeKind::constant) {
            auto t = match_term(*n.lhs, radius, outer);
            if (t)
                t->coefficient /= n.rhs->value;
            return t;
        }
        if (n.lhs->kind != NodeKind::constant)
            return std::nullopt;
        auto p = match_power(*n.rhs, radius, outer);
        if (!p || -p->exponent <= 0.0)
            return std::nullopt;
        return SingularTerm{n.lhs->value / p->coefficient, -p->exponent};
    }
    if (n.kind == NodeKind::mul) {
        const Node* c = nullptr;
        const Node* rest = nullptr;
        if (n.lhs->kind == NodeKind::constant) {
            c = n.lhs.get();
            rest = n.rhs.get();
        } else if (n.rhs->kind == NodeKind::constant) {
            c = n.rhs.get();
            rest = n.lhs.get();
        } else {
            return std::nullopt;
        }
        auto t = match_term(*rest, radius, outer);
        if (t)
            t->coefficient *= c->value;
        return t;
    }
    return std::nullopt;
}

} // namespace

std::optional<BoundarySplit> split_boundary_terms(const Expression& e, double radius, bool outer)
{
    std::vector<std::pair<double, Expression>> terms;
    flatten_sum(e, 1.0, terms);
    BoundarySplit split;
    for (const auto& [sign, term] : terms) {
        if (auto t = match_term(term.node(), radius, outer)) {
            t->coefficient *= sign;
            split.singular.push_back(*t);
        } else {
            split.regular = sign > 0 ? split.regular + term : split.regular - term;
        }
    }
    if (split.singular.empty())
        return std::nullopt;
    return split;
}

Expression with_boundary_distance(const Expression& e, double radius, bool outer)
{
    const Node& n = e.node();
    bool flipped = false;
    if (match_distance(n, radius, outer, flipped)) {
        const Expression d(std::make_shared<const Node>(Node{NodeKind::var_d, 0.0, nullptr, nullptr}));
        return flipped ? -d : d;
    }
    auto rewrite = [&](const std::shared_ptr<const Node>& c) { return with_boundary_distance(Expression(c), radius, outer); };
    switch (n.kind) {
    case NodeKind::neg: return -rewrite(n.lhs);
    case NodeKind::add: return rewrite(n.lhs) + rewrite(n.rhs);
    case NodeKind::sub: return rewrite(n.lhs) - rewrite(n.rhs);
    case NodeKind::mul: return rewrite(n.lhs) * rewrite(n.rhs);
    case NodeKind::div: return rewrite(n.lhs) / rewrite(n.rhs);
    case NodeKind::pow: return pow(rewrite(n.lhs), rewrite(n.rhs));
    case NodeKind::sqrt:
    case NodeKind::sin:
    case NodeKind::cos:
    case NodeKind::exp:
    case NodeKind::log: return apply(n.kind, rewrite(n.lhs));
    default: return e;
    }
}

} // namespace magconf
