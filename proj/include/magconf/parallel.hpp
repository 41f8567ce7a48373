#pragma once

namespace magconf {

//! Selects the OpenMP kernel or the serial reference loop; both produce identical results.
enum class Execution { serial, parallel };

//! Threads OpenMP will use for `Execution::parallel` (1 when built without OpenMP).
int max_threads();

} // namespace magconf
