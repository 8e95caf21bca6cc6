#pragma once

#include <cstdint>

#include "pvhc/lp.hpp"

namespace pvhc::oracle {

/// Small dense program with 1..5 variables in finite boxes and 1..8 rows of
/// mixed relations. About one draw in eight is unanchored and may be infeasible.
LinearProgram random_lp(std::uint64_t seed);

}  // namespace pvhc::oracle
