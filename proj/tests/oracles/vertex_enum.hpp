#pragma once

#include <optional>

#include "pvhc/lp.hpp"

namespace pvhc::oracle {

/// Minimum objective over every basic feasible point, or nullopt when none is
/// feasible. Assumes the optimum is attained at a vertex, which holds when the
/// feasible set is bounded. Exponential; tiny instances only.
std::optional<double> vertex_enumeration(const LinearProgram& lp, double feas_tol = 1e-9);

}  // namespace pvhc::oracle
