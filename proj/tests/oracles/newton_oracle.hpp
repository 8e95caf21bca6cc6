#pragma once

#include <vector>

#include "pvhc/powerflow.hpp"

namespace pvhc::oracle {

struct NewtonResult {
    std::vector<double> v_mag_pu;  // indexed like node_index(model)
    int iterations = 0;
    bool converged = false;
};

/// Full-Newton nodal power flow in rectangular coordinates. Ideal regulators are
/// folded into a representative node per regulated island, scaled by their ratio.
NewtonResult newton_solve(const NetworkModel& model, const InjectionState& inj, double tol_va = 1e-6,
                          int max_iter = 50);

}  // namespace pvhc::oracle
