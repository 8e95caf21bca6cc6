#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pvhc {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
    std::vector<double> coefficients;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct VariableBounds {
    double lo = 0.0;
    double hi = kInfinity;
};

/// minimize objective . x subject to constraints and per-variable bounds.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<LinearConstraint> constraints;
    std::vector<VariableBounds> bounds;  // one per variable

    std::size_t variable_count() const { return objective.size(); }
    /// Throws std::invalid_argument on inconsistent sizes, NaN/inf coefficients or lo > hi.
    void check() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
    // Optimal only: one multiplier per constraint, objective = c - A^T y at optimum.
    std::vector<double> duals;
    // Unbounded only: feasible direction with negative cost.
    std::vector<double> ray;
    int pivots = 0;
};

struct LpOptions {
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    int max_pivots = 200000;
};

class LpNumericalBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two-phase primal simplex on a dense tableau with Bland's rule.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

/// Plain-text instance dump:
///
///   lp <vars> <constraints>
///   min <c_1> ... <c_n>
///   row <a_1> ... <a_n> <=|=|>= <rhs>      (one per constraint)
///   bounds <lo_1> <hi_1> ... <lo_n> <hi_n>  (inf / -inf allowed)
///
/// Numbers use 17 significant digits so a parse reproduces the instance.
std::string lp_to_text(const LinearProgram& lp);
LinearProgram lp_from_text(std::string_view text);

}  // namespace pvhc
