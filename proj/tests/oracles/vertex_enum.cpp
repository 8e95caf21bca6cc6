#include "vertex_enum.hpp"

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace pvhc::oracle {

std::optional<double> vertex_enumeration(const LinearProgram& lp, double feas_tol) {
    const std::size_t n = lp.variable_count();
    // Hyperplanes: constraint rows, then lo and hi bound of each variable.
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    for (const auto& c : lp.constraints) {
        rows.push_back(c.coefficients);
        rhs.push_back(c.rhs);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        // Infinite bounds are not hyperplanes.
        for (double b : {lp.bounds[j].lo, lp.bounds[j].hi}) {
            if (!std::isfinite(b)) continue;
            rows.push_back(e);
            rhs.push_back(b);
        }
    }

    auto feasible = [&](const Eigen::VectorXd& x) {
        if (!x.allFinite()) return false;
        for (std::size_t j = 0; j < n; ++j) {
            if (x(static_cast<Eigen::Index>(j)) < lp.bounds[j].lo - feas_tol ||
                x(static_cast<Eigen::Index>(j)) > lp.bounds[j].hi + feas_tol) {
                return false;
            }
        }
        for (const auto& c : lp.constraints) {
            double ax = 0.0;
            for (std::size_t j = 0; j < n; ++j) ax += c.coefficients[j] * x(static_cast<Eigen::Index>(j));
            const double tol = feas_tol * (1.0 + std::abs(c.rhs));
            if (c.relation == Relation::LessEqual && ax > c.rhs + tol) return false;
            if (c.relation == Relation::GreaterEqual && ax < c.rhs - tol) return false;
            if (c.relation == Relation::Equal && std::abs(ax - c.rhs) > tol) return false;
        }
        return true;
    };

    std::optional<double> best;
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> choose = [&](std::size_t start) {
        if (pick.size() == n) {
            Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            Eigen::VectorXd b(static_cast<Eigen::Index>(n));
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t j = 0; j < n; ++j) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[pick[r]][j];
                b(static_cast<Eigen::Index>(r)) = rhs[pick[r]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (lu.rank() < static_cast<Eigen::Index>(n)) return;
            const Eigen::VectorXd x = lu.solve(b);
            if (!feasible(x)) return;
            double obj = 0.0;
            for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * x(static_cast<Eigen::Index>(j));
            if (!best || obj < *best) best = obj;
            return;
        }
        for (std::size_t i = start; i < rows.size(); ++i) {
            pick.push_back(i);
            choose(i + 1);
            pick.pop_back();
        }
    };
    choose(0);
    return best;
}

}  // namespace pvhc::oracle
