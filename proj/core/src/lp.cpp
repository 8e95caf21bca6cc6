#include "pvhc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pvhc {

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

void LinearProgram::check() const {
    const std::size_t n = objective.size();
    if (bounds.size() != n) throw std::invalid_argument("bounds must have one entry per variable");
    for (double c : objective) {
        if (!std::isfinite(c)) throw std::invalid_argument("objective coefficients must be finite");
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const auto& row = constraints[i];
        if (row.coefficients.size() != n) {
            throw std::invalid_argument("constraint " + std::to_string(i) + " has wrong length");
        }
        for (double a : row.coefficients) {
            if (!std::isfinite(a)) throw std::invalid_argument("constraint coefficients must be finite");
        }
        if (!std::isfinite(row.rhs)) throw std::invalid_argument("constraint rhs must be finite");
    }
    for (const auto& b : bounds) {
        if (std::isnan(b.lo) || std::isnan(b.hi) || b.lo > b.hi || b.lo == kInfinity || b.hi == -kInfinity) {
            throw std::invalid_argument("invalid variable bounds");
        }
    }
}

namespace {

// x_orig = offset + sign * x[plus] - x[minus]
struct VarMap {
    int plus = -1;
    int minus = -1;
    double sign = 1.0;
    double offset = 0.0;
};

enum class ColKind { Structural, Slack, Artificial };

class Tableau {
public:
    Tableau(int rows, int cols) : m_(rows), n_(cols), data_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {}

    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * (n_ + 1) + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * (n_ + 1) + j]; }
    double& rhs(int i) { return at(i, n_); }
    double& obj(int j) { return at(m_, j); }  // reduced-cost row; obj(n_) = -objective

    void pivot(int r, int e) {
        const double p = at(r, e);
        double* row_r = &at(r, 0);
        for (int j = 0; j <= n_; ++j) row_r[j] /= p;
        row_r[e] = 1.0;
        for (int i = 0; i <= m_; ++i) {
            if (i == r) continue;
            double* row_i = &at(i, 0);
            const double f = row_i[e];
            if (f == 0.0) continue;
            for (int j = 0; j <= n_; ++j) row_i[j] -= f * row_r[j];
            row_i[e] = 0.0;
        }
    }

    int rows() const { return m_; }
    int cols() const { return n_; }

private:
    int m_, n_;
    std::vector<double> data_;
};

struct Standard {
    std::vector<VarMap> map;
    int structural = 0;
    std::vector<std::vector<double>> rows;  // structural coefficients, scaled and sign-normalized
    std::vector<double> rhs;
    std::vector<Relation> rel;
    std::vector<double> factor;  // original row = factor * standard row
    std::vector<double> cost;
    std::size_t user_rows = 0;
};

Standard to_standard(const LinearProgram& lp) {
    Standard s;
    const std::size_t n = lp.variable_count();
    s.map.resize(n);
    std::vector<std::pair<int, double>> upper_rows;  // (column, bound)
    for (std::size_t j = 0; j < n; ++j) {
        const auto& b = lp.bounds[j];
        VarMap& vm = s.map[j];
        vm.plus = s.structural++;
        if (std::isfinite(b.lo)) {
            vm.offset = b.lo;
            if (std::isfinite(b.hi)) upper_rows.emplace_back(vm.plus, b.hi - b.lo);
        } else if (std::isfinite(b.hi)) {
            vm.offset = b.hi;
            vm.sign = -1.0;
        } else {
            vm.minus = s.structural++;
        }
    }
    s.cost.assign(static_cast<std::size_t>(s.structural), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        s.cost[static_cast<std::size_t>(s.map[j].plus)] += lp.objective[j] * s.map[j].sign;
        if (s.map[j].minus >= 0) s.cost[static_cast<std::size_t>(s.map[j].minus)] -= lp.objective[j];
    }

    auto add_row = [&](std::vector<double> a, Relation rel, double rhs) {
        double scale = 0.0;
        for (double v : a) scale = std::max(scale, std::abs(v));
        double factor = scale > 0.0 ? scale : 1.0;
        for (double& v : a) v /= factor;
        rhs /= factor;
        if (rhs < 0.0) {
            for (double& v : a) v = -v;
            rhs = -rhs;
            factor = -factor;
            if (rel == Relation::LessEqual) {
                rel = Relation::GreaterEqual;
            } else if (rel == Relation::GreaterEqual) {
                rel = Relation::LessEqual;
            }
        }
        s.rows.push_back(std::move(a));
        s.rhs.push_back(rhs);
        s.rel.push_back(rel);
        s.factor.push_back(factor);
    };

    for (const auto& c : lp.constraints) {
        std::vector<double> a(static_cast<std::size_t>(s.structural), 0.0);
        double rhs = c.rhs;
        for (std::size_t j = 0; j < n; ++j) {
            const double coef = c.coefficients[j];
            if (coef == 0.0) continue;
            rhs -= coef * s.map[j].offset;
            a[static_cast<std::size_t>(s.map[j].plus)] += coef * s.map[j].sign;
            if (s.map[j].minus >= 0) a[static_cast<std::size_t>(s.map[j].minus)] -= coef;
        }
        add_row(std::move(a), c.relation, rhs);
    }
    s.user_rows = lp.constraints.size();
    for (auto [col, bound] : upper_rows) {
        std::vector<double> a(static_cast<std::size_t>(s.structural), 0.0);
        a[static_cast<std::size_t>(col)] = 1.0;
        add_row(std::move(a), Relation::LessEqual, bound);
    }
    return s;
}

class Simplex {
public:
    Simplex(const Standard& s, const LpOptions& opts) : s_(s), opts_(opts) {
        const int m = static_cast<int>(s.rows.size());
        int slacks = 0, artificials = 0;
        for (Relation r : s.rel) {
            if (r == Relation::LessEqual) ++slacks;
            else if (r == Relation::GreaterEqual) { ++slacks; ++artificials; }
            else ++artificials;
        }
        const int n = s.structural + slacks + artificials;
        tab_ = Tableau(m, n);
        kind_.assign(static_cast<std::size_t>(n), ColKind::Structural);
        basis_.assign(static_cast<std::size_t>(m), -1);
        identity_.assign(static_cast<std::size_t>(m), -1);

        int next_slack = s.structural;
        int next_art = s.structural + slacks;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < s.structural; ++j) tab_.at(i, j) = s.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            tab_.rhs(i) = s.rhs[static_cast<std::size_t>(i)];
            switch (s.rel[static_cast<std::size_t>(i)]) {
                case Relation::LessEqual:
                    kind_[static_cast<std::size_t>(next_slack)] = ColKind::Slack;
                    tab_.at(i, next_slack) = 1.0;
                    basis_[static_cast<std::size_t>(i)] = identity_[static_cast<std::size_t>(i)] = next_slack++;
                    break;
                case Relation::GreaterEqual:
                    kind_[static_cast<std::size_t>(next_slack)] = ColKind::Slack;
                    tab_.at(i, next_slack++) = -1.0;
                    [[fallthrough]];
                case Relation::Equal:
                    kind_[static_cast<std::size_t>(next_art)] = ColKind::Artificial;
                    tab_.at(i, next_art) = 1.0;
                    basis_[static_cast<std::size_t>(i)] = identity_[static_cast<std::size_t>(i)] = next_art++;
                    break;
            }
        }
    }

    LpSolution run(const LinearProgram& lp) {
        LpSolution out;
        const int m = tab_.rows();
        const int n = tab_.cols();

        // Phase 1: minimize the sum of artificials.
        for (int j = 0; j <= n; ++j) tab_.obj(j) = 0.0;
        for (int j = 0; j < n; ++j) {
            if (kind_[static_cast<std::size_t>(j)] == ColKind::Artificial) tab_.obj(j) = 1.0;
        }
        for (int i = 0; i < m; ++i) {
            if (kind_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] != ColKind::Artificial) continue;
            for (int j = 0; j <= n; ++j) tab_.obj(j) -= tab_.at(i, j);
        }
        if (iterate() != Outcome::Optimal) throw LpNumericalBreakdown("phase 1 reported an unbounded ray");
        out.pivots = pivots_;
        if (-tab_.obj(n) > opts_.feasibility_tol) {
            out.status = LpStatus::Infeasible;
            return out;
        }
        drive_out_artificials();

        // Phase 2.
        for (int j = 0; j <= n; ++j) tab_.obj(j) = 0.0;
        for (int j = 0; j < s_.structural; ++j) tab_.obj(j) = s_.cost[static_cast<std::size_t>(j)];
        for (int i = 0; i < m; ++i) {
            const int b = basis_[static_cast<std::size_t>(i)];
            const double cb = b < s_.structural ? s_.cost[static_cast<std::size_t>(b)] : 0.0;
            if (cb == 0.0) continue;
            for (int j = 0; j <= n; ++j) tab_.obj(j) -= cb * tab_.at(i, j);
        }
        const Outcome result = iterate();
        out.pivots = pivots_;
        if (result == Outcome::Unbounded) {
            out.status = LpStatus::Unbounded;
            std::vector<double> dir(static_cast<std::size_t>(n), 0.0);
            dir[static_cast<std::size_t>(entering_)] = 1.0;
            for (int i = 0; i < m; ++i) dir[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = -tab_.at(i, entering_);
            out.ray.assign(lp.variable_count(), 0.0);
            for (std::size_t j = 0; j < lp.variable_count(); ++j) {
                const VarMap& vm = s_.map[j];
                out.ray[j] = vm.sign * dir[static_cast<std::size_t>(vm.plus)] -
                             (vm.minus >= 0 ? dir[static_cast<std::size_t>(vm.minus)] : 0.0);
            }
            return out;
        }

        std::vector<double> xs(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < m; ++i) xs[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = std::max(0.0, tab_.rhs(i));
        out.x.resize(lp.variable_count());
        for (std::size_t j = 0; j < lp.variable_count(); ++j) {
            const VarMap& vm = s_.map[j];
            double v = vm.offset + vm.sign * xs[static_cast<std::size_t>(vm.plus)];
            if (vm.minus >= 0) v -= xs[static_cast<std::size_t>(vm.minus)];
            out.x[j] = v;
        }
        out.objective_value = 0.0;
        for (std::size_t j = 0; j < lp.variable_count(); ++j) out.objective_value += lp.objective[j] * out.x[j];
        out.duals.resize(s_.user_rows);
        for (std::size_t i = 0; i < s_.user_rows; ++i) {
            const double y_std = -tab_.obj(identity_[i]);
            out.duals[i] = y_std / s_.factor[i];
        }
        out.status = LpStatus::Optimal;
        return out;
    }

private:
    enum class Outcome { Optimal, Unbounded };

    Outcome iterate() {
        const int m = tab_.rows();
        const int n = tab_.cols();
        for (;;) {
            int e = -1;
            for (int j = 0; j < n; ++j) {
                if (kind_[static_cast<std::size_t>(j)] == ColKind::Artificial) continue;
                if (tab_.obj(j) < -opts_.optimality_tol) {
                    e = j;
                    break;
                }
            }
            if (e < 0) return Outcome::Optimal;

            int r = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                const double a = tab_.at(i, e);
                if (a <= opts_.pivot_tol) continue;
                const double ratio = tab_.rhs(i) / a;
                if (r < 0) {
                    r = i;
                    best = ratio;
                    continue;
                }
                const double tie = 1e-12 * (1.0 + std::abs(best));
                if (ratio < best - tie ||
                    (ratio <= best + tie && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)])) {
                    r = i;
                    best = std::min(best, ratio);
                }
            }
            if (r < 0) {
                entering_ = e;
                return Outcome::Unbounded;
            }
            if (std::abs(tab_.at(r, e)) < opts_.pivot_tol || !std::isfinite(tab_.at(r, e))) {
                throw LpNumericalBreakdown("pivot element below tolerance");
            }
            tab_.pivot(r, e);
            basis_[static_cast<std::size_t>(r)] = e;
            if (++pivots_ > opts_.max_pivots) throw LpNumericalBreakdown("pivot limit exceeded");
            for (int i = 0; i < m; ++i) {
                double& b = tab_.rhs(i);
                if (!std::isfinite(b) || b < -1e-6) throw LpNumericalBreakdown("lost primal feasibility");
                if (b < 0.0) b = 0.0;
            }
        }
    }

    void drive_out_artificials() {
        const int m = tab_.rows();
        const int n = tab_.cols();
        for (int i = 0; i < m; ++i) {
            if (kind_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] != ColKind::Artificial) continue;
            int best = -1;
            for (int j = 0; j < n; ++j) {
                if (kind_[static_cast<std::size_t>(j)] == ColKind::Artificial) continue;
                if (std::abs(tab_.at(i, j)) > 1e-9 && (best < 0 || std::abs(tab_.at(i, j)) > std::abs(tab_.at(i, best)))) {
                    best = j;
                }
            }
            // No candidate: the row is redundant and its artificial stays basic at zero.
            if (best < 0) continue;
            tab_.pivot(i, best);
            basis_[static_cast<std::size_t>(i)] = best;
            ++pivots_;
        }
    }

    const Standard& s_;
    const LpOptions& opts_;
    Tableau tab_{0, 0};
    std::vector<ColKind> kind_;
    std::vector<int> basis_;
    std::vector<int> identity_;
    int pivots_ = 0;
    int entering_ = -1;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts) {
    lp.check();
    const Standard s = to_standard(lp);
    Simplex simplex(s, opts);
    LpSolution sol = simplex.run(lp);
    if (sol.status != LpStatus::Optimal) return sol;

    for (std::size_t j = 0; j < lp.variable_count(); ++j) {
        sol.x[j] = std::clamp(sol.x[j], lp.bounds[j].lo, lp.bounds[j].hi);
    }
    for (const auto& c : lp.constraints) {
        double lhs = 0.0;
        double mag = std::abs(c.rhs);
        for (std::size_t j = 0; j < lp.variable_count(); ++j) {
            lhs += c.coefficients[j] * sol.x[j];
            mag = std::max(mag, std::abs(c.coefficients[j] * sol.x[j]));
        }
        const double tol = 1e-6 * (1.0 + mag);
        const bool ok = (c.relation == Relation::LessEqual && lhs <= c.rhs + tol) ||
                        (c.relation == Relation::GreaterEqual && lhs >= c.rhs - tol) ||
                        (c.relation == Relation::Equal && std::abs(lhs - c.rhs) <= tol);
        if (!ok) throw LpNumericalBreakdown("optimal point violates a constraint");
    }
    return sol;
}

namespace {

std::string num(double v) {
    if (v == kInfinity) return "inf";
    if (v == -kInfinity) return "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& tok) {
    if (tok == "inf") return kInfinity;
    if (tok == "-inf") return -kInfinity;
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad number '" + tok + "'");
    return v;
}

}  // namespace

std::string lp_to_text(const LinearProgram& lp) {
    std::ostringstream os;
    os << "lp " << lp.variable_count() << ' ' << lp.constraints.size() << '\n';
    os << "min";
    for (double c : lp.objective) os << ' ' << num(c);
    os << '\n';
    for (const auto& row : lp.constraints) {
        os << "row";
        for (double a : row.coefficients) os << ' ' << num(a);
        os << ' ' << (row.relation == Relation::LessEqual ? "<=" : row.relation == Relation::Equal ? "=" : ">=");
        os << ' ' << num(row.rhs) << '\n';
    }
    os << "bounds";
    for (const auto& b : lp.bounds) os << ' ' << num(b.lo) << ' ' << num(b.hi);
    os << '\n';
    return os.str();
}

LinearProgram lp_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string tag;
    std::size_t n = 0, m = 0;
    if (!(in >> tag >> n >> m) || tag != "lp") throw std::invalid_argument("expected 'lp <vars> <constraints>'");
    LinearProgram lp;
    std::string tok;
    if (!(in >> tag) || tag != "min") throw std::invalid_argument("expected 'min'");
    for (std::size_t j = 0; j < n; ++j) {
        in >> tok;
        lp.objective.push_back(parse_num(tok));
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!(in >> tag) || tag != "row") throw std::invalid_argument("expected 'row'");
        LinearConstraint c;
        for (std::size_t j = 0; j < n; ++j) {
            in >> tok;
            c.coefficients.push_back(parse_num(tok));
        }
        in >> tok;
        if (tok == "<=") c.relation = Relation::LessEqual;
        else if (tok == "=") c.relation = Relation::Equal;
        else if (tok == ">=") c.relation = Relation::GreaterEqual;
        else throw std::invalid_argument("bad relation '" + tok + "'");
        in >> tok;
        c.rhs = parse_num(tok);
        lp.constraints.push_back(std::move(c));
    }
    if (!(in >> tag) || tag != "bounds") throw std::invalid_argument("expected 'bounds'");
    for (std::size_t j = 0; j < n; ++j) {
        VariableBounds b;
        in >> tok;
        b.lo = parse_num(tok);
        in >> tok;
        b.hi = parse_num(tok);
        lp.bounds.push_back(b);
    }
    if (!in) throw std::invalid_argument("truncated lp text");
    lp.check();
    return lp;
}

}  // namespace pvhc
