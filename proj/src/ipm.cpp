// Primal-dual interior-point solver (Mehrotra predictor-corrector) for the
// general-form LP in lp.hpp. Inequality rows get a logical variable carrying
// the row bounds, equalities stay direct, and the Newton systems are solved
// through the normal equations A*Theta*A' with a sparse LDL' factorization.
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "eqgrid/kernels.hpp"
#include "eqgrid/lp.hpp"

namespace eqgrid::lp {

namespace {

using kernels::Csr;
using kernels::NormalPattern;

constexpr double kFeasViolation = 1e-7;  // presolve declares infeasibility past this

struct Reduced {
    // surviving problem, in presolved + scaled space
    Csr a;                    // structural part, CSR with sorted rows
    std::vector<double> c, lb, ub;       // per surviving column
    std::vector<double> row_lb, row_ub;  // per surviving row
    std::vector<double> col_scale, row_scale;
    // postsolve bookkeeping
    std::vector<int> col_map;      // orig col -> reduced col or -1 (fixed)
    std::vector<double> fixed_val; // orig col -> value when fixed
    bool infeasible = false;
    bool trivially_solved = false; // no rows survived
};

double finite_or(double v, double fallback) { return std::isfinite(v) ? v : fallback; }

// Bound-propagation presolve: drops never-binding rows, folds fixed columns
// into the rhs, turns singleton rows into column bounds.
Reduced presolve(const LinearProgram& p) {
    const int m = p.num_rows(), n = p.num_cols();
    Reduced red;
    red.col_map.assign(n, -1);
    red.fixed_val.assign(n, 0.0);

    std::vector<double> lb(n), ub(n);
    for (int j = 0; j < n; ++j) {
        lb[j] = p.col_lb(j);
        ub[j] = p.col_ub(j);
        if (lb[j] > ub[j] + 1e-12) {
            red.infeasible = true;
            return red;
        }
    }
    std::vector<double> rlb(m), rub(m);
    for (int i = 0; i < m; ++i) {
        rlb[i] = p.row_lb(i);
        rub[i] = p.row_ub(i);
    }

    const auto& ptr = p.row_ptr();
    const auto& idx = p.col_index();
    const auto& val = p.values();

    std::vector<char> row_alive(m, 1), col_fixed(n, 0);
    bool changed = true;
    for (int pass = 0; pass < 4 && changed; ++pass) {
        changed = false;
        for (int i = 0; i < m; ++i) {
            if (!row_alive[i]) continue;
            // activity bounds over live entries
            double minact = 0.0, maxact = 0.0;
            int live = 0, last_col = -1;
            double last_val = 0.0, fixed_shift = 0.0;
            for (int k = ptr[i]; k < ptr[i + 1]; ++k) {
                const int j = idx[k];
                const double a = val[k];
                if (col_fixed[j]) {
                    fixed_shift += a * red.fixed_val[j];
                    continue;
                }
                ++live;
                last_col = j;
                last_val = a;
                if (a > 0) {
                    minact += a * finite_or(lb[j], -kInf);
                    maxact += a * finite_or(ub[j], kInf);
                } else {
                    minact += a * finite_or(ub[j], kInf);
                    maxact += a * finite_or(lb[j], -kInf);
                }
            }
            const double lo = std::isfinite(rlb[i]) ? rlb[i] - fixed_shift : -kInf;
            const double hi = std::isfinite(rub[i]) ? rub[i] - fixed_shift : kInf;
            if (live == 0) {
                if (0.0 < lo - kFeasViolation || 0.0 > hi + kFeasViolation) {
                    red.infeasible = true;
                    return red;
                }
                row_alive[i] = 0;
                changed = true;
                continue;
            }
            if (minact > hi + kFeasViolation || maxact < lo - kFeasViolation) {
                red.infeasible = true;
                return red;
            }
            if (minact >= lo - 1e-12 && maxact <= hi + 1e-12) {
                row_alive[i] = 0;  // can never bind
                changed = true;
                continue;
            }
            if (live == 1) {
                // convert to a column bound
                double blo = lo / last_val, bhi = hi / last_val;
                if (last_val < 0) std::swap(blo, bhi);
                lb[last_col] = std::max(lb[last_col], blo);
                ub[last_col] = std::min(ub[last_col], bhi);
                if (lb[last_col] > ub[last_col] + kFeasViolation) {
                    red.infeasible = true;
                    return red;
                }
                row_alive[i] = 0;
                changed = true;
            }
        }
        for (int j = 0; j < n; ++j) {
            if (col_fixed[j]) continue;
            if (std::isfinite(lb[j]) && std::isfinite(ub[j]) &&
                ub[j] - lb[j] <= 1e-14 * std::max(1.0, std::abs(lb[j]))) {
                col_fixed[j] = 1;
                red.fixed_val[j] = 0.5 * (lb[j] + ub[j]);
                changed = true;
            }
        }
    }

    // compact columns
    int nn = 0;
    for (int j = 0; j < n; ++j) {
        if (!col_fixed[j]) red.col_map[j] = nn++;
    }
    red.c.resize(nn);
    red.lb.resize(nn);
    red.ub.resize(nn);
    for (int j = 0; j < n; ++j) {
        if (col_fixed[j]) continue;
        const int jj = red.col_map[j];
        red.c[jj] = p.obj(j);
        red.lb[jj] = lb[j];
        red.ub[jj] = ub[j];
    }
    // compact rows
    red.a.cols = nn;
    for (int i = 0; i < m; ++i) {
        if (!row_alive[i]) continue;
        double fixed_shift = 0.0;
        for (int k = ptr[i]; k < ptr[i + 1]; ++k) {
            const int j = idx[k];
            if (col_fixed[j]) {
                fixed_shift += val[k] * red.fixed_val[j];
            } else {
                red.a.idx.push_back(red.col_map[j]);
                red.a.val.push_back(val[k]);
            }
        }
        red.a.ptr.push_back(static_cast<int>(red.a.idx.size()));
        red.row_lb.push_back(std::isfinite(rlb[i]) ? rlb[i] - fixed_shift : -kInf);
        red.row_ub.push_back(std::isfinite(rub[i]) ? rub[i] - fixed_shift : kInf);
    }
    red.a.rows = static_cast<int>(red.row_lb.size());
    red.col_scale.assign(nn, 1.0);
    red.row_scale.assign(red.a.rows, 1.0);
    red.trivially_solved = (red.a.rows == 0);
    // store bounds for postsolve of never-reduced columns
    for (int j = 0; j < n; ++j) {
        if (!col_fixed[j]) continue;
    }
    return red;
}

// Ruiz equilibration in the infinity norm; mutates the reduced problem
// in place and records the applied scales.
void ruiz_scale(Reduced& red) {
    const int m = red.a.rows, n = red.a.cols;
    if (m == 0 || n == 0) return;
    for (int sweep = 0; sweep < 5; ++sweep) {
        std::vector<double> rmax(m, 0.0), cmax(n, 0.0);
        for (int i = 0; i < m; ++i)
            for (int k = red.a.ptr[i]; k < red.a.ptr[i + 1]; ++k)
                rmax[i] = std::max(rmax[i], std::abs(red.a.val[k]));
        for (int i = 0; i < m; ++i) {
            const double s = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
            for (int k = red.a.ptr[i]; k < red.a.ptr[i + 1]; ++k) red.a.val[k] *= s;
            red.row_scale[i] *= s;
        }
        for (int i = 0; i < m; ++i)
            for (int k = red.a.ptr[i]; k < red.a.ptr[i + 1]; ++k)
                cmax[red.a.idx[k]] = std::max(cmax[red.a.idx[k]], std::abs(red.a.val[k]));
        for (int i = 0; i < m; ++i)
            for (int k = red.a.ptr[i]; k < red.a.ptr[i + 1]; ++k) {
                const int j = red.a.idx[k];
                const double s = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
                red.a.val[k] *= s;
            }
        for (int j = 0; j < n; ++j) {
            const double s = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
            red.col_scale[j] *= s;
        }
    }
    // x = C x'  =>  c' = C c, bounds divide by C; rows multiply by R
    for (int j = 0; j < n; ++j) {
        const double cs = red.col_scale[j];
        red.c[j] *= cs;
        if (std::isfinite(red.lb[j])) red.lb[j] /= cs;
        if (std::isfinite(red.ub[j])) red.ub[j] /= cs;
    }
    for (int i = 0; i < m; ++i) {
        const double rs = red.row_scale[i];
        if (std::isfinite(red.row_lb[i])) red.row_lb[i] *= rs;
        if (std::isfinite(red.row_ub[i])) red.row_ub[i] *= rs;
    }
    // normalize the objective so dual magnitudes stay O(1) even with large
    // penalty coefficients; a positive scalar does not move the argmin
    double cmax = 0.0;
    for (double v : red.c) cmax = std::max(cmax, std::abs(v));
    if (cmax > 1.0)
        for (double& v : red.c) v /= cmax;
}

struct IpmWork {
    Csr e;  // [A | -I over inequality rows], m x nt
    std::vector<double> b;       // rhs per row (0 for slack rows)
    std::vector<double> c, lo, hi;
    std::vector<char> has_lo, has_hi;
    int n_struct = 0, nt = 0, m = 0;
};

IpmWork build_ipm(const Reduced& red) {
    IpmWork w;
    const int m = red.a.rows, n = red.a.cols;
    w.m = m;
    w.n_struct = n;
    std::vector<int> slack_col(m, -1);
    int nt = n;
    for (int i = 0; i < m; ++i) {
        const bool equality =
            std::isfinite(red.row_lb[i]) && std::isfinite(red.row_ub[i]) &&
            red.row_ub[i] - red.row_lb[i] <= 1e-14 * std::max(1.0, std::abs(red.row_lb[i]));
        if (!equality) slack_col[i] = nt++;
    }
    w.nt = nt;
    w.c.assign(nt, 0.0);
    w.lo.assign(nt, -kInf);
    w.hi.assign(nt, kInf);
    for (int j = 0; j < n; ++j) {
        w.c[j] = red.c[j];
        w.lo[j] = red.lb[j];
        w.hi[j] = red.ub[j];
    }
    w.b.assign(m, 0.0);
    w.e.rows = m;
    w.e.cols = nt;
    for (int i = 0; i < m; ++i) {
        for (int k = red.a.ptr[i]; k < red.a.ptr[i + 1]; ++k) {
            w.e.idx.push_back(red.a.idx[k]);
            w.e.val.push_back(red.a.val[k]);
        }
        if (slack_col[i] >= 0) {
            w.e.idx.push_back(slack_col[i]);
            w.e.val.push_back(-1.0);
            w.lo[slack_col[i]] = red.row_lb[i];
            w.hi[slack_col[i]] = red.row_ub[i];
        } else {
            w.b[i] = red.row_lb[i];
        }
        w.e.ptr.push_back(static_cast<int>(w.e.idx.size()));
    }
    w.has_lo.assign(nt, 0);
    w.has_hi.assign(nt, 0);
    for (int j = 0; j < nt; ++j) {
        w.has_lo[j] = std::isfinite(w.lo[j]);
        w.has_hi[j] = std::isfinite(w.hi[j]);
    }
    return w;
}

double inf_norm(const std::vector<double>& v) {
    double r = 0.0;
    for (double x : v) r = std::max(r, std::abs(x));
    return r;
}

// Solves a pure bound problem (no rows survived presolve).
SolveStatus solve_trivial(const Reduced& red, std::vector<double>& x) {
    x.resize(red.a.cols);
    for (int j = 0; j < red.a.cols; ++j) {
        const double c = red.c[j];
        if (c > 0) {
            if (!std::isfinite(red.lb[j])) return SolveStatus::Unbounded;
            x[j] = red.lb[j];
        } else if (c < 0) {
            if (!std::isfinite(red.ub[j])) return SolveStatus::Unbounded;
            x[j] = red.ub[j];
        } else {
            x[j] = std::isfinite(red.lb[j]) ? red.lb[j]
                 : (std::isfinite(red.ub[j]) ? red.ub[j] : 0.0);
        }
    }
    return SolveStatus::Optimal;
}

}  // namespace

Solution solve(const LinearProgram& problem, const SolverOptions& opt) {
    Solution sol;
    const int n_orig = problem.num_cols();

    Reduced red = presolve(problem);
    if (red.infeasible) {
        sol.status = SolveStatus::Infeasible;
        return sol;
    }

    auto postsolve = [&](const std::vector<double>& xr) {
        sol.x.assign(n_orig, 0.0);
        for (int j = 0; j < n_orig; ++j) {
            const int jj = red.col_map[j];
            sol.x[j] = (jj >= 0) ? xr[jj] * red.col_scale[jj] : red.fixed_val[j];
        }
        sol.objective = 0.0;
        for (int j = 0; j < n_orig; ++j) sol.objective += problem.obj(j) * sol.x[j];
    };

    if (red.trivially_solved) {
        std::vector<double> xr;
        sol.status = solve_trivial(red, xr);
        if (sol.status == SolveStatus::Optimal) postsolve(xr);
        return sol;
    }

    ruiz_scale(red);
    IpmWork w = build_ipm(red);
    const int m = w.m, nt = w.nt;

    // ---- factorization scaffolding (pattern fixed across iterations) ----
    NormalPattern pat = kernels::normal_pattern(w.e);
    Eigen::SparseMatrix<double> M(m, m);
    {
        Eigen::VectorXi counts(m);
        for (int i = 0; i < m; ++i) counts[i] = pat.ptr[i + 1] - pat.ptr[i];
        M.reserve(counts);
        for (int i = 0; i < m; ++i)
            for (int s = pat.ptr[i]; s < pat.ptr[i + 1]; ++s) M.insert(pat.nbr[s], i) = 0.0;
        M.makeCompressed();
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
    ldlt.analyzePattern(M);

    auto refill = [&](const std::vector<double>& theta, const std::vector<double>& diag) {
        if (opt.use_parallel)
            kernels::normal_fill_parallel(w.e, pat, theta.data(), diag.data(), M.valuePtr());
        else
            kernels::normal_fill_serial(w.e, pat, theta.data(), diag.data(), M.valuePtr());
    };

    const double delta_p = 1e-12, delta_d = 1e-10;

    // ---- starting point ----
    // Least-squares start: x0 is the minimum-norm solution of E x = b pushed
    // strictly inside the bounds, y0 the least-squares dual guess, and the
    // bound duals split the dual residual so r_d starts near zero.
    std::vector<double> x(nt, 0.0), y(m, 0.0), z(nt, 0.0), zu(nt, 0.0);
    {
        std::vector<double> theta0(nt, 1.0), diag0(m, delta_d);
        if (opt.use_parallel)
            kernels::normal_fill_parallel(w.e, pat, theta0.data(), diag0.data(), M.valuePtr());
        else
            kernels::normal_fill_serial(w.e, pat, theta0.data(), diag0.data(), M.valuePtr());
        ldlt.factorize(M);
        std::vector<double> ztilde(w.c);
        if (ldlt.info() == Eigen::Success) {
            Eigen::Map<const Eigen::VectorXd> b_map(w.b.data(), m);
            Eigen::VectorXd v = ldlt.solve(b_map);
            std::vector<double> vv(v.data(), v.data() + m);
            kernels::spmv_t_serial(w.e, vv.data(), x.data());  // x = E' (EE')^-1 b
            std::vector<double> ec(m);
            if (opt.use_parallel) kernels::spmv_parallel(w.e, w.c.data(), ec.data());
            else kernels::spmv_serial(w.e, w.c.data(), ec.data());
            Eigen::Map<const Eigen::VectorXd> ec_map(ec.data(), m);
            Eigen::VectorXd yv = ldlt.solve(ec_map);
            for (int i = 0; i < m; ++i) y[i] = yv[i];
            kernels::spmv_t_serial(w.e, y.data(), ztilde.data());
            for (int j = 0; j < nt; ++j) ztilde[j] = w.c[j] - ztilde[j];
        }
        const double dual_floor = 0.1;
        for (int j = 0; j < nt; ++j) {
            if (w.has_lo[j] && w.has_hi[j]) {
                z[j] = std::max(ztilde[j], 0.0) + dual_floor;
                zu[j] = std::max(-ztilde[j], 0.0) + dual_floor;
                const double width = w.hi[j] - w.lo[j];
                const double margin = 0.01 * width;
                x[j] = std::clamp(x[j], w.lo[j] + margin, w.hi[j] - margin);
            } else if (w.has_lo[j]) {
                z[j] = std::max(ztilde[j], dual_floor);
                x[j] = std::max(x[j], w.lo[j] + std::max(0.1, 0.01 * std::abs(w.lo[j])));
            } else if (w.has_hi[j]) {
                zu[j] = std::max(-ztilde[j], dual_floor);
                x[j] = std::min(x[j], w.hi[j] - std::max(0.1, 0.01 * std::abs(w.hi[j])));
            }
        }
    }

    int n_compl = 0;
    for (int j = 0; j < nt; ++j) n_compl += (w.has_lo[j] ? 1 : 0) + (w.has_hi[j] ? 1 : 0);
    if (n_compl == 0) {
        sol.status = SolveStatus::NumericalFailure;  // cannot happen for our models
        return sol;
    }

    std::vector<double> rp(m), rd(nt), theta(nt), diag(m, 0.0);
    std::vector<double> rhat(nt), rhs(m), dx(nt), dy(m), dz(nt), dzu(nt);
    std::vector<double> dx_aff(nt), dz_aff(nt), dzu_aff(nt);
    std::vector<double> tmp_nt(nt), tmp_m(m);

    const double bnorm = 1.0 + inf_norm(w.b);
    const double cnorm = 1.0 + inf_norm(w.c);

    auto compute_residuals = [&]() {
        // rp = b - E x
        if (opt.use_parallel) kernels::spmv_parallel(w.e, x.data(), tmp_m.data());
        else kernels::spmv_serial(w.e, x.data(), tmp_m.data());
        for (int i = 0; i < m; ++i) rp[i] = w.b[i] - tmp_m[i];
        // rd = c - E'y - z + zu
        kernels::spmv_t_serial(w.e, y.data(), rd.data());
        for (int j = 0; j < nt; ++j) rd[j] = w.c[j] - rd[j] - z[j] + zu[j];
    };

    auto mu_of = [&](const std::vector<double>& xx, const std::vector<double>& zz,
                     const std::vector<double>& zzu) {
        double s = 0.0;
        for (int j = 0; j < nt; ++j) {
            if (w.has_lo[j]) s += (xx[j] - w.lo[j]) * zz[j];
            if (w.has_hi[j]) s += (w.hi[j] - xx[j]) * zzu[j];
        }
        return s / n_compl;
    };

    double mu0 = -1.0;
    double best_composite = kInf;
    int stall = 0;

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        compute_residuals();
        const double mu = mu_of(x, z, zu);
        if (mu0 < 0) mu0 = mu;
        const double relp = inf_norm(rp) / bnorm;
        const double reld = inf_norm(rd) / cnorm;
        double pobj = 0.0;
        for (int j = 0; j < nt; ++j) pobj += w.c[j] * x[j];
        double dobj = 0.0;
        for (int i = 0; i < m; ++i) dobj += w.b[i] * y[i];
        for (int j = 0; j < nt; ++j) {
            if (w.has_lo[j]) dobj += w.lo[j] * z[j];
            if (w.has_hi[j]) dobj -= w.hi[j] * zu[j];
        }
        const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

        if (opt.verbose)
            std::fprintf(stderr, "ipm %3d: mu=%.3e rp=%.3e rd=%.3e gap=%.3e\n", iter, mu,
                         relp, reld, relgap);

        if (relp <= opt.tol && reld <= opt.tol && relgap <= opt.tol) {
            sol.status = SolveStatus::Optimal;
            sol.iterations = iter;
            sol.primal_residual = relp;
            sol.dual_residual = reld;
            sol.gap = relgap;
            std::vector<double> xr(x.begin(), x.begin() + w.n_struct);
            postsolve(xr);
            return sol;
        }

        double xnorm = 0.0, dualnorm = 0.0;
        for (int j = 0; j < nt; ++j) {
            xnorm = std::max(xnorm, std::abs(x[j]));
            dualnorm = std::max(dualnorm, std::max(z[j], zu[j]));
        }
        const bool primal_ok = relp <= 1e3 * opt.tol;

        // unboundedness: objective or iterates diverge while staying feasible
        if (primal_ok && (pobj < -1e10 || (xnorm > 1e9 && reld > 1e3 * opt.tol))) {
            sol.status = SolveStatus::Unbounded;
            sol.iterations = iter;
            return sol;
        }
        // infeasibility: complementarity collapsed or duals diverged while
        // primal feasibility is still violated
        if (!primal_ok && (mu < 1e-10 * std::max(1.0, mu0) || dualnorm > 1e9 || dobj > 1e10)) {
            sol.status = SolveStatus::Infeasible;
            sol.iterations = iter;
            sol.primal_residual = relp;
            return sol;
        }
        // stall: no 1% progress in any optimality measure for 25 iterations
        const double composite = std::max({relp, reld, relgap});
        if (composite < best_composite * 0.99) {
            best_composite = composite;
            stall = 0;
        } else if (++stall > 25) {
            sol.iterations = iter;
            sol.primal_residual = relp;
            if (!primal_ok) sol.status = SolveStatus::Infeasible;
            else if (reld > 1e3 * opt.tol) sol.status = SolveStatus::Unbounded;
            else sol.status = SolveStatus::NumericalFailure;
            return sol;
        }

        // ---- scaling matrix ----
        for (int j = 0; j < nt; ++j) {
            double d = delta_p;
            if (w.has_lo[j]) d += z[j] / (x[j] - w.lo[j]);
            if (w.has_hi[j]) d += zu[j] / (w.hi[j] - x[j]);
            theta[j] = 1.0 / d;
        }
        std::fill(diag.begin(), diag.end(), delta_d);
        refill(theta, diag);
        ldlt.factorize(M);
        if (ldlt.info() != Eigen::Success) {
            sol.status = SolveStatus::NumericalFailure;
            sol.iterations = iter;
            return sol;
        }

        auto solve_newton = [&](const std::vector<double>& rzl, const std::vector<double>& rzu,
                                std::vector<double>& odx, std::vector<double>& ody,
                                std::vector<double>& odz, std::vector<double>& odzu) {
            // rhat = rd - rzl/(x-lo) + rzu/(hi-x)
            for (int j = 0; j < nt; ++j) {
                double v = rd[j];
                if (w.has_lo[j]) v -= rzl[j] / (x[j] - w.lo[j]);
                if (w.has_hi[j]) v += rzu[j] / (w.hi[j] - x[j]);
                rhat[j] = v;
            }
            // rhs = rp + E Theta rhat
            for (int j = 0; j < nt; ++j) tmp_nt[j] = theta[j] * rhat[j];
            if (opt.use_parallel) kernels::spmv_parallel(w.e, tmp_nt.data(), rhs.data());
            else kernels::spmv_serial(w.e, tmp_nt.data(), rhs.data());
            for (int i = 0; i < m; ++i) rhs[i] += rp[i];

            Eigen::Map<const Eigen::VectorXd> rhs_map(rhs.data(), m);
            Eigen::VectorXd dyv = ldlt.solve(rhs_map);
            // one refinement pass against the factorized matrix
            Eigen::VectorXd resid = rhs_map - M.selfadjointView<Eigen::Lower>() * dyv;
            if (resid.lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + rhs_map.lpNorm<Eigen::Infinity>()))
                dyv += ldlt.solve(resid);
            for (int i = 0; i < m; ++i) ody[i] = dyv[i];

            // dx = Theta (E'dy - rhat)
            kernels::spmv_t_serial(w.e, ody.data(), odx.data());
            for (int j = 0; j < nt; ++j) odx[j] = theta[j] * (odx[j] - rhat[j]);
            for (int j = 0; j < nt; ++j) {
                odz[j] = w.has_lo[j] ? (rzl[j] - z[j] * odx[j]) / (x[j] - w.lo[j]) : 0.0;
                odzu[j] = w.has_hi[j] ? (rzu[j] + zu[j] * odx[j]) / (w.hi[j] - x[j]) : 0.0;
            }
        };

        auto step_bounds = [&](const std::vector<double>& odx, const std::vector<double>& odz,
                               const std::vector<double>& odzu, double& ap, double& ad) {
            ap = ad = kInf;
            for (int j = 0; j < nt; ++j) {
                if (w.has_lo[j]) {
                    if (odx[j] < 0) ap = std::min(ap, (w.lo[j] - x[j]) / odx[j]);
                    if (odz[j] < 0) ad = std::min(ad, -z[j] / odz[j]);
                }
                if (w.has_hi[j]) {
                    if (odx[j] > 0) ap = std::min(ap, (w.hi[j] - x[j]) / odx[j]);
                    if (odzu[j] < 0) ad = std::min(ad, -zu[j] / odzu[j]);
                }
            }
        };

        // predictor (affine scaling): complementarity targets zero
        std::vector<double> rzl(nt, 0.0), rzu(nt, 0.0);
        for (int j = 0; j < nt; ++j) {
            if (w.has_lo[j]) rzl[j] = -(x[j] - w.lo[j]) * z[j];
            if (w.has_hi[j]) rzu[j] = -(w.hi[j] - x[j]) * zu[j];
        }
        solve_newton(rzl, rzu, dx_aff, dy, dz_aff, dzu_aff);
        double ap_aff, ad_aff;
        step_bounds(dx_aff, dz_aff, dzu_aff, ap_aff, ad_aff);
        ap_aff = std::min(1.0, ap_aff);
        ad_aff = std::min(1.0, ad_aff);

        double mu_aff = 0.0;
        for (int j = 0; j < nt; ++j) {
            if (w.has_lo[j])
                mu_aff += (x[j] + ap_aff * dx_aff[j] - w.lo[j]) * (z[j] + ad_aff * dz_aff[j]);
            if (w.has_hi[j])
                mu_aff += (w.hi[j] - x[j] - ap_aff * dx_aff[j]) * (zu[j] + ad_aff * dzu_aff[j]);
        }
        mu_aff /= n_compl;
        double sigma = std::pow(std::max(0.0, std::min(1.0, mu_aff / mu)), 3.0);

        // corrector with centering + second-order terms
        for (int j = 0; j < nt; ++j) {
            if (w.has_lo[j])
                rzl[j] = sigma * mu - (x[j] - w.lo[j]) * z[j] - dx_aff[j] * dz_aff[j];
            if (w.has_hi[j])
                rzu[j] = sigma * mu - (w.hi[j] - x[j]) * zu[j] + dx_aff[j] * dzu_aff[j];
        }
        solve_newton(rzl, rzu, dx, dy, dz, dzu);
        double ap, ad;
        step_bounds(dx, dz, dzu, ap, ad);
        ap = std::min(1.0, 0.9995 * ap);
        ad = std::min(1.0, 0.9995 * ad);

        for (int j = 0; j < nt; ++j) {
            x[j] += ap * dx[j];
            z[j] += ad * dz[j];
            zu[j] += ad * dzu[j];
        }
        for (int i = 0; i < m; ++i) y[i] += ad * dy[i];
    }

    sol.status = SolveStatus::IterationLimit;
    sol.iterations = opt.max_iter;
    return sol;
}

}  // namespace eqgrid::lp
