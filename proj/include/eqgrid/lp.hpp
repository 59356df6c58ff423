// Linear program container and the solver interface. The engine behind
// solve() is a primal-dual interior-point method (see ipm.cpp); callers only
// depend on this surface: load a problem, solve, read primal values and
// status.
#ifndef EQGRID_LP_HPP
#define EQGRID_LP_HPP

#include <span>
#include <string>
#include <vector>

#include "eqgrid/common.hpp"

namespace eqgrid::lp {

// min c'x  s.t.  row_lb <= A x <= row_ub,  col_lb <= x <= col_ub.
// Rows with row_lb == row_ub are equalities; one-sided rows use +-inf.
class LinearProgram {
public:
    int add_col(double obj, double lb, double ub) {
        obj_.push_back(obj);
        col_lb_.push_back(lb);
        col_ub_.push_back(ub);
        return static_cast<int>(obj_.size()) - 1;
    }

    // Duplicate column indices are summed.
    int add_row(double lb, double ub, std::span<const int> cols, std::span<const double> vals);

    int num_cols() const { return static_cast<int>(obj_.size()); }
    int num_rows() const { return static_cast<int>(row_lb_.size()); }
    std::size_t num_nonzeros() const { return a_col_.size(); }

    void set_obj(int col, double v) { obj_[col] = v; }
    void set_col_bounds(int col, double lb, double ub) { col_lb_[col] = lb; col_ub_[col] = ub; }
    void set_row_bounds(int row, double lb, double ub) { row_lb_[row] = lb; row_ub_[row] = ub; }
    // Appends a coefficient to an existing row (used when relaxation slacks
    // are retrofitted onto already-built constraints).
    void add_entry(int row, int col, double val);

    double obj(int col) const { return obj_[col]; }
    double col_lb(int col) const { return col_lb_[col]; }
    double col_ub(int col) const { return col_ub_[col]; }
    double row_lb(int row) const { return row_lb_[row]; }
    double row_ub(int row) const { return row_ub_[row]; }

    // CSR access for the solver.
    const std::vector<int>& row_ptr() const { return a_ptr_; }
    const std::vector<int>& col_index() const { return a_col_; }
    const std::vector<double>& values() const { return a_val_; }

    std::vector<double> row_activity(const std::vector<double>& x) const;

private:
    std::vector<double> obj_, col_lb_, col_ub_;
    std::vector<double> row_lb_, row_ub_;
    std::vector<int> a_ptr_{0};
    std::vector<int> a_col_;
    std::vector<double> a_val_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string to_string(SolveStatus s);

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
};

struct SolverOptions {
    double tol = 1e-9;        // relative primal/dual/gap tolerance
    int max_iter = 200;
    bool use_parallel = true; // false selects the serial reference kernels
    bool verbose = false;
};

Solution solve(const LinearProgram& problem, const SolverOptions& options = {});

}  // namespace eqgrid::lp

#endif
