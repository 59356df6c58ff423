#include "eqgrid/lp.hpp"

#include <algorithm>
#include <map>

namespace eqgrid::lp {

int LinearProgram::add_row(double lb, double ub, std::span<const int> cols,
                           std::span<const double> vals) {
    if (cols.size() != vals.size()) throw Error("add_row: cols/vals size mismatch");
    // merge duplicates and keep column indices sorted within the row
    std::map<int, double> merged;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] < 0 || cols[k] >= num_cols())
            throw Error("add_row: column index out of range");
        if (vals[k] != 0.0) merged[cols[k]] += vals[k];
    }
    for (const auto& [col, val] : merged) {
        a_col_.push_back(col);
        a_val_.push_back(val);
    }
    a_ptr_.push_back(static_cast<int>(a_col_.size()));
    row_lb_.push_back(lb);
    row_ub_.push_back(ub);
    return num_rows() - 1;
}

void LinearProgram::add_entry(int row, int col, double val) {
    if (row < 0 || row >= num_rows()) throw Error("add_entry: row out of range");
    if (col < 0 || col >= num_cols()) throw Error("add_entry: column out of range");
    // keep the row sorted
    const int lo = a_ptr_[row], hi = a_ptr_[row + 1];
    auto it = std::lower_bound(a_col_.begin() + lo, a_col_.begin() + hi, col);
    const auto pos = it - a_col_.begin();
    if (it != a_col_.begin() + hi && *it == col) {
        a_val_[pos] += val;
    } else {
        a_col_.insert(it, col);
        a_val_.insert(a_val_.begin() + pos, val);
        for (int r = row + 1; r <= num_rows(); ++r) ++a_ptr_[r];
    }
}

std::vector<double> LinearProgram::row_activity(const std::vector<double>& x) const {
    std::vector<double> act(num_rows(), 0.0);
    for (int i = 0; i < num_rows(); ++i) {
        double acc = 0.0;
        for (int k = a_ptr_[i]; k < a_ptr_[i + 1]; ++k) acc += a_val_[k] * x[a_col_[k]];
        act[i] = acc;
    }
    return act;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::IterationLimit: return "IterationLimit";
        case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

}  // namespace eqgrid::lp
