#include "eqgrid/kernels.hpp"

#include <algorithm>

#include "eqgrid/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace eqgrid::kernels {

void spmv_serial(const Csr& a, const double* x, double* y) {
    for (int i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) acc += a.val[k] * x[a.idx[k]];
        y[i] = acc;
    }
}

void spmv_parallel(const Csr& a, const double* x, double* y) {
    parallel_for(static_cast<std::size_t>(a.rows), [&](std::size_t i) {
        double acc = 0.0;
        for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) acc += a.val[k] * x[a.idx[k]];
        y[i] = acc;
    });
}

void spmv_t_serial(const Csr& a, const double* x, double* y) {
    std::fill(y, y + a.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) y[a.idx[k]] += a.val[k] * xi;
    }
}

NormalPattern normal_pattern(const Csr& a) {
    NormalPattern pat;
    pat.col_rows.assign(a.cols, {});
    pat.col_pos.assign(a.cols, {});
    for (int i = 0; i < a.rows; ++i) {
        for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
            pat.col_rows[a.idx[k]].push_back(i);
            pat.col_pos[a.idx[k]].push_back(k);
        }
    }

    pat.ptr.assign(a.rows + 1, 0);
    std::vector<std::vector<int>> nbr(a.rows);
    std::vector<char> mark(a.rows, 0);
    for (int i = 0; i < a.rows; ++i) {
        auto& out = nbr[i];
        out.push_back(i);  // diagonal always present
        mark[i] = 1;
        for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
            const auto& rows = pat.col_rows[a.idx[k]];
            auto it = std::lower_bound(rows.begin(), rows.end(), i);
            for (; it != rows.end(); ++it) {
                if (!mark[*it]) {
                    mark[*it] = 1;
                    out.push_back(*it);
                }
            }
        }
        std::sort(out.begin(), out.end());
        for (int j : out) mark[j] = 0;
        pat.ptr[i + 1] = pat.ptr[i] + static_cast<int>(out.size());
    }
    pat.nbr.reserve(pat.ptr[a.rows]);
    for (int i = 0; i < a.rows; ++i) pat.nbr.insert(pat.nbr.end(), nbr[i].begin(), nbr[i].end());
    return pat;
}

namespace {

// Accumulates one output row of the normal matrix into `values` using a
// caller-provided dense scratch buffer (zeroed on entry and on exit).
inline void fill_row(const Csr& a, const NormalPattern& pat, const double* theta,
                     const double* diag_extra, int i, double* acc, double* values) {
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
        const int col = a.idx[k];
        const double aik_theta = a.val[k] * theta[col];
        const auto& rows = pat.col_rows[col];
        const auto& pos = pat.col_pos[col];
        const std::size_t start =
            std::lower_bound(rows.begin(), rows.end(), i) - rows.begin();
        for (std::size_t t = start; t < rows.size(); ++t) {
            acc[rows[t]] += aik_theta * a.val[pos[t]];
        }
    }
    for (int s = pat.ptr[i]; s < pat.ptr[i + 1]; ++s) {
        const int j = pat.nbr[s];
        double v = acc[j];
        acc[j] = 0.0;
        if (j == i && diag_extra) v += diag_extra[i];
        values[s] = v;
    }
}

}  // namespace

void normal_fill_serial(const Csr& a, const NormalPattern& pat, const double* theta,
                        const double* diag_extra, double* values) {
    std::vector<double> acc(a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) fill_row(a, pat, theta, diag_extra, i, acc.data(), values);
}

void normal_fill_parallel(const Csr& a, const NormalPattern& pat, const double* theta,
                          const double* diag_extra, double* values) {
#ifdef _OPENMP
    const int nthreads = max_threads();
    std::vector<std::vector<double>> scratch(nthreads, std::vector<double>(a.rows, 0.0));
#pragma omp parallel num_threads(nthreads)
    {
        double* acc = scratch[omp_get_thread_num()].data();
#pragma omp for schedule(static)
        for (int i = 0; i < a.rows; ++i) fill_row(a, pat, theta, diag_extra, i, acc, values);
    }
#else
    normal_fill_serial(a, pat, theta, diag_extra, values);
#endif
}

}  // namespace eqgrid::kernels
