// Data-parallel kernels used by the solver, each with a serial reference
// twin. The parallel versions assign whole output rows to workers, so they
// are bit-identical to the serial ones for any thread count.
#ifndef EQGRID_KERNELS_HPP
#define EQGRID_KERNELS_HPP

#include <cstddef>
#include <vector>

namespace eqgrid::kernels {

struct Csr {
    int rows = 0, cols = 0;
    std::vector<int> ptr{0};
    std::vector<int> idx;
    std::vector<double> val;
};

// y = A x
void spmv_serial(const Csr& a, const double* x, double* y);
void spmv_parallel(const Csr& a, const double* x, double* y);

// y = A' x (column-parallel over a precomputed transpose pattern)
void spmv_t_serial(const Csr& a, const double* x, double* y);

// Sparsity pattern of the lower triangle of A diag(theta) A' in CSC order:
// for each row i, the sorted neighbor rows j >= i. `col_rows[k]` lists the
// rows touching column k in ascending order.
struct NormalPattern {
    std::vector<std::vector<int>> col_rows;
    std::vector<std::vector<int>> col_pos;  // CSR value slots aligned with col_rows
    std::vector<int> ptr;   // size m+1
    std::vector<int> nbr;   // concatenated neighbor lists (j >= i, ascending)
};

NormalPattern normal_pattern(const Csr& a);

// values[slot] = sum_k A(i,k) theta[k] A(j,k) for the pattern slots, plus
// diag_extra[i] on the diagonal slot.
void normal_fill_serial(const Csr& a, const NormalPattern& pat, const double* theta,
                        const double* diag_extra, double* values);
void normal_fill_parallel(const Csr& a, const NormalPattern& pat, const double* theta,
                          const double* diag_extra, double* values);

}  // namespace eqgrid::kernels

#endif
