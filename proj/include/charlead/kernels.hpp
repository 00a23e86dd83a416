#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

// Dense kernels behind the LSTM forward/backward passes. Each kernel exists
// twice: a serial reference (*_ref) and an OpenMP version (*_omp) that
// parallelizes over independent output elements only. Accumulation order per
// output element is identical in both, so results are bitwise equal for any
// thread count. The unsuffixed entry point dispatches on max_threads().
//
// Matrices are row-major, passed as raw pointers with explicit dimensions.

namespace charlead::kernels {

// Worker cap, CHARLEAD_THREADS env var, default 1.
int max_threads();
void set_max_threads(int n);

namespace detail {
inline int& thread_setting() {
    static int n = [] {
        if (const char* env = std::getenv("CHARLEAD_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return 1;
    }();
    return n;
}
}  // namespace detail

inline int max_threads() { return detail::thread_setting(); }
inline void set_max_threads(int n) { detail::thread_setting() = n < 1 ? 1 : n; }

// ---------------------------------------------------------------- gemm_nt
// C[M x N] (+)= A[M x K] * B[N x K]^T   (both operands traversed row-wise)

template <typename T>
void gemm_nt_ref(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc = accumulate ? c[i * n + j] : T(0);
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            c[i * n + j] = acc;
        }
    }
}

template <typename T>
void gemm_nt_omp(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        const T* ai = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc = accumulate ? c[i * n + j] : T(0);
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            c[i * n + j] = acc;
        }
    }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a,
             const T* b, T* c, bool accumulate) {
    if (max_threads() > 1)
        gemm_nt_omp(m, n, k, a, b, c, accumulate);
    else
        gemm_nt_ref(m, n, k, a, b, c, accumulate);
}

// ---------------------------------------------------------------- gemm_nn
// C[M x N] (+)= A[M x K] * B[K x N]

template <typename T>
void gemm_nn_ref(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = a[i * k + p];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

template <typename T>
void gemm_nn_omp(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        T* ci = c + i * n;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        for (std::size_t p = 0; p < k; ++p) {
            const T aip = a[i * k + p];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a,
             const T* b, T* c, bool accumulate) {
    if (max_threads() > 1)
        gemm_nn_omp(m, n, k, a, b, c, accumulate);
    else
        gemm_nn_ref(m, n, k, a, b, c, accumulate);
}

// ---------------------------------------------------------------- gemm_tn
// C[M x N] (+)= A[K x M]^T * B[K x N]  (reduction over the rows of A and B)

template <typename T>
void gemm_tn_ref(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        for (std::size_t p = 0; p < k; ++p) {
            const T api = a[p * m + i];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

template <typename T>
void gemm_tn_omp(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 const T* b, T* c, bool accumulate) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
        T* ci = c + i * n;
        if (!accumulate)
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        for (std::size_t p = 0; p < k; ++p) {
            const T api = a[p * m + i];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a,
             const T* b, T* c, bool accumulate) {
    if (max_threads() > 1)
        gemm_tn_omp(m, n, k, a, b, c, accumulate);
    else
        gemm_tn_ref(m, n, k, a, b, c, accumulate);
}

// ------------------------------------------------------------ one-hot ops
// Forward of a one-hot input against W[R x D]: C[b][j] += W[j][col[b]].
// Equivalent to gemm_nt with a one-hot A, without materializing it.

template <typename T>
void onehot_matmul_ref(std::size_t rows, std::size_t r, const T* w,
                       std::size_t d, const int32_t* cols, T* c,
                       bool accumulate) {
    for (std::size_t b = 0; b < rows; ++b) {
        const std::size_t col = static_cast<std::size_t>(cols[b]);
        T* cb = c + b * r;
        for (std::size_t j = 0; j < r; ++j) {
            const T v = w[j * d + col];
            cb[j] = accumulate ? cb[j] + v : v;
        }
    }
}

template <typename T>
void onehot_matmul_omp(std::size_t rows, std::size_t r, const T* w,
                       std::size_t d, const int32_t* cols, T* c,
                       bool accumulate) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(rows); ++b) {
        const std::size_t col = static_cast<std::size_t>(cols[b]);
        T* cb = c + b * r;
        for (std::size_t j = 0; j < r; ++j) {
            const T v = w[j * d + col];
            cb[j] = accumulate ? cb[j] + v : v;
        }
    }
}

template <typename T>
void onehot_matmul(std::size_t rows, std::size_t r, const T* w, std::size_t d,
                   const int32_t* cols, T* c, bool accumulate) {
    if (max_threads() > 1)
        onehot_matmul_omp(rows, r, w, d, cols, c, accumulate);
    else
        onehot_matmul_ref(rows, r, w, d, cols, c, accumulate);
}

// Gradient counterpart: dW[j][col[b]] += dG[b][j]. Rows of dW are
// independent; the inner loop keeps a fixed order over b so the result
// matches gemm_tn against the materialized one-hot matrix bitwise.

template <typename T>
void onehot_matmul_grad_ref(std::size_t rows, std::size_t r, std::size_t d,
                            const int32_t* cols, const T* dg, T* dw) {
    for (std::size_t j = 0; j < r; ++j) {
        T* dwj = dw + j * d;
        for (std::size_t b = 0; b < rows; ++b)
            dwj[static_cast<std::size_t>(cols[b])] += dg[b * r + j];
    }
}

template <typename T>
void onehot_matmul_grad_omp(std::size_t rows, std::size_t r, std::size_t d,
                            const int32_t* cols, const T* dg, T* dw) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(r); ++j) {
        T* dwj = dw + j * d;
        for (std::size_t b = 0; b < rows; ++b)
            dwj[static_cast<std::size_t>(cols[b])] += dg[b * r + j];
    }
}

template <typename T>
void onehot_matmul_grad(std::size_t rows, std::size_t r, std::size_t d,
                        const int32_t* cols, const T* dg, T* dw) {
    if (max_threads() > 1)
        onehot_matmul_grad_omp(rows, r, d, cols, dg, dw);
    else
        onehot_matmul_grad_ref(rows, r, d, cols, dg, dw);
}

// -------------------------------------------------------------- row ops

// X[b] = E[idx[b]]  (embedding lookup)
template <typename T>
void gather_rows_ref(std::size_t rows, std::size_t d, const T* e,
                     const int32_t* idx, T* x) {
    for (std::size_t b = 0; b < rows; ++b) {
        const T* src = e + static_cast<std::size_t>(idx[b]) * d;
        T* dst = x + b * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
}

template <typename T>
void gather_rows_omp(std::size_t rows, std::size_t d, const T* e,
                     const int32_t* idx, T* x) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(rows); ++b) {
        const T* src = e + static_cast<std::size_t>(idx[b]) * d;
        T* dst = x + b * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
}

template <typename T>
void gather_rows(std::size_t rows, std::size_t d, const T* e,
                 const int32_t* idx, T* x) {
    if (max_threads() > 1)
        gather_rows_omp(rows, d, e, idx, x);
    else
        gather_rows_ref(rows, d, e, idx, x);
}

// dE[idx[b]] += dX[b]; rows of dE may collide, so parallelism runs over
// columns with b kept in order.
template <typename T>
void scatter_add_rows_ref(std::size_t rows, std::size_t d, const int32_t* idx,
                          const T* dx, T* de) {
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t b = 0; b < rows; ++b)
            de[static_cast<std::size_t>(idx[b]) * d + j] += dx[b * d + j];
}

template <typename T>
void scatter_add_rows_omp(std::size_t rows, std::size_t d, const int32_t* idx,
                          const T* dx, T* de) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(d); ++j)
        for (std::size_t b = 0; b < rows; ++b)
            de[static_cast<std::size_t>(idx[b]) * d + j] += dx[b * d + j];
}

template <typename T>
void scatter_add_rows(std::size_t rows, std::size_t d, const int32_t* idx,
                      const T* dx, T* de) {
    if (max_threads() > 1)
        scatter_add_rows_omp(rows, d, idx, dx, de);
    else
        scatter_add_rows_ref(rows, d, idx, dx, de);
}

// ----------------------------------------------------------- LSTM cell
// Pointwise cell update for one timestep over a batch. Gate pre-activations
// arrive packed per row as [i f g o] * H; the same buffer holds the
// activations afterwards. Rows with mask 0 carry h and c over unchanged.

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void lstm_cell_forward_row(std::size_t h, T* gates, const T* c_prev,
                           const T* h_prev, T* c, T* h_out, bool masked) {
    if (masked) {
        for (std::size_t u = 0; u < h; ++u) {
            c[u] = c_prev[u];
            h_out[u] = h_prev[u];
        }
        return;
    }
    T* gi = gates;
    T* gf = gates + h;
    T* gg = gates + 2 * h;
    T* go = gates + 3 * h;
    for (std::size_t u = 0; u < h; ++u) {
        gi[u] = sigmoid(gi[u]);
        gf[u] = sigmoid(gf[u]);
        gg[u] = std::tanh(gg[u]);
        go[u] = sigmoid(go[u]);
        c[u] = gf[u] * c_prev[u] + gi[u] * gg[u];
        h_out[u] = go[u] * std::tanh(c[u]);
    }
}

template <typename T>
void lstm_cell_forward_ref(std::size_t rows, std::size_t h, T* gates,
                           const T* c_prev, const T* h_prev, T* c, T* h_out,
                           const uint8_t* mask) {
    for (std::size_t b = 0; b < rows; ++b)
        lstm_cell_forward_row(h, gates + b * 4 * h, c_prev + b * h,
                              h_prev + b * h, c + b * h, h_out + b * h,
                              mask[b] == 0);
}

template <typename T>
void lstm_cell_forward_omp(std::size_t rows, std::size_t h, T* gates,
                           const T* c_prev, const T* h_prev, T* c, T* h_out,
                           const uint8_t* mask) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(rows); ++b)
        lstm_cell_forward_row(h, gates + b * 4 * h, c_prev + b * h,
                              h_prev + b * h, c + b * h, h_out + b * h,
                              mask[b] == 0);
}

template <typename T>
void lstm_cell_forward(std::size_t rows, std::size_t h, T* gates,
                       const T* c_prev, const T* h_prev, T* c, T* h_out,
                       const uint8_t* mask) {
    if (max_threads() > 1)
        lstm_cell_forward_omp(rows, h, gates, c_prev, h_prev, c, h_out, mask);
    else
        lstm_cell_forward_ref(rows, h, gates, c_prev, h_prev, c, h_out, mask);
}

// Pointwise backward for one timestep. Consumes the total gradient reaching
// h_t (dh_total) and the carried dc, produces packed pre-activation gate
// gradients dG (zero at masked rows) and updates the carried dh/dc for t-1.
// The matrix parts (dG*U, dG^T*X, ...) run through the gemm kernels outside.

template <typename T>
void lstm_cell_backward_row(std::size_t h, const T* gi, const T* gf,
                            const T* gg, const T* go, const T* c_t,
                            const T* c_prev, const T* dh_total, T* dc_carry,
                            T* dg, T* dh_carry, bool masked) {
    if (masked) {
        // forward copied state through, so gradients pass back unchanged
        for (std::size_t u = 0; u < h; ++u) {
            dh_carry[u] = dh_total[u];
            for (std::size_t g4 = 0; g4 < 4; ++g4) dg[g4 * h + u] = T(0);
        }
        return;
    }
    T* dgi = dg;
    T* dgf = dg + h;
    T* dgg = dg + 2 * h;
    T* dgo = dg + 3 * h;
    for (std::size_t u = 0; u < h; ++u) {
        const T tc = std::tanh(c_t[u]);
        const T dho = dh_total[u];
        const T dc = dho * go[u] * (T(1) - tc * tc) + dc_carry[u];
        dgi[u] = dc * gg[u] * gi[u] * (T(1) - gi[u]);
        dgf[u] = dc * c_prev[u] * gf[u] * (T(1) - gf[u]);
        dgg[u] = dc * gi[u] * (T(1) - gg[u] * gg[u]);
        dgo[u] = dho * tc * go[u] * (T(1) - go[u]);
        dc_carry[u] = dc * gf[u];
        dh_carry[u] = T(0);  // the recurrent path dG*U^T is added outside
    }
}

template <typename T>
void lstm_cell_backward_ref(std::size_t rows, std::size_t h, const T* gi,
                            const T* gf, const T* gg, const T* go,
                            const T* c_t, const T* c_prev, const T* dh_total,
                            T* dc_carry, T* dg, T* dh_carry,
                            const uint8_t* mask) {
    for (std::size_t b = 0; b < rows; ++b)
        lstm_cell_backward_row(h, gi + b * h, gf + b * h, gg + b * h,
                               go + b * h, c_t + b * h, c_prev + b * h,
                               dh_total + b * h, dc_carry + b * h,
                               dg + b * 4 * h, dh_carry + b * h, mask[b] == 0);
}

template <typename T>
void lstm_cell_backward_omp(std::size_t rows, std::size_t h, const T* gi,
                            const T* gf, const T* gg, const T* go,
                            const T* c_t, const T* c_prev, const T* dh_total,
                            T* dc_carry, T* dg, T* dh_carry,
                            const uint8_t* mask) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(rows); ++b)
        lstm_cell_backward_row(h, gi + b * h, gf + b * h, gg + b * h,
                               go + b * h, c_t + b * h, c_prev + b * h,
                               dh_total + b * h, dc_carry + b * h,
                               dg + b * 4 * h, dh_carry + b * h, mask[b] == 0);
}

template <typename T>
void lstm_cell_backward(std::size_t rows, std::size_t h, const T* gi,
                        const T* gf, const T* gg, const T* go, const T* c_t,
                        const T* c_prev, const T* dh_total, T* dc_carry,
                        T* dg, T* dh_carry, const uint8_t* mask) {
    if (max_threads() > 1)
        lstm_cell_backward_omp(rows, h, gi, gf, gg, go, c_t, c_prev, dh_total,
                               dc_carry, dg, dh_carry, mask);
    else
        lstm_cell_backward_ref(rows, h, gi, gf, gg, go, c_t, c_prev, dh_total,
                               dc_carry, dg, dh_carry, mask);
}

// -------------------------------------------------------------- dropout

// out[i] = keep[i] ? in[i] * scale : 0
template <typename T>
void dropout_apply_ref(std::size_t n, const T* in, const uint8_t* keep,
                       T scale, T* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = keep[i] ? in[i] * scale : T(0);
}

template <typename T>
void dropout_apply_omp(std::size_t n, const T* in, const uint8_t* keep,
                       T scale, T* out) {
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = keep[i] ? in[i] * scale : T(0);
}

template <typename T>
void dropout_apply(std::size_t n, const T* in, const uint8_t* keep, T scale,
                   T* out) {
    if (max_threads() > 1)
        dropout_apply_omp(n, in, keep, scale, out);
    else
        dropout_apply_ref(n, in, keep, scale, out);
}

}  // namespace charlead::kernels
