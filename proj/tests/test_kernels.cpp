#include <doctest.h>

#include <cstring>
#include <vector>

#include "charlead/kernels.hpp"
#include "charlead/rng.hpp"

using namespace charlead;

namespace {

std::vector<float> random_buf(std::size_t n, RngStream& rng, double lo = -1.0,
                              double hi = 1.0) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

// plain triple loop, the oracle for all three gemm layouts
void naive_nt(std::size_t m, std::size_t n, std::size_t k,
              const std::vector<float>& a, const std::vector<float>& b,
              std::vector<float>& c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                acc += static_cast<double>(a[i * k + p]) *
                       static_cast<double>(b[j * k + p]);
            c[i * n + j] = static_cast<float>(acc);
        }
}

struct ThreadGuard {
    int saved;
    explicit ThreadGuard(int n) : saved(kernels::max_threads()) {
        kernels::set_max_threads(n);
    }
    ~ThreadGuard() { kernels::set_max_threads(saved); }
};

}  // namespace

TEST_CASE("gemm_nt matches a naive oracle") {
    RngStream rng(1, "gemm");
    const std::size_t m = 7, n = 13, k = 9;
    const auto a = random_buf(m * k, rng);
    const auto b = random_buf(n * k, rng);
    std::vector<float> c(m * n), expected(m * n);
    naive_nt(m, n, k, a, b, expected);
    kernels::gemm_nt_ref(m, n, k, a.data(), b.data(), c.data(), false);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-5));
}

TEST_CASE("gemm layouts are mutually consistent") {
    RngStream rng(2, "gemm");
    const std::size_t m = 5, n = 8, k = 6;
    const auto a = random_buf(m * k, rng);
    const auto b = random_buf(k * n, rng);
    // transpose b into nt form
    std::vector<float> bt(n * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    std::vector<float> via_nn(m * n), via_nt(m * n);
    kernels::gemm_nn_ref(m, n, k, a.data(), b.data(), via_nn.data(), false);
    kernels::gemm_nt_ref(m, n, k, a.data(), bt.data(), via_nt.data(), false);
    for (std::size_t i = 0; i < via_nn.size(); ++i)
        CHECK(via_nn[i] == doctest::Approx(via_nt[i]).epsilon(1e-5));

    // tn: c = a^T * b with a stored K x M
    std::vector<float> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
    std::vector<float> via_tn(m * n);
    kernels::gemm_tn_ref(m, n, k, at.data(), b.data(), via_tn.data(), false);
    for (std::size_t i = 0; i < via_nn.size(); ++i)
        CHECK(via_tn[i] == doctest::Approx(via_nn[i]).epsilon(1e-5));
}

TEST_CASE("omp kernels are bitwise equal to the serial reference") {
    RngStream rng(3, "bitwise");
    const std::size_t m = 33, n = 65, k = 31;
    const auto a = random_buf(m * k, rng);
    const auto bt = random_buf(n * k, rng);
    const auto bn = random_buf(k * n, rng);
    const auto akm = random_buf(k * m, rng);

    for (int threads : {2, 3, 7}) {
        std::vector<float> c_ref(m * n, 0.5f), c_omp(m * n, 0.5f);
        kernels::gemm_nt_ref(m, n, k, a.data(), bt.data(), c_ref.data(), true);
        {
            ThreadGuard guard(threads);
            kernels::gemm_nt_omp(m, n, k, a.data(), bt.data(), c_omp.data(),
                                 true);
        }
        CHECK(std::memcmp(c_ref.data(), c_omp.data(),
                          c_ref.size() * sizeof(float)) == 0);

        std::fill(c_ref.begin(), c_ref.end(), 0.25f);
        std::fill(c_omp.begin(), c_omp.end(), 0.25f);
        kernels::gemm_nn_ref(m, n, k, a.data(), bn.data(), c_ref.data(), true);
        {
            ThreadGuard guard(threads);
            kernels::gemm_nn_omp(m, n, k, a.data(), bn.data(), c_omp.data(),
                                 true);
        }
        CHECK(std::memcmp(c_ref.data(), c_omp.data(),
                          c_ref.size() * sizeof(float)) == 0);

        std::fill(c_ref.begin(), c_ref.end(), 0.0f);
        std::fill(c_omp.begin(), c_omp.end(), 0.0f);
        kernels::gemm_tn_ref(m, n, k, akm.data(), bn.data(), c_ref.data(), true);
        {
            ThreadGuard guard(threads);
            kernels::gemm_tn_omp(m, n, k, akm.data(), bn.data(), c_omp.data(),
                                 true);
        }
        CHECK(std::memcmp(c_ref.data(), c_omp.data(),
                          c_ref.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("one-hot kernels equal gemm against a materialized one-hot") {
    RngStream rng(4, "onehot");
    const std::size_t rows = 9, r = 12, d = 17;
    const auto w = random_buf(r * d, rng);
    std::vector<int32_t> cols(rows);
    for (auto& c : cols) c = static_cast<int32_t>(rng.below(d));
    std::vector<float> onehot(rows * d, 0.0f);
    for (std::size_t b = 0; b < rows; ++b)
        onehot[b * d + static_cast<std::size_t>(cols[b])] = 1.0f;

    std::vector<float> direct(rows * r, 0.125f), via_gemm(rows * r, 0.125f);
    kernels::onehot_matmul_ref(rows, r, w.data(), d, cols.data(),
                               direct.data(), true);
    kernels::gemm_nt_ref(rows, r, d, onehot.data(), w.data(), via_gemm.data(),
                         true);
    CHECK(std::memcmp(direct.data(), via_gemm.data(),
                      direct.size() * sizeof(float)) == 0);

    const auto dg = random_buf(rows * r, rng);
    std::vector<float> dw_direct(r * d, 0.0f), dw_gemm(r * d, 0.0f);
    kernels::onehot_matmul_grad_ref(rows, r, d, cols.data(), dg.data(),
                                    dw_direct.data());
    kernels::gemm_tn_ref(r, d, rows, dg.data(), onehot.data(), dw_gemm.data(),
                         true);
    CHECK(std::memcmp(dw_direct.data(), dw_gemm.data(),
                      dw_direct.size() * sizeof(float)) == 0);

    // omp variants bitwise
    std::vector<float> direct_omp(rows * r, 0.125f), dw_omp(r * d, 0.0f);
    {
        ThreadGuard guard(4);
        kernels::onehot_matmul_omp(rows, r, w.data(), d, cols.data(),
                                   direct_omp.data(), true);
        kernels::onehot_matmul_grad_omp(rows, r, d, cols.data(), dg.data(),
                                        dw_omp.data());
    }
    CHECK(std::memcmp(direct.data(), direct_omp.data(),
                      direct.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(dw_direct.data(), dw_omp.data(),
                      dw_direct.size() * sizeof(float)) == 0);
}

TEST_CASE("gather and scatter rows agree between serial and omp") {
    RngStream rng(5, "rows");
    const std::size_t rows = 11, d = 7, vocab = 19;
    const auto e = random_buf(vocab * d, rng);
    std::vector<int32_t> idx(rows);
    for (auto& i : idx) i = static_cast<int32_t>(rng.below(vocab));
    std::vector<float> x_ref(rows * d), x_omp(rows * d);
    kernels::gather_rows_ref(rows, d, e.data(), idx.data(), x_ref.data());
    {
        ThreadGuard guard(3);
        kernels::gather_rows_omp(rows, d, e.data(), idx.data(), x_omp.data());
    }
    CHECK(std::memcmp(x_ref.data(), x_omp.data(), x_ref.size() * sizeof(float)) ==
          0);

    const auto dx = random_buf(rows * d, rng);
    std::vector<float> de_ref(vocab * d, 0.0f), de_omp(vocab * d, 0.0f);
    kernels::scatter_add_rows_ref(rows, d, idx.data(), dx.data(), de_ref.data());
    {
        ThreadGuard guard(3);
        kernels::scatter_add_rows_omp(rows, d, idx.data(), dx.data(),
                                      de_omp.data());
    }
    CHECK(std::memcmp(de_ref.data(), de_omp.data(),
                      de_ref.size() * sizeof(float)) == 0);
}

TEST_CASE("lstm cell and dropout kernels agree between serial and omp") {
    RngStream rng(6, "cell");
    const std::size_t rows = 13, h = 10;
    const auto gates0 = random_buf(rows * 4 * h, rng);
    const auto c_prev = random_buf(rows * h, rng);
    const auto h_prev = random_buf(rows * h, rng);
    std::vector<uint8_t> mask(rows);
    for (std::size_t b = 0; b < rows; ++b) mask[b] = rng.uniform() < 0.7 ? 1 : 0;

    auto gates_ref = gates0, gates_omp = gates0;
    std::vector<float> c_ref(rows * h), h_ref(rows * h), c_omp(rows * h),
        h_omp(rows * h);
    kernels::lstm_cell_forward_ref(rows, h, gates_ref.data(), c_prev.data(),
                                   h_prev.data(), c_ref.data(), h_ref.data(),
                                   mask.data());
    {
        ThreadGuard guard(4);
        kernels::lstm_cell_forward_omp(rows, h, gates_omp.data(), c_prev.data(),
                                       h_prev.data(), c_omp.data(),
                                       h_omp.data(), mask.data());
    }
    CHECK(std::memcmp(c_ref.data(), c_omp.data(), c_ref.size() * sizeof(float)) ==
          0);
    CHECK(std::memcmp(h_ref.data(), h_omp.data(), h_ref.size() * sizeof(float)) ==
          0);
    CHECK(std::memcmp(gates_ref.data(), gates_omp.data(),
                      gates_ref.size() * sizeof(float)) == 0);

    // gate activations stay in range at unmasked rows
    for (std::size_t b = 0; b < rows; ++b) {
        if (!mask[b]) continue;
        for (std::size_t u = 0; u < h; ++u) {
            const float gi = gates_ref[b * 4 * h + u];
            const float gg = gates_ref[b * 4 * h + 2 * h + u];
            CHECK(gi > 0.0f);
            CHECK(gi < 1.0f);
            CHECK(gg >= -1.0f);
            CHECK(gg <= 1.0f);
        }
    }

    // unpack the activated gates into per-gate planes for the backward pass
    std::vector<float> gi(rows * h), gf(rows * h), gg(rows * h), go(rows * h);
    for (std::size_t b = 0; b < rows; ++b)
        for (std::size_t u = 0; u < h; ++u) {
            gi[b * h + u] = gates_ref[b * 4 * h + u];
            gf[b * h + u] = gates_ref[b * 4 * h + h + u];
            gg[b * h + u] = gates_ref[b * 4 * h + 2 * h + u];
            go[b * h + u] = gates_ref[b * 4 * h + 3 * h + u];
        }
    const auto dh_total = random_buf(rows * h, rng);
    auto dc_ref = random_buf(rows * h, rng);
    auto dc_omp = dc_ref;
    std::vector<float> dg_ref(rows * 4 * h), dg_omp(rows * 4 * h);
    std::vector<float> dhc_ref(rows * h), dhc_omp(rows * h);
    kernels::lstm_cell_backward_ref(rows, h, gi.data(), gf.data(), gg.data(),
                                    go.data(), c_ref.data(), c_prev.data(),
                                    dh_total.data(), dc_ref.data(),
                                    dg_ref.data(), dhc_ref.data(), mask.data());
    {
        ThreadGuard guard(4);
        kernels::lstm_cell_backward_omp(
            rows, h, gi.data(), gf.data(), gg.data(), go.data(), c_omp.data(),
            c_prev.data(), dh_total.data(), dc_omp.data(), dg_omp.data(),
            dhc_omp.data(), mask.data());
    }
    CHECK(std::memcmp(dg_ref.data(), dg_omp.data(),
                      dg_ref.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(dhc_ref.data(), dhc_omp.data(),
                      dhc_ref.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(dc_ref.data(), dc_omp.data(),
                      dc_ref.size() * sizeof(float)) == 0);

    const auto act = random_buf(rows * h, rng);
    std::vector<uint8_t> keep(rows * h);
    for (auto& k : keep) k = rng.uniform() < 0.7 ? 1 : 0;
    std::vector<float> out_ref(rows * h), out_omp(rows * h);
    kernels::dropout_apply_ref(rows * h, act.data(), keep.data(),
                               1.0f / 0.7f, out_ref.data());
    {
        ThreadGuard guard(4);
        kernels::dropout_apply_omp(rows * h, act.data(), keep.data(),
                                   1.0f / 0.7f, out_omp.data());
    }
    CHECK(std::memcmp(out_ref.data(), out_omp.data(),
                      out_ref.size() * sizeof(float)) == 0);
}

TEST_CASE("masked rows carry state through the cell") {
    const std::size_t h = 4;
    std::vector<float> gates(4 * h, 100.0f);  // would saturate if applied
    std::vector<float> c_prev = {1.0f, -2.0f, 0.5f, 0.0f};
    std::vector<float> h_prev = {0.1f, 0.2f, -0.3f, 0.4f};
    std::vector<float> c(h), h_out(h);
    const uint8_t mask = 0;
    kernels::lstm_cell_forward_ref(1, h, gates.data(), c_prev.data(),
                                   h_prev.data(), c.data(), h_out.data(), &mask);
    CHECK(c == c_prev);
    CHECK(h_out == h_prev);
}
