// Times the serial reference kernels against the OpenMP versions at the
// shapes the training loop actually uses, plus a full train step.
// Usage: bench_kernels [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "charlead/batching.hpp"
#include "charlead/kernels.hpp"
#include "charlead/nn_core.hpp"
#include "charlead/rng.hpp"
#include "charlead/synth_data.hpp"
#include "charlead/text_encoding.hpp"

using namespace charlead;

namespace {

using Clock = std::chrono::steady_clock;

double time_of(int reps, const auto& fn) {
    fn();  // warmup
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double>(Clock::now() - t0).count() /
           static_cast<double>(reps);
}

std::vector<float> random_buf(std::size_t n, RngStream& rng) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

void bench_gemm(const char* name, std::size_t m, std::size_t n, std::size_t k,
                int threads) {
    RngStream rng(7, "bench");
    const std::vector<float> a = random_buf(m * k, rng);
    const std::vector<float> b = random_buf(n * k, rng);
    std::vector<float> c(m * n);
    const int reps = 2000;
    const double serial = time_of(reps, [&] {
        kernels::gemm_nt_ref(m, n, k, a.data(), b.data(), c.data(), false);
    });
    kernels::set_max_threads(threads);
    const double parallel = time_of(reps, [&] {
        kernels::gemm_nt_omp(m, n, k, a.data(), b.data(), c.data(), false);
    });
    kernels::set_max_threads(1);
    const double flops = 2.0 * static_cast<double>(m * n * k);
    std::printf("%-28s %8.2f GF/s serial   %8.2f GF/s omp(%d)   speedup %.2fx\n",
                name, flops / serial / 1e9, flops / parallel / 1e9, threads,
                serial / parallel);
}

void bench_train_step(int threads) {
    // desk-scale shape: 4x64 model, batch 64, median-ish length 68
    GeneratorConfig gen;
    gen.n = 64;
    gen.seed = 11;
    const std::vector<LeadSample> samples = generate(gen);
    std::vector<std::string> corpus;
    for (const LeadSample& s : samples) corpus.push_back(s.text);
    const CharVocab vocab = build_vocab(corpus);
    std::vector<EncodedSequence> enc;
    for (const LeadSample& s : samples) enc.push_back(encode(s.text, vocab));
    RngStream batch_rng(3, "bench.batch");
    const std::vector<PaddedBatch> batches =
        make_batches(enc, BatchingMode::variable(64, 16), batch_rng);
    const PaddedBatch& batch = batches.front();

    ModelConfig cfg;
    cfg.vocab_size = vocab.size();
    cfg.num_layers = 4;
    cfg.hidden_units = 64;
    cfg.dropout_rate = 0.30;
    ModelParams<float> params = init_params<float>(cfg, 5);
    std::vector<float> labels(batch.rows);
    for (std::size_t b = 0; b < batch.rows; ++b)
        labels[b] = static_cast<float>(samples[batch.sample_ids[b]].label);

    auto step = [&] {
        RngStream drop(9, "bench.dropout");
        ForwardResult<float> fwd = forward(params, batch, Phase::Train, &drop);
        BackwardResult<float> bwd =
            backward(params, fwd.cache, batch, std::span<const float>(labels));
        volatile float sink = bwd.loss;
        (void)sink;
    };
    const int reps = 30;
    kernels::set_max_threads(1);
    const double serial = time_of(reps, step);
    kernels::set_max_threads(threads);
    const double parallel = time_of(reps, step);
    kernels::set_max_threads(1);
    std::printf(
        "%-28s %8.2f ms serial     %8.2f ms omp(%d)      speedup %.2fx\n",
        "train fwd+bwd (4x64, B=64)", serial * 1e3, parallel * 1e3, threads,
        serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 2;
    if (argc > 1) threads = std::atoi(argv[1]);
    if (threads < 1) threads = 1;
    std::printf("kernel benchmarks, serial reference vs OpenMP (%d threads)\n\n",
                threads);
    bench_gemm("gemm_nt 64x256x64 (gates)", 64, 256, 64, threads);
    bench_gemm("gemm_nt 64x256x128", 64, 256, 128, threads);
    bench_gemm("gemm_nt 64x1024x256 (wide)", 64, 1024, 256, threads);
    bench_train_step(threads);
    return 0;
}
