#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "charlead/batching.hpp"
#include "charlead/errors.hpp"
#include "charlead/kernels.hpp"
#include "charlead/rng.hpp"

namespace charlead {

// ---------------------------------------------------------------- config

struct ModelConfig {
    int32_t vocab_size = 0;
    int32_t num_layers = 4;
    int32_t hidden_units = 256;
    double dropout_rate = 0.30;
    int32_t embedding_dim = 0;  // 0 = no embedding layer, one-hot input

    bool has_embedding() const { return embedding_dim > 0; }
    int32_t input_dim(int32_t layer) const {
        if (layer > 0) return hidden_units;
        return has_embedding() ? embedding_dim : vocab_size;
    }
    void validate() const {
        if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
        if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
        if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ConfigError("dropout_rate must be in [0, 1)");
        if (embedding_dim < 0) throw ConfigError("embedding_dim must be >= 0");
    }
};

// ------------------------------------------------------------- parameters
// All learnable tensors live in one flat buffer; the layout lists them in
// checkpoint manifest order. Gate rows are packed [i f g o] * H.

struct TensorSpec {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;  // in elements
    std::size_t count() const { return rows * cols; }
};

struct ParamLayout {
    std::vector<TensorSpec> tensors;
    std::size_t total = 0;

    static ParamLayout for_config(const ModelConfig& cfg);
    const TensorSpec& find(const std::string& name) const;
};

template <typename T>
struct ModelParams {
    ModelConfig config;
    ParamLayout layout;
    std::vector<T> data;
    // When set, the embedding matrix receives no gradient (externally
    // supplied weights stay fixed).
    bool embedding_frozen = false;

    std::span<T> tensor(const std::string& name) {
        const TensorSpec& s = layout.find(name);
        return std::span<T>(data).subspan(s.offset, s.count());
    }
    std::span<const T> tensor(const std::string& name) const {
        const TensorSpec& s = layout.find(name);
        return std::span<const T>(data).subspan(s.offset, s.count());
    }

    std::span<T> w(int l) { return tensor("lstm" + std::to_string(l) + ".W"); }
    std::span<T> u(int l) { return tensor("lstm" + std::to_string(l) + ".U"); }
    std::span<T> b(int l) { return tensor("lstm" + std::to_string(l) + ".b"); }
    std::span<const T> w(int l) const { return tensor("lstm" + std::to_string(l) + ".W"); }
    std::span<const T> u(int l) const { return tensor("lstm" + std::to_string(l) + ".U"); }
    std::span<const T> b(int l) const { return tensor("lstm" + std::to_string(l) + ".b"); }
    std::span<T> head_w() { return tensor("head.w"); }
    std::span<const T> head_w() const { return tensor("head.w"); }
    std::span<T> head_b() { return tensor("head.b"); }
    std::span<const T> head_b() const { return tensor("head.b"); }
    std::span<T> embedding() { return tensor("embedding"); }
    std::span<const T> embedding() const { return tensor("embedding"); }
};

// W, U uniform in +-1/sqrt(fan_in); biases zero except forget gates at 1;
// embedding uniform in +-0.05 from its own stream so the surrounding
// tensors draw identically with and without an embedding layer.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed);

enum class Phase : uint8_t { Train, Eval };

// ------------------------------------------------------------- forward

template <typename T>
struct ForwardCache {
    std::size_t rows = 0, width = 0, layers = 0, hidden = 0;
    // per layer, (t * rows + b) * hidden indexing; gates are post-activation
    std::vector<std::vector<T>> gate_i, gate_f, gate_g, gate_o;
    std::vector<std::vector<T>> cell;    // c_t (carried values at masked steps)
    std::vector<std::vector<T>> h_raw;   // pre-dropout h_t
    std::vector<std::vector<uint8_t>> keep;  // dropout keep masks
    T drop_scale = T(1);
    bool dropout_active = false;
    std::vector<T> logits;  // per row
    std::vector<T> scores;  // sigmoid(logits)
    uint64_t batch_tag = 0;
};

template <typename T>
struct ForwardResult {
    std::vector<T> scores;
    std::vector<T> logits;  // pre-sigmoid head outputs
    ForwardCache<T> cache;  // populated in Train phase only
};

// Scores a padded batch. Padded positions carry h and c over unchanged, so a
// sequence scores identically alone or inside any batch. Train phase applies
// inverted dropout after every layer (top included) and fills the cache;
// Eval ignores rng. Throws on out-of-range indices or non-finite params.
template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, const PaddedBatch& batch,
                         Phase phase, RngStream* rng);

// Convenience wrapper for Eval-phase scoring.
template <typename T>
std::vector<T> forward_eval(const ModelParams<T>& params,
                            const PaddedBatch& batch);

// ------------------------------------------------------------- backward

template <typename T>
struct BackwardResult {
    std::vector<T> grads;  // same layout as params.data
    T loss = T(0);         // mean binary cross-entropy over the batch rows
};

// Exact BPTT through the cached forward pass. Masked timesteps contribute
// nothing; dropout masks are reused from the cache. labels are 0/1 per row.
template <typename T>
BackwardResult<T> backward(const ModelParams<T>& params,
                           const ForwardCache<T>& cache,
                           const PaddedBatch& batch,
                           std::span<const T> labels);

// Mean BCE from scores without a backward pass (stable logit form).
template <typename T>
T bce_from_logits(std::span<const T> logits, std::span<const T> labels);

// ---------------------------------------------------------------- impl

inline ParamLayout ParamLayout::for_config(const ModelConfig& cfg) {
    cfg.validate();
    ParamLayout lay;
    auto add = [&lay](std::string name, std::size_t r, std::size_t c) {
        lay.tensors.push_back({std::move(name), r, c, lay.total});
        lay.total += r * c;
    };
    const auto h = static_cast<std::size_t>(cfg.hidden_units);
    if (cfg.has_embedding())
        add("embedding", static_cast<std::size_t>(cfg.vocab_size),
            static_cast<std::size_t>(cfg.embedding_dim));
    for (int32_t l = 0; l < cfg.num_layers; ++l) {
        const auto d = static_cast<std::size_t>(cfg.input_dim(l));
        add("lstm" + std::to_string(l) + ".W", 4 * h, d);
        add("lstm" + std::to_string(l) + ".U", 4 * h, h);
        add("lstm" + std::to_string(l) + ".b", 1, 4 * h);
    }
    add("head.w", 1, h);
    add("head.b", 1, 1);
    return lay;
}

inline const TensorSpec& ParamLayout::find(const std::string& name) const {
    for (const TensorSpec& t : tensors)
        if (t.name == name) return t;
    throw std::invalid_argument("unknown tensor: " + name);
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ModelParams<T> p;
    p.config = cfg;
    p.layout = ParamLayout::for_config(cfg);
    p.data.assign(p.layout.total, T(0));

    RngStream rng(seed, "init");
    const auto h = static_cast<std::size_t>(cfg.hidden_units);
    for (int32_t l = 0; l < cfg.num_layers; ++l) {
        const auto d = static_cast<std::size_t>(cfg.input_dim(l));
        const double w_bound = 1.0 / std::sqrt(static_cast<double>(d));
        for (T& v : p.w(l)) v = static_cast<T>(rng.uniform(-w_bound, w_bound));
        const double u_bound = 1.0 / std::sqrt(static_cast<double>(h));
        for (T& v : p.u(l)) v = static_cast<T>(rng.uniform(-u_bound, u_bound));
        auto bias = p.b(l);
        for (std::size_t j = h; j < 2 * h; ++j) bias[j] = T(1);  // forget gates
    }
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(h));
    for (T& v : p.head_w())
        v = static_cast<T>(rng.uniform(-head_bound, head_bound));

    if (cfg.has_embedding()) {
        RngStream emb_rng(seed, "init.embedding");
        for (T& v : p.embedding())
            v = static_cast<T>(emb_rng.uniform(-0.05, 0.05));
    }
    return p;
}

namespace detail {

template <typename T>
void check_finite_params(const ModelParams<T>& params) {
    for (T v : params.data)
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericError("non-finite model parameter");
}

inline void check_batch_indices(const PaddedBatch& batch, int32_t vocab_size) {
    for (int32_t idx : batch.indices)
        if (idx < 0 || idx >= vocab_size)
            throw DataError("batch index out of vocabulary range");
}

}  // namespace detail

template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, const PaddedBatch& batch,
                         Phase phase, RngStream* rng) {
    const ModelConfig& cfg = params.config;
    detail::check_finite_params(params);
    detail::check_batch_indices(batch, cfg.vocab_size);

    const std::size_t rows = batch.rows;
    const std::size_t width = batch.width;
    const auto h = static_cast<std::size_t>(cfg.hidden_units);
    const auto layers = static_cast<std::size_t>(cfg.num_layers);
    const bool train = phase == Phase::Train;
    const bool use_dropout = train && cfg.dropout_rate > 0.0;
    if (use_dropout && rng == nullptr)
        throw std::invalid_argument("Train-phase forward needs an rng stream");

    ForwardResult<T> res;
    ForwardCache<T>& cache = res.cache;
    cache.rows = rows;
    cache.width = width;
    cache.layers = layers;
    cache.hidden = h;
    cache.dropout_active = use_dropout;
    cache.drop_scale = use_dropout
                           ? static_cast<T>(1.0 / (1.0 - cfg.dropout_rate))
                           : T(1);
    cache.batch_tag = batch_tag(batch);
    const std::size_t plane = rows * width * h;
    if (train) {
        auto alloc = [&](std::vector<std::vector<T>>& v) {
            v.assign(layers, std::vector<T>(plane));
        };
        alloc(cache.gate_i);
        alloc(cache.gate_f);
        alloc(cache.gate_g);
        alloc(cache.gate_o);
        alloc(cache.cell);
        alloc(cache.h_raw);
        if (use_dropout)
            cache.keep.assign(layers, std::vector<uint8_t>(plane));
    }

    std::vector<T> layer_in;                  // dropped output of the layer below
    std::vector<T> layer_out(plane);          // this layer's dropped output
    std::vector<T> gates(rows * 4 * h);
    std::vector<T> h_prev(rows * h), c_prev(rows * h);
    std::vector<T> h_cur(rows * h), c_cur(rows * h);
    std::vector<T> emb_x;
    if (cfg.has_embedding()) emb_x.resize(rows * cfg.embedding_dim);
    std::vector<uint8_t> step_mask(rows);
    std::vector<int32_t> step_idx(rows);

    for (std::size_t l = 0; l < layers; ++l) {
        std::fill(h_prev.begin(), h_prev.end(), T(0));
        std::fill(c_prev.begin(), c_prev.end(), T(0));
        const std::span<const T> w = params.w(static_cast<int>(l));
        const std::span<const T> u = params.u(static_cast<int>(l));
        const std::span<const T> bias = params.b(static_cast<int>(l));
        const auto d = static_cast<std::size_t>(cfg.input_dim(static_cast<int32_t>(l)));

        for (std::size_t t = 0; t < width; ++t) {
            for (std::size_t b = 0; b < rows; ++b) {
                step_mask[b] = batch.mask[b * width + t];
                step_idx[b] = batch.indices[b * width + t];
            }
            // gate pre-activations: bias, input path, recurrent path
            for (std::size_t b = 0; b < rows; ++b)
                for (std::size_t j = 0; j < 4 * h; ++j)
                    gates[b * 4 * h + j] = bias[j];
            if (l == 0) {
                if (cfg.has_embedding()) {
                    kernels::gather_rows(rows, d, params.embedding().data(),
                                         step_idx.data(), emb_x.data());
                    kernels::gemm_nt(rows, 4 * h, d, emb_x.data(), w.data(),
                                     gates.data(), true);
                } else {
                    kernels::onehot_matmul(rows, 4 * h, w.data(), d,
                                           step_idx.data(), gates.data(), true);
                }
            } else {
                kernels::gemm_nt(rows, 4 * h, d, layer_in.data() + t * rows * h,
                                 w.data(), gates.data(), true);
            }
            kernels::gemm_nt(rows, 4 * h, h, h_prev.data(), u.data(),
                             gates.data(), true);

            kernels::lstm_cell_forward(rows, h, gates.data(), c_prev.data(),
                                       h_prev.data(), c_cur.data(),
                                       h_cur.data(), step_mask.data());

            const std::size_t at = t * rows * h;
            if (train) {
                for (std::size_t b = 0; b < rows; ++b)
                    for (std::size_t j = 0; j < h; ++j) {
                        const std::size_t g = b * 4 * h;
                        cache.gate_i[l][at + b * h + j] = gates[g + j];
                        cache.gate_f[l][at + b * h + j] = gates[g + h + j];
                        cache.gate_g[l][at + b * h + j] = gates[g + 2 * h + j];
                        cache.gate_o[l][at + b * h + j] = gates[g + 3 * h + j];
                    }
                std::copy(c_cur.begin(), c_cur.end(), cache.cell[l].begin() + at);
                std::copy(h_cur.begin(), h_cur.end(),
                          cache.h_raw[l].begin() + at);
            }

            if (use_dropout) {
                uint8_t* keep = cache.keep[l].data() + at;
                for (std::size_t i = 0; i < rows * h; ++i)
                    keep[i] = rng->uniform() >= cfg.dropout_rate ? 1 : 0;
                kernels::dropout_apply(rows * h, h_cur.data(), keep,
                                       cache.drop_scale, layer_out.data() + at);
            } else {
                std::copy(h_cur.begin(), h_cur.end(), layer_out.begin() + at);
            }

            std::swap(h_prev, h_cur);
            std::swap(c_prev, c_cur);
        }
        std::swap(layer_in, layer_out);
        if (layer_out.size() != plane) layer_out.resize(plane);
    }

    // dense head on the top layer's output at each row's last valid step
    const std::span<const T> hw = params.head_w();
    const T hb = params.head_b()[0];
    res.scores.resize(rows);
    res.logits.resize(rows);
    for (std::size_t b = 0; b < rows; ++b) {
        const std::size_t last = batch.lengths[b] - 1;
        const T* hvec = layer_in.data() + (last * rows + b) * h;
        T z = hb;
        for (std::size_t j = 0; j < h; ++j) z += hw[j] * hvec[j];
        res.logits[b] = z;
        res.scores[b] = kernels::sigmoid(z);
    }
    if (train) {
        cache.logits = res.logits;
        cache.scores = res.scores;
    } else {
        res.cache = ForwardCache<T>{};
    }
    return res;
}

template <typename T>
std::vector<T> forward_eval(const ModelParams<T>& params,
                            const PaddedBatch& batch) {
    return forward(params, batch, Phase::Eval, nullptr).scores;
}

template <typename T>
T bce_from_logits(std::span<const T> logits, std::span<const T> labels) {
    double sum = 0.0;
    for (std::size_t b = 0; b < logits.size(); ++b) {
        const double z = static_cast<double>(logits[b]);
        const double y = static_cast<double>(labels[b]);
        sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return static_cast<T>(sum / static_cast<double>(logits.size()));
}

template <typename T>
BackwardResult<T> backward(const ModelParams<T>& params,
                           const ForwardCache<T>& cache,
                           const PaddedBatch& batch,
                           std::span<const T> labels) {
    const ModelConfig& cfg = params.config;
    const std::size_t rows = batch.rows;
    const std::size_t width = batch.width;
    const auto h = static_cast<std::size_t>(cfg.hidden_units);
    const auto layers = static_cast<std::size_t>(cfg.num_layers);
    if (cache.rows != rows || cache.width != width || cache.layers != layers ||
        cache.hidden != h || cache.batch_tag != batch_tag(batch))
        throw std::invalid_argument("forward cache does not match batch");
    if (labels.size() != rows)
        throw std::invalid_argument("labels size does not match batch rows");
    if (cache.logits.empty())
        throw std::invalid_argument("cache was not produced by a Train forward");

    BackwardResult<T> res;
    res.grads.assign(params.layout.total, T(0));
    res.loss = bce_from_logits<T>(cache.logits, labels);

    auto grad_span = [&res, &params](const std::string& name) {
        const TensorSpec& s = params.layout.find(name);
        return std::span<T>(res.grads).subspan(s.offset, s.count());
    };

    const T drop_scale = cache.drop_scale;
    const bool dropout = cache.dropout_active;
    const std::size_t plane = rows * width * h;

    // head: dz = (sigmoid(z) - y) / rows
    std::vector<T> dz(rows);
    for (std::size_t b = 0; b < rows; ++b)
        dz[b] = (cache.scores[b] - labels[b]) / static_cast<T>(rows);

    // gradient w.r.t. the dropped output of the top layer
    std::vector<T> d_above(plane, T(0));
    {
        const std::span<const T> hw = params.head_w();
        std::span<T> d_hw = grad_span("head.w");
        std::span<T> d_hb = grad_span("head.b");
        const std::size_t top = layers - 1;
        for (std::size_t b = 0; b < rows; ++b) {
            const std::size_t last = batch.lengths[b] - 1;
            const std::size_t at = (last * rows + b) * h;
            // recreate the dropped h the head saw
            for (std::size_t j = 0; j < h; ++j) {
                T hd = cache.h_raw[top][at + j];
                if (dropout)
                    hd = cache.keep[top][at + j] ? hd * drop_scale : T(0);
                d_hw[j] += dz[b] * hd;
                d_above[at + j] += dz[b] * hw[j];
            }
            d_hb[0] += dz[b];
        }
    }

    std::vector<T> d_below;
    std::vector<T> dh_total(rows * h);
    std::vector<T> dh_carry(rows * h), dc_carry(rows * h);
    std::vector<T> dg(rows * 4 * h);
    std::vector<T> x_t(rows * h);     // recreated dropped input from below
    std::vector<T> emb_x, d_emb_x;
    if (cfg.has_embedding()) {
        emb_x.resize(rows * cfg.embedding_dim);
        d_emb_x.resize(rows * cfg.embedding_dim);
    }
    std::vector<uint8_t> step_mask(rows);
    std::vector<int32_t> step_idx(rows);
    const std::vector<T> zeros(rows * h, T(0));

    for (std::size_t l = layers; l-- > 0;) {
        const std::string ls = "lstm" + std::to_string(l);
        std::span<T> dw = grad_span(ls + ".W");
        std::span<T> du = grad_span(ls + ".U");
        std::span<T> db = grad_span(ls + ".b");
        const std::span<const T> w = params.w(static_cast<int>(l));
        const std::span<const T> u = params.u(static_cast<int>(l));
        const auto d = static_cast<std::size_t>(cfg.input_dim(static_cast<int32_t>(l)));

        if (l > 0) d_below.assign(plane, T(0));
        std::fill(dh_carry.begin(), dh_carry.end(), T(0));
        std::fill(dc_carry.begin(), dc_carry.end(), T(0));

        for (std::size_t t = width; t-- > 0;) {
            const std::size_t at = t * rows * h;
            for (std::size_t b = 0; b < rows; ++b) {
                step_mask[b] = batch.mask[b * width + t];
                step_idx[b] = batch.indices[b * width + t];
            }
            // total gradient reaching h_t: carried recurrent part plus the
            // upward path through this layer's dropout
            if (dropout) {
                const uint8_t* keep = cache.keep[l].data() + at;
                for (std::size_t i = 0; i < rows * h; ++i)
                    dh_total[i] = dh_carry[i] +
                                  (keep[i] ? d_above[at + i] * drop_scale : T(0));
            } else {
                for (std::size_t i = 0; i < rows * h; ++i)
                    dh_total[i] = dh_carry[i] + d_above[at + i];
            }

            const T* c_prev =
                t == 0 ? zeros.data() : cache.cell[l].data() + at - rows * h;
            kernels::lstm_cell_backward(
                rows, h, cache.gate_i[l].data() + at,
                cache.gate_f[l].data() + at, cache.gate_g[l].data() + at,
                cache.gate_o[l].data() + at, cache.cell[l].data() + at, c_prev,
                dh_total.data(), dc_carry.data(), dg.data(), dh_carry.data(),
                step_mask.data());

            // recurrent path into t-1 and the weight gradients
            kernels::gemm_nn(rows, h, 4 * h, dg.data(), u.data(),
                             dh_carry.data(), true);
            const T* h_prev =
                t == 0 ? zeros.data() : cache.h_raw[l].data() + at - rows * h;
            kernels::gemm_tn(4 * h, h, rows, dg.data(), h_prev, du.data(),
                             true);
            for (std::size_t j = 0; j < 4 * h; ++j) {
                T acc = db[j];
                for (std::size_t b = 0; b < rows; ++b)
                    acc += dg[b * 4 * h + j];
                db[j] = acc;
            }

            if (l == 0) {
                if (cfg.has_embedding()) {
                    kernels::gather_rows(rows, d, params.embedding().data(),
                                         step_idx.data(), emb_x.data());
                    kernels::gemm_tn(4 * h, d, rows, dg.data(), emb_x.data(),
                                     dw.data(), true);
                    if (!params.embedding_frozen) {
                        kernels::gemm_nn(rows, d, 4 * h, dg.data(), w.data(),
                                         d_emb_x.data(), false);
                        kernels::scatter_add_rows(
                            rows, d, step_idx.data(), d_emb_x.data(),
                            grad_span("embedding").data());
                    }
                } else {
                    kernels::onehot_matmul_grad(rows, 4 * h, d,
                                                step_idx.data(), dg.data(),
                                                dw.data());
                }
            } else {
                // recreate the dropped output of the layer below at t
                const T* hb_raw = cache.h_raw[l - 1].data() + at;
                if (dropout)
                    kernels::dropout_apply(rows * h, hb_raw,
                                           cache.keep[l - 1].data() + at,
                                           drop_scale, x_t.data());
                else
                    std::copy(hb_raw, hb_raw + rows * h, x_t.begin());
                kernels::gemm_tn(4 * h, h, rows, dg.data(), x_t.data(),
                                 dw.data(), true);
                kernels::gemm_nn(rows, h, 4 * h, dg.data(), w.data(),
                                 d_below.data() + at, false);
            }
        }
        if (l > 0) std::swap(d_above, d_below);
    }
    return res;
}

}  // namespace charlead
