#include "charlead/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "charlead/batching.hpp"
#include "charlead/errors.hpp"
#include "charlead/nn_core.hpp"
#include "charlead/optim.hpp"
#include "charlead/rng.hpp"

namespace charlead {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<EncodedSequence> encode_all(const std::vector<LeadSample>& samples,
                                        const CharVocab& vocab) {
    std::vector<EncodedSequence> out;
    out.reserve(samples.size());
    for (const LeadSample& s : samples) out.push_back(encode(s.text, vocab));
    return out;
}

std::vector<float> labels_of(const std::vector<LeadSample>& samples) {
    std::vector<float> y;
    y.reserve(samples.size());
    for (const LeadSample& s : samples) y.push_back(static_cast<float>(s.label));
    return y;
}

struct ScoredSet {
    std::vector<double> scores;  // dataset order
    std::vector<double> logits;
};

// Eval-phase scoring in Variable batches; scores land back in dataset
// order. Batch grouping cannot change the result: padded rows carry state
// over, so each row scores exactly as it would alone.
ScoredSet score_encoded(const ModelParams<float>& params,
                        std::span<const EncodedSequence> dataset,
                        std::size_t batch_size) {
    ScoredSet out;
    out.scores.resize(dataset.size());
    out.logits.resize(dataset.size());
    RngStream rng(0, "eval.batching");
    const BatchingMode mode = BatchingMode::variable(batch_size, 16);
    for (const PaddedBatch& batch : make_batches(dataset, mode, rng)) {
        ForwardResult<float> fwd = forward(params, batch, Phase::Eval, nullptr);
        for (std::size_t b = 0; b < batch.rows; ++b) {
            out.scores[batch.sample_ids[b]] = fwd.scores[b];
            out.logits[batch.sample_ids[b]] = fwd.logits[b];
        }
    }
    return out;
}

double mean_bce(std::span<const double> logits, std::span<const float> labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double y = labels[i];
        sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return sum / static_cast<double>(logits.size());
}

uint64_t train_config_fingerprint(const TrainConfig& c) {
    std::ostringstream os;
    os << c.model.num_layers << '|' << c.model.hidden_units << '|'
       << c.model.dropout_rate << '|' << c.model.embedding_dim << '|'
       << c.schedule.adam_epochs << '|' << c.schedule.sgd_epochs << '|'
       << c.schedule.adam_lr << '|' << c.schedule.sgd_lr << '|' << c.momentum
       << '|' << c.clip_norm << '|'
       << (c.batching.kind == BatchingMode::Kind::Variable ? "variable"
                                                           : "fixed")
       << '|' << c.batching.batch_size << '|' << c.batching.max_len << '|'
       << c.batching.sort_window << '|' << c.seed << '|' << c.patience << '|'
       << c.embedding_file;
    return fnv1a64(os.str());
}

EvalReport report_from_scores(const std::vector<double>& scores,
                              const std::vector<double>& logits,
                              const std::vector<float>& labels) {
    EvalReport report;
    report.n = scores.size();
    report.mean_loss = mean_bce(logits, labels);
    std::vector<double> y(labels.begin(), labels.end());
    try {
        report.r = pearson_r(scores, y);
        report.p = p_value(*report.r, report.n);
    } catch (const DataError& e) {
        report.r.reset();
        report.p.reset();
        report.correlation_error = e.what();
    }
    return report;
}

}  // namespace

TrainResult train(const TrainConfig& config,
                  const std::vector<LeadSample>& train_set,
                  const std::vector<LeadSample>& valid_set,
                  std::ostream* info) {
    config.schedule.validate();
    config.batching.validate();
    if (train_set.empty()) throw DataError("training set is empty");
    if (valid_set.empty()) throw DataError("validation set is empty");

    // vocabulary comes from the training split only
    std::vector<std::string> corpus;
    corpus.reserve(train_set.size());
    for (const LeadSample& s : train_set) corpus.push_back(s.text);
    const CharVocab vocab = build_vocab(corpus);

    ModelConfig mcfg = config.model;
    mcfg.vocab_size = vocab.size();
    bool freeze_embedding = false;
    EmbeddingMatrix pretrained;
    if (!config.embedding_file.empty()) {
        pretrained = load_embedding_matrix(config.embedding_file);
        if (pretrained.rows != static_cast<std::size_t>(vocab.size()))
            throw DataError("embedding matrix has " +
                            std::to_string(pretrained.rows) +
                            " rows, vocabulary needs " +
                            std::to_string(vocab.size()));
        mcfg.embedding_dim = static_cast<int32_t>(pretrained.cols);
        freeze_embedding = true;
    }
    mcfg.validate();

    const std::vector<EncodedSequence> train_enc = encode_all(train_set, vocab);
    const std::vector<EncodedSequence> valid_enc = encode_all(valid_set, vocab);
    const std::vector<float> train_labels = labels_of(train_set);
    const std::vector<float> valid_labels = labels_of(valid_set);

    ModelParams<float> params = init_params<float>(mcfg, config.seed);
    if (freeze_embedding) {
        auto emb = params.embedding();
        std::copy(pretrained.values.begin(), pretrained.values.end(),
                  emb.begin());
        params.embedding_frozen = true;
    }

    RunLog log;
    log.seed = config.seed;
    log.best_valid_loss = std::numeric_limits<double>::infinity();
    std::vector<float> best_params = params.data;

    AdamState<float> adam(params.data.size());
    std::optional<NesterovState<float>> nesterov;
    RngStream dropout_rng(config.seed, "dropout");

    std::vector<float> batch_labels;
    const int32_t total_epochs = config.schedule.total_epochs();
    for (int32_t epoch = 1; epoch <= total_epochs; ++epoch) {
        const auto t0 = Clock::now();
        const EpochOptimizer opt = optimizer_for_epoch(config.schedule, epoch);
        if (opt.kind == OptimizerKind::NesterovSgd && !nesterov)
            nesterov.emplace(params.data.size(), config.momentum);

        RngStream shuffle_rng(config.seed, "shuffle",
                              static_cast<uint64_t>(epoch));
        const std::vector<PaddedBatch> batches =
            make_batches(train_enc, config.batching, shuffle_rng);

        double loss_sum = 0.0;
        std::size_t rows_seen = 0;
        uint64_t cells = 0;
        for (const PaddedBatch& batch : batches) {
            cells += batch.cells();
            batch_labels.resize(batch.rows);
            for (std::size_t b = 0; b < batch.rows; ++b)
                batch_labels[b] = train_labels[batch.sample_ids[b]];

            ForwardResult<float> fwd =
                forward(params, batch, Phase::Train, &dropout_rng);
            BackwardResult<float> bwd =
                backward(params, fwd.cache, batch, std::span<const float>(batch_labels));
            if (!std::isfinite(static_cast<double>(bwd.loss)))
                throw NumericError("non-finite training loss at epoch " +
                                   std::to_string(epoch));
            clip_gradients(std::span<float>(bwd.grads), config.clip_norm);
            if (opt.kind == OptimizerKind::Adam)
                adam_step(std::span<float>(params.data),
                          std::span<const float>(bwd.grads), adam, opt.lr);
            else
                nesterov_step(std::span<float>(params.data),
                              std::span<const float>(bwd.grads), *nesterov,
                              opt.lr);
            loss_sum += static_cast<double>(bwd.loss) *
                        static_cast<double>(batch.rows);
            rows_seen += batch.rows;
        }

        const ScoredSet valid_scored =
            score_encoded(params, valid_enc, config.batching.batch_size);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = optimizer_name(opt.kind);
        rec.train_loss = loss_sum / static_cast<double>(rows_seen);
        rec.valid_loss = mean_bce(valid_scored.logits, valid_labels);
        if (!std::isfinite(rec.valid_loss))
            throw NumericError("non-finite validation loss at epoch " +
                               std::to_string(epoch));
        try {
            std::vector<double> y(valid_labels.begin(), valid_labels.end());
            rec.valid_r = pearson_r(valid_scored.scores, y);
        } catch (const DataError&) {
            rec.valid_r.reset();
        }
        rec.computed_cells = cells;
        rec.wall_seconds = seconds_since(t0);
        log.total_computed_cells += cells;
        log.total_wall_seconds += rec.wall_seconds;

        if (rec.valid_loss < log.best_valid_loss) {
            log.best_valid_loss = rec.valid_loss;
            log.best_epoch = epoch;
            best_params = params.data;
        }
        if (!log.convergence_confirmed &&
            epoch - log.best_epoch >= config.patience) {
            log.convergence_confirmed = true;
            log.epochs_to_convergence = log.best_epoch;
        }
        log.epochs.push_back(rec);

        if (info) {
            (*info) << "epoch " << epoch << "/" << total_epochs << " ["
                    << rec.phase << "] train_loss=" << rec.train_loss
                    << " valid_loss=" << rec.valid_loss;
            if (rec.valid_r) (*info) << " valid_r=" << *rec.valid_r;
            (*info) << " cells=" << rec.computed_cells << " ("
                    << rec.wall_seconds << "s)\n";
        }
    }
    if (!log.convergence_confirmed)
        log.epochs_to_convergence = log.best_epoch;
    if (log.epochs.empty()) log.best_valid_loss = 0.0;

    Checkpoint ckpt;
    ckpt.config = mcfg;
    ckpt.vocab_chars = vocab.real_chars();
    ckpt.params = std::move(best_params);
    ckpt.provenance.config_hash = train_config_fingerprint(config);
    ckpt.provenance.epoch = log.best_epoch;
    ckpt.provenance.rng_seed = config.seed;
    return {std::move(ckpt), std::move(log)};
}

TrainResult train_from_paths(const TrainConfig& config, std::ostream* info) {
    const std::vector<LeadSample> train_set = read_jsonl(config.train_path);
    const std::vector<LeadSample> valid_set = read_jsonl(config.valid_path);
    return train(config, train_set, valid_set, info);
}

std::vector<double> score_dataset(const Checkpoint& ckpt,
                                  const std::vector<LeadSample>& dataset) {
    if (dataset.empty()) throw DataError("empty dataset");
    const CharVocab vocab = ckpt.vocab();
    const ModelParams<float> params = ckpt.model();
    const std::vector<EncodedSequence> enc = encode_all(dataset, vocab);
    return score_encoded(params, enc, 64).scores;
}

Evaluation evaluate(const Checkpoint& ckpt,
                    const std::vector<LeadSample>& dataset) {
    if (dataset.empty()) throw DataError("empty dataset");
    const CharVocab vocab = ckpt.vocab();
    const ModelParams<float> params = ckpt.model();
    const std::vector<EncodedSequence> enc = encode_all(dataset, vocab);
    const std::vector<float> labels = labels_of(dataset);
    const ScoredSet scored = score_encoded(params, enc, 64);

    Evaluation out;
    out.report = report_from_scores(scored.scores, scored.logits, labels);
    ScorePairs pairs;
    pairs.x = scored.scores;
    pairs.y.assign(labels.begin(), labels.end());
    const std::vector<double> bounds = default_bucket_boundaries();
    out.buckets = bucket_report(pairs, bounds);
    return out;
}

std::vector<LeadSample> export_scores(const Checkpoint& ckpt,
                                      std::vector<LeadSample> dataset) {
    const std::vector<double> scores = score_dataset(ckpt, dataset);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        dataset[i].rnn_score = scores[i];
    return dataset;
}

// ------------------------------------------------------------ downstream

namespace {

struct DesignMatrix {
    std::vector<double> x;  // n * dim
    std::vector<double> y;
    std::size_t n = 0;
    std::size_t dim = 0;
};

DesignMatrix design_matrix(const std::vector<LeadSample>& dataset,
                           bool use_rnn_score) {
    DesignMatrix m;
    m.n = dataset.size();
    const std::size_t nf = dataset.front().features.size();
    for (const LeadSample& s : dataset) {
        if (s.features.size() != nf)
            throw DataError("inconsistent tabular feature count");
        if (use_rnn_score && !s.rnn_score)
            throw DataError("rnn_score missing; run export-scores first");
    }
    m.dim = nf + (use_rnn_score ? 1 : 0);
    if (m.dim == 0) throw DataError("dataset has no tabular features");
    m.x.reserve(m.n * m.dim);
    m.y.reserve(m.n);
    for (const LeadSample& s : dataset) {
        m.x.insert(m.x.end(), s.features.begin(), s.features.end());
        if (use_rnn_score) m.x.push_back(*s.rnn_score);
        m.y.push_back(static_cast<double>(s.label));
    }
    return m;
}

double logistic_loss(const DesignMatrix& m, std::span<const std::size_t> idx,
                     const std::vector<double>& w, double bias, double l2,
                     double* bce_out) {
    double bce = 0.0;
    for (std::size_t i : idx) {
        const double* xi = m.x.data() + i * m.dim;
        double z = bias;
        for (std::size_t j = 0; j < m.dim; ++j) z += w[j] * xi[j];
        bce += std::max(z, 0.0) - z * m.y[i] + std::log1p(std::exp(-std::abs(z)));
    }
    bce /= static_cast<double>(idx.size());
    if (bce_out) *bce_out = bce;
    double reg = 0.0;
    for (double wj : w) reg += wj * wj;
    return bce + l2 * reg;
}

}  // namespace

DownstreamResult train_downstream(const std::vector<LeadSample>& dataset,
                                  bool use_rnn_score, uint64_t seed) {
    if (dataset.size() < 5)
        throw DataError("downstream model needs at least 5 samples");
    const DesignMatrix m = design_matrix(dataset, use_rnn_score);

    // 80/20 split on a seeded shuffle
    std::vector<std::size_t> order(m.n);
    std::iota(order.begin(), order.end(), 0);
    RngStream split_rng(seed, "downstream.split");
    split_rng.shuffle(order);
    const std::size_t n_train = std::max<std::size_t>(1, (m.n * 4) / 5);
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> held_idx(order.begin() + n_train, order.end());
    if (held_idx.empty()) throw DataError("held-out split is empty");

    constexpr double kL2 = 1e-4;
    constexpr double kGradTol = 1e-6;
    constexpr int kMaxIters = 10000;

    LogisticModel model;
    model.weights.assign(m.dim, 0.0);
    double lr = 1.0;
    std::vector<double> gw(m.dim);
    double loss = logistic_loss(m, train_idx, model.weights, model.bias, kL2,
                                &model.train_bce);
    for (int iter = 0; iter < kMaxIters; ++iter) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t i : train_idx) {
            const double* xi = m.x.data() + i * m.dim;
            double z = model.bias;
            for (std::size_t j = 0; j < m.dim; ++j) z += model.weights[j] * xi[j];
            const double err = 1.0 / (1.0 + std::exp(-z)) - m.y[i];
            for (std::size_t j = 0; j < m.dim; ++j) gw[j] += err * xi[j];
            gb += err;
        }
        const double inv_n = 1.0 / static_cast<double>(train_idx.size());
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < m.dim; ++j) {
            gw[j] = gw[j] * inv_n + 2.0 * kL2 * model.weights[j];
            norm_sq += gw[j] * gw[j];
        }
        gb *= inv_n;
        norm_sq += gb * gb;
        model.iterations = iter + 1;
        model.gradient_norm = std::sqrt(norm_sq);
        if (model.gradient_norm < kGradTol) break;

        // monotone step: halve the rate until the regularized loss drops
        for (int tries = 0; tries < 60; ++tries) {
            std::vector<double> w_next(m.dim);
            for (std::size_t j = 0; j < m.dim; ++j)
                w_next[j] = model.weights[j] - lr * gw[j];
            const double b_next = model.bias - lr * gb;
            double bce_next = 0.0;
            const double loss_next =
                logistic_loss(m, train_idx, w_next, b_next, kL2, &bce_next);
            if (loss_next <= loss) {
                model.weights = std::move(w_next);
                model.bias = b_next;
                model.train_bce = bce_next;
                loss = loss_next;
                lr *= 1.1;
                break;
            }
            lr *= 0.5;
        }
    }

    // held-out evaluation
    std::vector<double> scores(held_idx.size()), logits(held_idx.size());
    std::vector<float> labels(held_idx.size());
    for (std::size_t k = 0; k < held_idx.size(); ++k) {
        const std::size_t i = held_idx[k];
        const double* xi = m.x.data() + i * m.dim;
        double z = model.bias;
        for (std::size_t j = 0; j < m.dim; ++j) z += model.weights[j] * xi[j];
        logits[k] = z;
        scores[k] = 1.0 / (1.0 + std::exp(-z));
        labels[k] = static_cast<float>(m.y[i]);
    }
    DownstreamResult out;
    out.report = report_from_scores(scores, logits, labels);
    out.model = std::move(model);
    return out;
}

// ------------------------------------------------------------ harnesses

AblationReport run_embedding_ablation(const TrainConfig& config,
                                      const std::vector<LeadSample>& train_set,
                                      const std::vector<LeadSample>& valid_set,
                                      const std::vector<LeadSample>& test_set,
                                      std::ostream* info) {
    AblationReport report;
    auto run_arm = [&](const std::string& name, int32_t embedding_dim,
                       const std::string& embedding_file) {
        TrainConfig arm_cfg = config;
        arm_cfg.model.embedding_dim = embedding_dim;
        arm_cfg.embedding_file = embedding_file;
        if (info) (*info) << "== ablation arm: " << name << "\n";
        TrainResult tr = train(arm_cfg, train_set, valid_set, info);
        const Evaluation ev = evaluate(tr.checkpoint, test_set);
        AblationArm arm;
        arm.name = name;
        arm.r = ev.report.r;
        arm.p = ev.report.p;
        arm.best_valid_loss = tr.log.best_valid_loss;
        arm.epochs_to_convergence = tr.log.epochs_to_convergence;
        arm.test_scores = score_dataset(tr.checkpoint, test_set);
        report.arms.push_back(std::move(arm));
    };

    const int32_t untrained_dim =
        config.model.embedding_dim > 0 ? config.model.embedding_dim : 16;
    run_arm("none", 0, "");
    run_arm("present_untrained", untrained_dim, "");
    if (!config.embedding_file.empty())
        run_arm("present_pretrained", 0, config.embedding_file);
    return report;
}

BatchingComparison run_batching_comparison(
    const TrainConfig& config, const std::vector<LeadSample>& train_set,
    const std::vector<LeadSample>& valid_set,
    const std::vector<LeadSample>& test_set, std::ostream* info) {
    auto run_arm = [&](const BatchingMode& mode, const std::string& name) {
        TrainConfig arm_cfg = config;
        arm_cfg.batching = mode;
        if (info) (*info) << "== batching arm: " << name << "\n";
        TrainResult tr = train(arm_cfg, train_set, valid_set, info);
        const Evaluation ev = evaluate(tr.checkpoint, test_set);
        BatchingArm arm;
        arm.name = name;
        arm.r = ev.report.r;
        arm.p = ev.report.p;
        arm.epochs_to_convergence = tr.log.epochs_to_convergence;
        arm.computed_cells = tr.log.total_computed_cells;
        arm.wall_seconds = tr.log.total_wall_seconds;
        // first-epoch batches show the padding profile of the arm
        std::vector<std::string> corpus;
        for (const LeadSample& s : train_set) corpus.push_back(s.text);
        const CharVocab vocab = build_vocab(corpus);
        const std::vector<EncodedSequence> enc = encode_all(train_set, vocab);
        RngStream rng(arm_cfg.seed, "shuffle", 1);
        arm.train_padding_waste =
            padding_waste(make_batches(enc, arm_cfg.batching, rng));
        return arm;
    };

    BatchingComparison cmp;
    cmp.fixed = run_arm(
        BatchingMode::fixed(config.batching.batch_size, config.batching.max_len),
        "fixed");
    cmp.variable = run_arm(BatchingMode::variable(config.batching.batch_size,
                                                  config.batching.sort_window),
                           "variable");
    return cmp;
}

FusionReport run_fusion_comparison(const std::vector<LeadSample>& scored,
                                   int n_seeds, uint64_t base_seed) {
    if (n_seeds < 1) throw ConfigError("fusion_seeds must be >= 1");
    FusionReport report;
    double sum_bench = 0.0, sum_fusion = 0.0;
    std::size_t defined = 0;
    for (int k = 0; k < n_seeds; ++k) {
        FusionRun run;
        run.seed = base_seed + static_cast<uint64_t>(k);
        const DownstreamResult bench = train_downstream(scored, false, run.seed);
        const DownstreamResult fusion = train_downstream(scored, true, run.seed);
        run.r_benchmark = bench.report.r;
        run.r_fusion = fusion.report.r;
        if (run.r_benchmark && run.r_fusion) {
            if (*run.r_fusion > *run.r_benchmark) report.wins += 1;
            sum_bench += *run.r_benchmark;
            sum_fusion += *run.r_fusion;
            ++defined;
        }
        report.runs.push_back(run);
    }
    if (defined > 0) {
        report.mean_r_benchmark = sum_bench / static_cast<double>(defined);
        report.mean_r_fusion = sum_fusion / static_cast<double>(defined);
    }
    return report;
}

// ---------------------------------------------------------- embeddings

EmbeddingMatrix load_embedding_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding matrix: " + path);
    EmbeddingMatrix m;
    if (!(in >> m.rows >> m.cols) || m.rows == 0 || m.cols == 0)
        throw DataError("bad embedding matrix header in " + path);
    m.values.resize(m.rows * m.cols);
    for (float& v : m.values)
        if (!(in >> v))
            throw DataError("embedding matrix " + path +
                            " is truncated or non-numeric");
    return m;
}

void save_embedding_matrix(const EmbeddingMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embedding matrix: " + path);
    out << m.rows << ' ' << m.cols << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (c) out << ' ';
            out << m.values[r * m.cols + c];
        }
        out << '\n';
    }
}

}  // namespace charlead
