#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "charlead/checkpoint.hpp"
#include "charlead/config.hpp"
#include "charlead/dataset.hpp"
#include "charlead/metrics.hpp"
#include "charlead/synth_data.hpp"

namespace charlead {

// ------------------------------------------------------------ training

struct EpochRecord {
    int32_t epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    std::optional<double> valid_r;
    std::string phase;  // "adam" or "nesterov_sgd"
    double wall_seconds = 0.0;
    uint64_t computed_cells = 0;  // rows*width summed over training batches
};

struct RunLog {
    std::vector<EpochRecord> epochs;
    int32_t best_epoch = 0;
    double best_valid_loss = 0.0;
    // best-validation-loss epoch; confirmed once `patience` epochs pass
    // without improvement
    int32_t epochs_to_convergence = 0;
    bool convergence_confirmed = false;
    uint64_t total_computed_cells = 0;
    double total_wall_seconds = 0.0;
    uint64_t seed = 0;
};

struct TrainResult {
    Checkpoint checkpoint;
    RunLog log;
};

// Full two-phase run: Adam then Nesterov SGD, per-epoch reshuffled batches,
// validation after every epoch, best-epoch weights retained. `info` gets
// one progress line per epoch when non-null.
TrainResult train(const TrainConfig& config,
                  const std::vector<LeadSample>& train_set,
                  const std::vector<LeadSample>& valid_set,
                  std::ostream* info = nullptr);

// Loads the datasets named by the config first.
TrainResult train_from_paths(const TrainConfig& config,
                             std::ostream* info = nullptr);

// --------------------------------------------------------- evaluation

struct Evaluation {
    EvalReport report;
    BucketReport buckets;
};

// Eval-phase scores for every sample, in dataset order.
std::vector<double> score_dataset(const Checkpoint& ckpt,
                                  const std::vector<LeadSample>& dataset);

Evaluation evaluate(const Checkpoint& ckpt,
                    const std::vector<LeadSample>& dataset);

// Copies the dataset with rnn_score filled in; order and all other fields
// are untouched.
std::vector<LeadSample> export_scores(const Checkpoint& ckpt,
                                      std::vector<LeadSample> dataset);

// ----------------------------------------------------------- downstream

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    double train_bce = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
};

struct DownstreamResult {
    LogisticModel model;
    EvalReport report;  // held-out split
};

// Logistic regression on the tabular features (plus rnn_score when
// use_rnn_score), full-batch gradient descent with L2 1e-4 until the
// gradient norm drops under 1e-6 or 10^4 iterations. The seed picks the
// 80/20 train/held-out split.
DownstreamResult train_downstream(const std::vector<LeadSample>& dataset,
                                  bool use_rnn_score, uint64_t seed);

// ------------------------------------------------------------ harnesses

struct AblationArm {
    std::string name;  // "none", "present_untrained", "present_pretrained"
    std::optional<double> r;
    std::optional<double> p;
    double best_valid_loss = 0.0;
    int32_t epochs_to_convergence = 0;
    std::vector<double> test_scores;  // dataset order
};

struct AblationReport {
    std::vector<AblationArm> arms;
};

// Embedding-ablation arms with identical data and seeds. The pre-trained
// arm runs only when embedding_file is non-empty; its matrix must have
// vocab_size rows and stays frozen during training.
AblationReport run_embedding_ablation(const TrainConfig& config,
                                      const std::vector<LeadSample>& train_set,
                                      const std::vector<LeadSample>& valid_set,
                                      const std::vector<LeadSample>& test_set,
                                      std::ostream* info = nullptr);

struct BatchingArm {
    std::string name;  // "fixed" or "variable"
    std::optional<double> r;
    std::optional<double> p;
    int32_t epochs_to_convergence = 0;
    uint64_t computed_cells = 0;
    double wall_seconds = 0.0;
    double train_padding_waste = 0.0;  // first-epoch batches
};

struct BatchingComparison {
    BatchingArm fixed;
    BatchingArm variable;
};

// Trains the same model twice, Fixed(max_len) vs Variable batches,
// identical seeds and data.
BatchingComparison run_batching_comparison(
    const TrainConfig& config, const std::vector<LeadSample>& train_set,
    const std::vector<LeadSample>& valid_set,
    const std::vector<LeadSample>& test_set, std::ostream* info = nullptr);

struct FusionRun {
    uint64_t seed = 0;
    std::optional<double> r_benchmark;
    std::optional<double> r_fusion;
};

struct FusionReport {
    std::vector<FusionRun> runs;
    int wins = 0;  // runs where the fusion model's r is strictly higher
    std::optional<double> mean_r_benchmark;
    std::optional<double> mean_r_fusion;
};

// Benchmark (tabular only) vs fusion (tabular + rnn_score) downstream
// models over n_seeds split seeds on the same scored dataset.
FusionReport run_fusion_comparison(const std::vector<LeadSample>& scored,
                                   int n_seeds, uint64_t base_seed);

// Text file holding a dense matrix: "rows cols" on the first line, then one
// row of numbers per line.
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;
};
EmbeddingMatrix load_embedding_matrix(const std::string& path);
void save_embedding_matrix(const EmbeddingMatrix& m, const std::string& path);

}  // namespace charlead
