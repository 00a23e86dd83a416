#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace charlead {

struct SignalFlags {
    bool misspelling = false;
    bool punct_overuse = false;
    bool all_caps = false;
};

struct SignalEffects {
    double misspelling = 1.1;
    double punct_overuse = 1.3;
    double all_caps = 0.9;
};

struct SignalRates {
    double misspelling = 0.35;
    double punct_overuse = 0.30;
    double all_caps = 0.25;
};

struct LengthProfile {
    std::size_t median_target = 68;
    std::size_t max_len = 214;
};

// Defaults are calibrated so that a scorer reading the true signal
// indicators reaches a point-biserial r of about 0.35 against the labels.
struct GeneratorConfig {
    std::size_t n = 5000;
    double base_close_logit = -1.8;
    SignalEffects effects;
    SignalRates signal_rates;
    std::vector<double> tabular_weights = {0.5, -0.35, 0.45, 0.25};
    LengthProfile length_profile;
    uint64_t seed = 0;
    // sample index offset, so train/valid/test splits draw disjoint
    // per-sample streams from the same seed
    std::size_t first_index = 0;
    // empty -> built-in pool (shipped as data/form_templates.txt)
    std::vector<std::string> templates;

    void validate() const;
};

struct LeadSample {
    std::string text;
    int label = 0;
    std::vector<double> features;
    std::optional<double> rnn_score;
    // ground-truth injection flags; present only on generated samples
    std::optional<SignalFlags> signals;
};

// Character-level signals are planted directly into the text: a tripled
// letter (misspelling), a run of exclamation marks (punctuation overuse),
// and an upper-cased word. The label is Bernoulli in the log-odds model
// base + sum(effects of active signals) + tabular_weights . features.
// Deterministic per (seed, first_index + i); tabular features are
// independent of the text.
std::vector<LeadSample> generate(const GeneratorConfig& config);

// True close probability of a sample with the given flags and features
// under the config's label model.
double close_probability(const GeneratorConfig& config, const SignalFlags& s,
                         const std::vector<double>& features);

struct DatasetStats {
    std::size_t n = 0;
    std::size_t length_median = 0;
    std::size_t length_max = 0;
    double close_rate = 0.0;
    // prevalence is available only when every sample carries signal flags
    std::optional<double> misspelling_rate;
    std::optional<double> punct_overuse_rate;
    std::optional<double> all_caps_rate;
};

DatasetStats dataset_stats(const std::vector<LeadSample>& dataset);

const std::vector<std::string>& default_templates();
std::vector<std::string> load_template_pool(const std::string& path);

}  // namespace charlead
