#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "charlead/batching.hpp"
#include "charlead/nn_core.hpp"
#include "charlead/optim.hpp"
#include "charlead/synth_data.hpp"

namespace charlead {

struct TrainConfig {
    ModelConfig model;  // vocab_size filled from the training split
    Schedule schedule;
    BatchingMode batching;
    double clip_norm = 5.0;
    double momentum = 0.9;
    uint64_t seed = 0;
    int32_t patience = 10;
    std::string train_path = "train.jsonl";
    std::string valid_path = "valid.jsonl";
    std::string test_path = "test.jsonl";
    // externally supplied embedding matrix; loaded weights stay frozen
    std::string embedding_file;
};

// Flat config document. All keys live in one JSON object; command-line
// overrides replace file values key by key.
nlohmann::json default_config();
nlohmann::json load_config(const std::string& path);
// "key=value" pairs; unknown keys are rejected
void apply_override(nlohmann::json& config, const std::string& assignment);

TrainConfig make_train_config(const nlohmann::json& config);
GeneratorConfig make_generator_config(const nlohmann::json& config);

uint64_t config_hash(const nlohmann::json& config);

}  // namespace charlead
