#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "charlead/nn_core.hpp"
#include "charlead/text_encoding.hpp"

namespace charlead {

struct TrainingProvenance {
    uint64_t config_hash = 0;
    int32_t epoch = 0;      // best-validation-loss epoch
    uint64_t rng_seed = 0;  // master seed of the producing run
};

// Model weights plus everything needed to score new text: config, the
// frozen vocabulary, and provenance of the producing run. Tensors are
// 32-bit floats; save/load round-trips them bitwise.
struct Checkpoint {
    static constexpr uint32_t kFormatVersion = 1;

    ModelConfig config;
    std::vector<char32_t> vocab_chars;  // real characters, manifest order
    std::vector<float> params;          // flat, ParamLayout order
    TrainingProvenance provenance;

    CharVocab vocab() const { return CharVocab::from_chars(vocab_chars); }
    ModelParams<float> model() const;
};

// File layout: u64 little-endian manifest length, JSON manifest, the magic
// bytes "CLRS", then the float32 little-endian tensor blob in manifest
// order. Corrupt files and unknown versions raise distinct errors.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace charlead
