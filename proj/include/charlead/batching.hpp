#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "charlead/rng.hpp"
#include "charlead/text_encoding.hpp"

namespace charlead {

struct BatchingMode {
    enum class Kind : uint8_t { Variable, Fixed };
    Kind kind = Kind::Variable;
    std::size_t batch_size = 64;
    // Fixed mode: global width; longer sequences are truncated to their
    // first max_len characters.
    std::size_t max_len = 128;
    // Variable mode: length sorting happens within shuffled windows of
    // sort_window * batch_size samples, so batch composition still varies
    // across epochs.
    std::size_t sort_window = 16;

    static BatchingMode variable(std::size_t batch_size = 64,
                                 std::size_t sort_window = 16) {
        return {Kind::Variable, batch_size, 0, sort_window};
    }
    static BatchingMode fixed(std::size_t batch_size = 64,
                              std::size_t max_len = 128) {
        return {Kind::Fixed, batch_size, max_len, 0};
    }
    void validate() const;
};

// Rectangular index matrix with per-row true lengths and a validity mask.
// mask[b*width + t] is 1 iff t < lengths[b]; every masked-off cell holds
// pad_index.
struct PaddedBatch {
    std::size_t rows = 0;
    std::size_t width = 0;
    std::vector<int32_t> indices;      // rows * width
    std::vector<std::size_t> lengths;  // per row
    std::vector<uint8_t> mask;         // rows * width
    std::vector<std::size_t> sample_ids;  // positions in the source dataset

    std::size_t cells() const { return rows * width; }
    std::size_t padded_cells() const;
};

// Content fingerprint used to pair a forward cache with its batch.
uint64_t batch_tag(const PaddedBatch& batch);

// Partitions the dataset into batches. Every sample lands in exactly one
// batch per call. Variable mode pads each batch to its own longest row;
// Fixed mode truncates to max_len and always emits width == max_len.
std::vector<PaddedBatch> make_batches(std::span<const EncodedSequence> dataset,
                                      const BatchingMode& mode,
                                      RngStream& rng);

// Fraction of cells that are padding across all batches, in [0, 1].
double padding_waste(std::span<const PaddedBatch> batches);

}  // namespace charlead
