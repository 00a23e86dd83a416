#include "charlead/batching.hpp"

#include <algorithm>
#include <numeric>

#include "charlead/errors.hpp"

namespace charlead {

void BatchingMode::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (kind == Kind::Fixed && max_len < 1)
        throw ConfigError("max_len must be >= 1");
    if (kind == Kind::Variable && sort_window < 1)
        throw ConfigError("sort_window must be >= 1");
}

std::size_t PaddedBatch::padded_cells() const {
    std::size_t used = 0;
    for (std::size_t len : lengths) used += len;
    return cells() - used;
}

uint64_t batch_tag(const PaddedBatch& batch) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(batch.rows);
    mix(batch.width);
    for (int32_t idx : batch.indices) mix(static_cast<uint64_t>(idx) + 1);
    for (std::size_t len : batch.lengths) mix(len);
    return h;
}

namespace {

PaddedBatch assemble(std::span<const EncodedSequence> dataset,
                     std::span<const std::size_t> ids, std::size_t width,
                     std::size_t clip_len) {
    PaddedBatch batch;
    batch.rows = ids.size();
    batch.width = width;
    batch.indices.assign(batch.rows * width, CharVocab::kPadIndex);
    batch.mask.assign(batch.rows * width, 0);
    batch.lengths.resize(batch.rows);
    batch.sample_ids.assign(ids.begin(), ids.end());
    for (std::size_t b = 0; b < batch.rows; ++b) {
        const EncodedSequence& seq = dataset[ids[b]];
        const std::size_t len = std::min(seq.length(), clip_len);
        batch.lengths[b] = len;
        for (std::size_t t = 0; t < len; ++t) {
            batch.indices[b * width + t] = seq.indices[t];
            batch.mask[b * width + t] = 1;
        }
    }
    return batch;
}

}  // namespace

std::vector<PaddedBatch> make_batches(std::span<const EncodedSequence> dataset,
                                      const BatchingMode& mode,
                                      RngStream& rng) {
    mode.validate();
    if (dataset.empty()) throw DataError("empty dataset");
    for (const EncodedSequence& seq : dataset)
        if (seq.length() == 0) throw DataError("empty sequence in dataset");

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<PaddedBatch> batches;
    if (mode.kind == BatchingMode::Kind::Variable) {
        // sort by length inside windows so batches stay near-uniform in
        // length without freezing their composition across epochs
        const std::size_t window = mode.sort_window * mode.batch_size;
        for (std::size_t w0 = 0; w0 < order.size(); w0 += window) {
            const std::size_t w1 = std::min(w0 + window, order.size());
            std::stable_sort(order.begin() + w0, order.begin() + w1,
                             [&dataset](std::size_t a, std::size_t b) {
                                 return dataset[a].length() <
                                        dataset[b].length();
                             });
        }
        for (std::size_t i = 0; i < order.size(); i += mode.batch_size) {
            const std::size_t j = std::min(i + mode.batch_size, order.size());
            std::span<const std::size_t> ids(order.data() + i, j - i);
            std::size_t width = 0;
            for (std::size_t id : ids)
                width = std::max(width, dataset[id].length());
            batches.push_back(assemble(dataset, ids, width, width));
        }
        rng.shuffle(batches);
    } else {
        for (std::size_t i = 0; i < order.size(); i += mode.batch_size) {
            const std::size_t j = std::min(i + mode.batch_size, order.size());
            std::span<const std::size_t> ids(order.data() + i, j - i);
            batches.push_back(assemble(dataset, ids, mode.max_len, mode.max_len));
        }
    }
    return batches;
}

double padding_waste(std::span<const PaddedBatch> batches) {
    if (batches.empty()) throw DataError("no batches");
    std::size_t total = 0, padded = 0;
    for (const PaddedBatch& b : batches) {
        total += b.cells();
        padded += b.padded_cells();
    }
    return total == 0 ? 0.0 : static_cast<double>(padded) /
                                  static_cast<double>(total);
}

}  // namespace charlead
