#pragma once

#include <string>
#include <vector>

#include "charlead/synth_data.hpp"

namespace charlead {

// One JSON object per line, UTF-8: {"text": str, "label": 0|1,
// "features": [num...] (optional), "rnn_score": num (optional)}.
std::vector<LeadSample> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path,
                 const std::vector<LeadSample>& samples);

}  // namespace charlead
