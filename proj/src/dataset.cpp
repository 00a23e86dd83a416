#include "charlead/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "charlead/errors.hpp"

namespace charlead {

using nlohmann::json;

std::vector<LeadSample> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    std::vector<LeadSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": bad record: " + e.what());
        }
        LeadSample s;
        if (!j.contains("text") || !j["text"].is_string())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": missing text field");
        s.text = j["text"].get<std::string>();
        if (!j.contains("label") || !j["label"].is_number_integer())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": missing label field");
        s.label = j["label"].get<int>();
        if (s.label != 0 && s.label != 1)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": label must be 0 or 1");
        if (j.contains("features"))
            s.features = j["features"].get<std::vector<double>>();
        if (j.contains("rnn_score"))
            s.rnn_score = j["rnn_score"].get<double>();
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw DataError("dataset is empty: " + path);
    return samples;
}

void write_jsonl(const std::string& path,
                 const std::vector<LeadSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset: " + path);
    for (const LeadSample& s : samples) {
        json j;
        j["text"] = s.text;
        j["label"] = s.label;
        if (!s.features.empty()) j["features"] = s.features;
        if (s.rnn_score) j["rnn_score"] = *s.rnn_score;
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("failed writing dataset: " + path);
}

}  // namespace charlead
