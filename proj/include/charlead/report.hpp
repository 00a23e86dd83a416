#pragma once

#include <string>

#include <json.hpp>

#include "charlead/pipeline.hpp"
#include "charlead/synth_data.hpp"

namespace charlead {

// Plain-text tables for stdout and JSON documents for the per-run report
// files.

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const BucketReport& r);
nlohmann::json to_json(const RunLog& log);
nlohmann::json to_json(const DatasetStats& s);
nlohmann::json to_json(const AblationReport& r);
nlohmann::json to_json(const BatchingComparison& r);
nlohmann::json to_json(const FusionReport& r);

std::string render_table(const std::vector<std::vector<std::string>>& rows);

std::string render(const EvalReport& r);
std::string render(const BucketReport& r);
std::string render(const DatasetStats& s);
std::string render(const AblationReport& r);
std::string render(const BatchingComparison& r);
std::string render(const FusionReport& r);

std::string format_double(double v, int precision = 6);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace charlead
