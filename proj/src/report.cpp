#include "charlead/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "charlead/errors.hpp"

namespace charlead {

using nlohmann::json;

namespace {

json opt_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

std::string opt_str(const std::optional<double>& v, int precision = 4) {
    return v ? format_double(*v, precision) : std::string("undefined");
}

std::string p_str(const std::optional<double>& p) {
    if (!p) return "undefined";
    if (*p < 0.01) return "< 0.01";
    return format_double(*p, 3);
}

}  // namespace

std::string format_double(double v, int precision) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

json to_json(const EvalReport& r) {
    json j;
    j["r"] = opt_json(r.r);
    j["p_value"] = opt_json(r.p);
    j["mean_loss"] = r.mean_loss;
    j["n"] = r.n;
    if (!r.correlation_error.empty()) j["error"] = r.correlation_error;
    return j;
}

json to_json(const BucketReport& r) {
    json j;
    j["boundaries"] = r.boundaries;
    json buckets = json::array();
    for (const Bucket& b : r.buckets)
        buckets.push_back({{"lo", b.lo},
                           {"hi", b.hi},
                           {"count", b.count},
                           {"close_rate", opt_json(b.close_rate)}});
    j["buckets"] = std::move(buckets);
    return j;
}

json to_json(const RunLog& log) {
    json j;
    j["seed"] = log.seed;
    j["best_epoch"] = log.best_epoch;
    j["best_valid_loss"] = log.best_valid_loss;
    j["epochs_to_convergence"] = log.epochs_to_convergence;
    j["convergence_confirmed"] = log.convergence_confirmed;
    j["total_computed_cells"] = log.total_computed_cells;
    j["total_wall_seconds"] = log.total_wall_seconds;
    json epochs = json::array();
    for (const EpochRecord& e : log.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"valid_loss", e.valid_loss},
                          {"valid_r", opt_json(e.valid_r)},
                          {"phase", e.phase},
                          {"wall_seconds", e.wall_seconds},
                          {"computed_cells", e.computed_cells}});
    j["epochs"] = std::move(epochs);
    return j;
}

json to_json(const DatasetStats& s) {
    json j;
    j["n"] = s.n;
    j["length_median"] = s.length_median;
    j["length_max"] = s.length_max;
    j["close_rate"] = s.close_rate;
    if (s.misspelling_rate) {
        j["rate_misspelling"] = *s.misspelling_rate;
        j["rate_punct_overuse"] = *s.punct_overuse_rate;
        j["rate_all_caps"] = *s.all_caps_rate;
    }
    return j;
}

json to_json(const AblationReport& r) {
    json arms = json::array();
    for (const AblationArm& a : r.arms)
        arms.push_back({{"arm", a.name},
                        {"r", opt_json(a.r)},
                        {"p_value", opt_json(a.p)},
                        {"best_valid_loss", a.best_valid_loss},
                        {"epochs_to_convergence", a.epochs_to_convergence}});
    return json{{"arms", std::move(arms)}};
}

json to_json(const BatchingComparison& r) {
    auto arm = [](const BatchingArm& a) {
        return json{{"arm", a.name},
                    {"r", opt_json(a.r)},
                    {"p_value", opt_json(a.p)},
                    {"epochs_to_convergence", a.epochs_to_convergence},
                    {"computed_cells", a.computed_cells},
                    {"wall_seconds", a.wall_seconds},
                    {"train_padding_waste", a.train_padding_waste}};
    };
    return json{{"arms", json::array({arm(r.fixed), arm(r.variable)})}};
}

json to_json(const FusionReport& r) {
    json runs = json::array();
    for (const FusionRun& run : r.runs)
        runs.push_back({{"seed", run.seed},
                        {"r_benchmark", opt_json(run.r_benchmark)},
                        {"r_fusion", opt_json(run.r_fusion)}});
    return json{{"runs", std::move(runs)},
                {"wins", r.wins},
                {"mean_r_benchmark", opt_json(r.mean_r_benchmark)},
                {"mean_r_fusion", opt_json(r.mean_r_fusion)}};
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream os;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            os << row[c];
            if (c + 1 < row.size())
                os << std::string(widths[c] - row[c].size() + 2, ' ');
        }
        os << '\n';
    }
    return os.str();
}

std::string render(const EvalReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Pearson's R", "P-value", "Mean loss", "N"});
    rows.push_back({opt_str(r.r), p_str(r.p), format_double(r.mean_loss, 4),
                    std::to_string(r.n)});
    std::string out = render_table(rows);
    if (!r.correlation_error.empty())
        out += "note: " + r.correlation_error + "\n";
    return out;
}

std::string render(const BucketReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Model score thresholds", "Leads", "Actual close rate"});
    for (std::size_t k = 0; k < r.buckets.size(); ++k) {
        const Bucket& b = r.buckets[k];
        const bool last = k + 1 == r.buckets.size();
        std::string interval = "[" + format_double(b.lo, 3) + " - " +
                               format_double(b.hi, 3) + (last ? "]" : ")");
        std::string rate = b.close_rate
                               ? format_double(*b.close_rate * 100.0, 3) + "%"
                               : std::string("-");
        rows.push_back({interval, std::to_string(b.count), rate});
    }
    return render_table(rows);
}

std::string render(const DatasetStats& s) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"samples", std::to_string(s.n)});
    rows.push_back({"median length", std::to_string(s.length_median)});
    rows.push_back({"max length", std::to_string(s.length_max)});
    rows.push_back({"close rate", format_double(s.close_rate, 4)});
    if (s.misspelling_rate) {
        rows.push_back({"misspelling rate", format_double(*s.misspelling_rate, 4)});
        rows.push_back(
            {"punct overuse rate", format_double(*s.punct_overuse_rate, 4)});
        rows.push_back({"all caps rate", format_double(*s.all_caps_rate, 4)});
    }
    return render_table(rows);
}

std::string render(const AblationReport& r) {
    static const char* kLabels[] = {"None", "Present, untrained",
                                    "Present, pre-trained"};
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Embedding Layer", "Pearson's R", "P-value",
                    "Epochs to Convergence"});
    for (std::size_t i = 0; i < r.arms.size(); ++i) {
        const AblationArm& a = r.arms[i];
        rows.push_back({i < 3 ? kLabels[i] : a.name, opt_str(a.r), p_str(a.p),
                        std::to_string(a.epochs_to_convergence)});
    }
    return render_table(rows);
}

std::string render(const BatchingComparison& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Batch size", "Pearson's R", "P-value",
                    "Epochs to Convergence", "Computed cells", "Wall seconds",
                    "Padding waste"});
    auto row = [&rows](const BatchingArm& a) {
        rows.push_back({a.name == "fixed" ? "Fixed" : "Variable", opt_str(a.r),
                        p_str(a.p), std::to_string(a.epochs_to_convergence),
                        std::to_string(a.computed_cells),
                        format_double(a.wall_seconds, 3),
                        format_double(a.train_padding_waste, 4)});
    };
    row(r.fixed);
    row(r.variable);
    return render_table(rows);
}

std::string render(const FusionReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Model", "Mean Pearson's R", "Wins"});
    rows.push_back({"Benchmark", opt_str(r.mean_r_benchmark),
                    std::to_string(static_cast<int>(r.runs.size()) - r.wins)});
    rows.push_back({"Includes RNN's Output", opt_str(r.mean_r_fusion),
                    std::to_string(r.wins)});
    std::ostringstream per_seed;
    per_seed << render_table(rows) << "per seed:";
    for (const FusionRun& run : r.runs)
        per_seed << " [" << run.seed << "] " << opt_str(run.r_benchmark, 3)
                 << " vs " << opt_str(run.r_fusion, 3) << ";";
    per_seed << '\n';
    return per_seed.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    if (!out) throw DataError("failed writing file: " + path);
}

}  // namespace charlead
