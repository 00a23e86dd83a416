#include "charlead/config.hpp"

#include <fstream>

#include "charlead/errors.hpp"
#include "charlead/rng.hpp"

namespace charlead {

using nlohmann::json;

json default_config() {
    json c;
    // model
    c["num_layers"] = 4;
    c["hidden_units"] = 256;
    c["dropout_rate"] = 0.30;
    c["embedding_dim"] = 0;
    c["embedding_file"] = "";
    // schedule
    c["adam_epochs"] = 55;
    c["sgd_epochs"] = 20;
    c["adam_lr"] = 0.001;
    c["sgd_lr"] = 0.002;
    c["momentum"] = 0.9;
    c["clip_norm"] = 5.0;
    // batching
    c["batching"] = "variable";
    c["batch_size"] = 64;
    c["max_len"] = 128;
    c["sort_window"] = 16;
    // training
    c["seed"] = 0;
    c["patience"] = 10;
    c["train_path"] = "train.jsonl";
    c["valid_path"] = "valid.jsonl";
    c["test_path"] = "test.jsonl";
    // evaluation / export inputs
    c["checkpoint"] = "";
    c["eval_input"] = "";
    c["export_input"] = "";
    // synthetic data generator
    c["n_train"] = 5000;
    c["n_valid"] = 1000;
    c["n_test"] = 1000;
    c["base_close_logit"] = -1.8;
    c["effect_misspelling"] = 1.1;
    c["effect_punct_overuse"] = 1.3;
    c["effect_all_caps"] = 0.9;
    c["rate_misspelling"] = 0.35;
    c["rate_punct_overuse"] = 0.30;
    c["rate_all_caps"] = 0.25;
    c["tabular_weights"] = std::vector<double>{0.5, -0.35, 0.45, 0.25};
    c["median_target"] = 68;
    c["gen_max_len"] = 214;
    c["template_file"] = "";
    // downstream fusion harness
    c["fusion_seeds"] = 5;
    c["fusion_n"] = 5000;
    return c;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json file;
    try {
        file = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("bad config " + path + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    json config = default_config();
    for (const auto& [key, value] : file.items()) {
        if (!config.contains(key))
            throw ConfigError("unknown config key: " + key);
        config[key] = value;
    }
    return config;
}

void apply_override(json& config, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    if (!config.contains(key)) throw ConfigError("unknown config key: " + key);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // plain string
    config[key] = std::move(parsed);
}

namespace {

template <typename T>
T get(const json& c, const char* key) {
    try {
        return c.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key has wrong type: ") + key);
    }
}

}  // namespace

TrainConfig make_train_config(const json& c) {
    TrainConfig t;
    t.model.num_layers = get<int32_t>(c, "num_layers");
    t.model.hidden_units = get<int32_t>(c, "hidden_units");
    t.model.dropout_rate = get<double>(c, "dropout_rate");
    t.model.embedding_dim = get<int32_t>(c, "embedding_dim");
    t.schedule.adam_epochs = get<int32_t>(c, "adam_epochs");
    t.schedule.sgd_epochs = get<int32_t>(c, "sgd_epochs");
    t.schedule.adam_lr = get<double>(c, "adam_lr");
    t.schedule.sgd_lr = get<double>(c, "sgd_lr");
    t.schedule.validate();
    t.momentum = get<double>(c, "momentum");
    if (!(t.momentum >= 0.0 && t.momentum < 1.0))
        throw ConfigError("momentum must be in [0, 1)");
    t.clip_norm = get<double>(c, "clip_norm");
    if (!(t.clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");

    const std::string batching = get<std::string>(c, "batching");
    const auto batch_size = get<std::size_t>(c, "batch_size");
    if (batching == "variable") {
        t.batching =
            BatchingMode::variable(batch_size, get<std::size_t>(c, "sort_window"));
    } else if (batching == "fixed") {
        t.batching = BatchingMode::fixed(batch_size, get<std::size_t>(c, "max_len"));
    } else {
        throw ConfigError("batching must be \"variable\" or \"fixed\"");
    }
    t.batching.validate();

    t.seed = get<uint64_t>(c, "seed");
    t.patience = get<int32_t>(c, "patience");
    if (t.patience < 1) throw ConfigError("patience must be >= 1");
    t.train_path = get<std::string>(c, "train_path");
    t.valid_path = get<std::string>(c, "valid_path");
    t.test_path = get<std::string>(c, "test_path");
    if (t.train_path == t.valid_path || t.train_path == t.test_path ||
        t.valid_path == t.test_path)
        throw ConfigError("dataset paths must be distinct");
    t.embedding_file = get<std::string>(c, "embedding_file");
    return t;
}

GeneratorConfig make_generator_config(const json& c) {
    GeneratorConfig g;
    g.n = get<std::size_t>(c, "n_train");
    g.base_close_logit = get<double>(c, "base_close_logit");
    g.effects.misspelling = get<double>(c, "effect_misspelling");
    g.effects.punct_overuse = get<double>(c, "effect_punct_overuse");
    g.effects.all_caps = get<double>(c, "effect_all_caps");
    g.signal_rates.misspelling = get<double>(c, "rate_misspelling");
    g.signal_rates.punct_overuse = get<double>(c, "rate_punct_overuse");
    g.signal_rates.all_caps = get<double>(c, "rate_all_caps");
    g.tabular_weights = get<std::vector<double>>(c, "tabular_weights");
    g.length_profile.median_target = get<std::size_t>(c, "median_target");
    g.length_profile.max_len = get<std::size_t>(c, "gen_max_len");
    g.seed = get<uint64_t>(c, "seed");
    const std::string pool = get<std::string>(c, "template_file");
    if (!pool.empty()) g.templates = load_template_pool(pool);
    g.validate();
    return g;
}

uint64_t config_hash(const json& config) {
    return fnv1a64(config.dump());
}

}  // namespace charlead
