#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "charlead/checkpoint.hpp"
#include "charlead/config.hpp"
#include "charlead/dataset.hpp"
#include "charlead/errors.hpp"
#include "charlead/pipeline.hpp"
#include "charlead/report.hpp"
#include "charlead/synth_data.hpp"

namespace fs = std::filesystem;
using charlead::ConfigError;
using charlead::DataError;
using charlead::NumericError;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    bool quiet = false;
    bool seed_given = false;
    uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (JSON)");
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--set", args.overrides,
                    "Override a config key, key=value (repeatable)");
    cmd->add_flag("--quiet", args.quiet, "Suppress progress output");
    cmd->add_option("--seed", args.seed, "Override the master seed")
        ->trigger_on_parse()
        ->each([&args](const std::string&) { args.seed_given = true; });
}

json resolve_config(const CommonArgs& args) {
    json cfg = args.config_path.empty() ? charlead::default_config()
                                        : charlead::load_config(args.config_path);
    for (const std::string& assignment : args.overrides)
        charlead::apply_override(cfg, assignment);
    if (args.seed_given) cfg["seed"] = args.seed;
    return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    return (fs::path(args.out_dir) / name).string();
}

void announce_seed(const CommonArgs& args, const json& cfg) {
    if (!args.quiet)
        std::cout << "seed: " << cfg.at("seed").get<uint64_t>() << "\n";
}

std::ostream* info_stream(const CommonArgs& args) {
    return args.quiet ? nullptr : &std::cout;
}

charlead::Checkpoint require_checkpoint(const json& cfg) {
    const std::string path = cfg.at("checkpoint").get<std::string>();
    if (path.empty())
        throw ConfigError("set the checkpoint key (--set checkpoint=PATH)");
    return charlead::load_checkpoint(path);
}

// ------------------------------------------------------------- commands

int cmd_synth_data(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    announce_seed(args, cfg);
    charlead::GeneratorConfig gen = charlead::make_generator_config(cfg);
    const auto n_train = cfg.at("n_train").get<std::size_t>();
    const auto n_valid = cfg.at("n_valid").get<std::size_t>();
    const auto n_test = cfg.at("n_test").get<std::size_t>();

    struct Split {
        const char* name;
        std::size_t n;
        std::size_t first;
    };
    const Split splits[] = {{"train", n_train, 0},
                            {"valid", n_valid, n_train},
                            {"test", n_test, n_train + n_valid}};
    for (const Split& split : splits) {
        gen.n = split.n;
        gen.first_index = split.first;
        const std::vector<charlead::LeadSample> samples = charlead::generate(gen);
        const std::string path =
            out_path(args, std::string(split.name) + ".jsonl");
        charlead::write_jsonl(path, samples);
        if (!args.quiet) {
            std::cout << split.name << " -> " << path << "\n"
                      << charlead::render(charlead::dataset_stats(samples));
        }
    }
    return 0;
}

int cmd_train(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    announce_seed(args, cfg);
    const charlead::TrainConfig tc = charlead::make_train_config(cfg);
    charlead::TrainResult result =
        charlead::train_from_paths(tc, info_stream(args));
    const std::string ckpt_path = out_path(args, "checkpoint.bin");
    charlead::save_checkpoint(result.checkpoint, ckpt_path);
    charlead::write_text_file(out_path(args, "run_log.json"),
                              charlead::to_json(result.log).dump(2) + "\n");
    if (!args.quiet) {
        std::cout << "checkpoint: " << ckpt_path << "\n"
                  << "best epoch " << result.log.best_epoch << " (valid loss "
                  << charlead::format_double(result.log.best_valid_loss, 5)
                  << "), epochs to convergence "
                  << result.log.epochs_to_convergence << "\n";
    }
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    const charlead::Checkpoint ckpt = require_checkpoint(cfg);
    std::string input = cfg.at("eval_input").get<std::string>();
    if (input.empty()) input = cfg.at("test_path").get<std::string>();
    const std::vector<charlead::LeadSample> dataset = charlead::read_jsonl(input);
    const charlead::Evaluation ev = charlead::evaluate(ckpt, dataset);
    json doc;
    doc["report"] = charlead::to_json(ev.report);
    doc["buckets"] = charlead::to_json(ev.buckets);
    charlead::write_text_file(out_path(args, "eval_report.json"),
                              doc.dump(2) + "\n");
    std::cout << charlead::render(ev.report) << charlead::render(ev.buckets);
    return 0;
}

int cmd_export_scores(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    const charlead::Checkpoint ckpt = require_checkpoint(cfg);
    std::string input = cfg.at("export_input").get<std::string>();
    if (input.empty()) input = cfg.at("test_path").get<std::string>();
    std::vector<charlead::LeadSample> dataset = charlead::read_jsonl(input);
    dataset = charlead::export_scores(ckpt, std::move(dataset));
    const std::string path = out_path(args, "scored.jsonl");
    charlead::write_jsonl(path, dataset);
    if (!args.quiet)
        std::cout << "scored " << dataset.size() << " records -> " << path
                  << "\n";
    return 0;
}

int cmd_ablate_embedding(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    announce_seed(args, cfg);
    const charlead::TrainConfig tc = charlead::make_train_config(cfg);
    const auto train_set = charlead::read_jsonl(tc.train_path);
    const auto valid_set = charlead::read_jsonl(tc.valid_path);
    const auto test_set = charlead::read_jsonl(tc.test_path);
    const charlead::AblationReport report = charlead::run_embedding_ablation(
        tc, train_set, valid_set, test_set, info_stream(args));
    charlead::write_text_file(out_path(args, "ablation_report.json"),
                              charlead::to_json(report).dump(2) + "\n");
    std::cout << charlead::render(report);
    return 0;
}

int cmd_compare_batching(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    announce_seed(args, cfg);
    const charlead::TrainConfig tc = charlead::make_train_config(cfg);
    const auto train_set = charlead::read_jsonl(tc.train_path);
    const auto valid_set = charlead::read_jsonl(tc.valid_path);
    const auto test_set = charlead::read_jsonl(tc.test_path);
    const charlead::BatchingComparison report = charlead::run_batching_comparison(
        tc, train_set, valid_set, test_set, info_stream(args));
    charlead::write_text_file(out_path(args, "batching_report.json"),
                              charlead::to_json(report).dump(2) + "\n");
    std::cout << charlead::render(report);
    return 0;
}

int cmd_compare_fusion(const CommonArgs& args) {
    const json cfg = resolve_config(args);
    announce_seed(args, cfg);
    const charlead::Checkpoint ckpt = require_checkpoint(cfg);
    std::vector<charlead::LeadSample> dataset;
    const std::string input = cfg.at("export_input").get<std::string>();
    if (!input.empty()) {
        dataset = charlead::read_jsonl(input);
    } else {
        // fresh downstream split, disjoint from train/valid/test
        charlead::GeneratorConfig gen = charlead::make_generator_config(cfg);
        gen.n = cfg.at("fusion_n").get<std::size_t>();
        gen.first_index = cfg.at("n_train").get<std::size_t>() +
                          cfg.at("n_valid").get<std::size_t>() +
                          cfg.at("n_test").get<std::size_t>();
        dataset = charlead::generate(gen);
    }
    dataset = charlead::export_scores(ckpt, std::move(dataset));
    const charlead::FusionReport report = charlead::run_fusion_comparison(
        dataset, cfg.at("fusion_seeds").get<int>(),
        cfg.at("seed").get<uint64_t>());
    charlead::write_text_file(out_path(args, "fusion_report.json"),
                              charlead::to_json(report).dump(2) + "\n");
    std::cout << charlead::render(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "charlead: character-level LSTM lead scoring on raw form inputs.\n"
        "CHARLEAD_THREADS caps worker parallelism (default 1; results do not\n"
        "depend on it)."};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    CommonArgs args;
    int (*handler)(const CommonArgs&) = nullptr;
    struct Cmd {
        const char* name;
        const char* help;
        int (*fn)(const CommonArgs&);
    };
    const Cmd cmds[] = {
        {"synth-data", "Generate synthetic lead-form datasets", cmd_synth_data},
        {"train", "Train the character-level LSTM", cmd_train},
        {"evaluate", "Pearson/bucket evaluation of a checkpoint", cmd_evaluate},
        {"export-scores", "Append rnn_score to a dataset", cmd_export_scores},
        {"ablate-embedding", "Embedding-layer ablation harness",
         cmd_ablate_embedding},
        {"compare-batching", "Fixed vs variable batching harness",
         cmd_compare_batching},
        {"compare-fusion", "Benchmark vs fusion downstream models",
         cmd_compare_fusion},
    };
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, args);
        sub->callback([&handler, &c] { handler = c.fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // exits 0 with help text
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return handler(args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
