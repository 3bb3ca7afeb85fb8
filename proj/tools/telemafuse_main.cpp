#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "telemafuse/app.hpp"
#include "telemafuse/config.hpp"
#include "telemafuse/errors.hpp"
#include "telemafuse/evaluation.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string split;
    std::string ranking;
    std::string selection;
    bool fidelity_paper = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config file (INI)");
    cmd->add_option("--seed", opts.seed, "override the master seed")
        ->each([&opts](const std::string&) { opts.seed_given = true; });
    cmd->add_option("--split", opts.split, "fold grouping: by-driver or by-window")
        ->check(CLI::IsMember({"by-driver", "by-window"}));
    cmd->add_option("--ranking", opts.ranking, "candidate ranking: oob or resubstitution")
        ->check(CLI::IsMember({"oob", "resubstitution"}));
    cmd->add_option("--selection", opts.selection, "feature selection scope: per-fold or global")
        ->check(CLI::IsMember({"per-fold", "global"}));
    cmd->add_flag("--fidelity-paper", opts.fidelity_paper,
                  "resubstitution ranking + global selection + by-window split");
    cmd->add_option("--threads", opts.threads, "worker threads (overrides config)");
}

tmf::app::PipelineConfig resolve_config(const CommonOptions& opts) {
    tmf::app::PipelineConfig cfg = opts.config_path.empty()
                                       ? tmf::app::PipelineConfig{}
                                       : tmf::app::load_config(opts.config_path);
    if (opts.config_path.empty()) cfg.synth = tmf::app::default_synth_spec();

    if (opts.fidelity_paper) {
        cfg.bagging.ranking = tmf::bagging::RankingMode::resubstitution;
        cfg.selection = tmf::eval::SelectionMode::global;
        cfg.split = tmf::eval::SplitMode::by_window;
    }
    if (!opts.split.empty()) {
        cfg.split = opts.split == "by-driver" ? tmf::eval::SplitMode::by_driver
                                              : tmf::eval::SplitMode::by_window;
    }
    if (!opts.ranking.empty()) {
        cfg.bagging.ranking = opts.ranking == "oob" ? tmf::bagging::RankingMode::oob
                                                    : tmf::bagging::RankingMode::resubstitution;
    }
    if (!opts.selection.empty()) {
        cfg.selection = opts.selection == "per-fold" ? tmf::eval::SelectionMode::per_fold
                                                     : tmf::eval::SelectionMode::global;
    }
    if (opts.seed_given) cfg.seed = opts.seed;
    if (opts.threads > 0) cfg.threads = opts.threads;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"telemafuse: windowed telemetry features, vertically bagged random forests, "
                 "and Choquet fuzzy-integral fusion"};
    app.require_subcommand(1);

    CommonOptions synth_opts, extract_opts, train_opts, evaluate_opts;
    std::string out_path, in_path, selection_out, features_path, model_path, report_prefix;

    auto* synth = app.add_subcommand("synth", "generate a synthetic trip CSV");
    add_common(synth, synth_opts);
    synth->add_option("--out", out_path, "output trip CSV")->required();

    auto* extract = app.add_subcommand("extract", "turn trips into windowed features");
    add_common(extract, extract_opts);
    extract->add_option("--in", in_path, "input trip CSV")->required();
    extract->add_option("--out", out_path, "output feature CSV")->required();
    extract->add_option("--selection-out", selection_out, "also write a selection report CSV");

    auto* train = app.add_subcommand("train", "train the bagged + fused model");
    add_common(train, train_opts);
    train->add_option("--features", features_path, "labeled feature CSV")->required();
    train->add_option("--model", model_path, "output model artifact (JSON)")->required();

    auto* predict = app.add_subcommand("predict", "fused predictions from a saved model");
    predict->add_option("--model", model_path, "model artifact")->required();
    predict->add_option("--features", features_path, "feature CSV to score")->required();
    predict->add_option("--out", out_path, "output predictions CSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validated comparison");
    add_common(evaluate, evaluate_opts);
    evaluate->add_option("--in", in_path, "trip CSV or feature CSV")->required();
    evaluate->add_option("--report", report_prefix, "report path prefix (.csv/.txt appended)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    }

    try {
        if (synth->parsed()) {
            tmf::app::cmd_synth(resolve_config(synth_opts), out_path);
        } else if (extract->parsed()) {
            tmf::app::cmd_extract(resolve_config(extract_opts), in_path, out_path, selection_out);
        } else if (train->parsed()) {
            tmf::app::cmd_train(resolve_config(train_opts), features_path, model_path);
        } else if (predict->parsed()) {
            tmf::app::cmd_predict(model_path, features_path, out_path);
        } else if (evaluate->parsed()) {
            const auto report =
                tmf::app::cmd_evaluate(resolve_config(evaluate_opts), in_path, report_prefix);
            std::fputs(tmf::eval::format_metrics_table(report).c_str(), stdout);
        }
    } catch (const tmf::ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const tmf::DataError& e) {
        std::fprintf(stderr, "error: data: %s\n", e.what());
        return 3;
    } catch (const tmf::IoError& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
        return 3;
    } catch (const tmf::NumericError& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 4;
    }
    return 0;
}
