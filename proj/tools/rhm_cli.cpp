// Command-line driver for the wheel-health monitoring experiments.
//
//   rhm <command> --config <file> [--seed <u64>] [--out <dir>] [--plots]
//
// Commands compose through the run directory: each reads the outputs of its
// predecessors and writes its own results atomically.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "rhm/rhm.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
    bool plots = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--out", args.out_dir, "override the output directory");
    cmd->add_flag("--plots", args.plots, "write health-index SVG plots during evaluate");
}

rhm::ExperimentConfig make_config(const CommonArgs& args) {
    rhm::ExperimentConfig cfg = rhm::load_config(args.config_path);
    if (args.seed_given) {
        cfg.seed = args.seed;
        cfg.seed_set = true;
        cfg.train.seed = args.seed;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.plots) cfg.plots = true;
    cfg.validate();
    return cfg;
}

void require_wheel_task(const rhm::ExperimentConfig& cfg, const std::string& command) {
    if (cfg.task != rhm::Task::WheelUnsupervised)
        throw rhm::ConfigError(command +
                               " applies to the wheel-unsupervised task; use `run` for "
                               "supervised-toy");
}

void print_report_text(const rhm::ExperimentConfig& cfg) {
    const auto paths = rhm::pipeline_paths(cfg);
    std::ifstream in(paths.report_text);
    if (in) std::cout << in.rdbuf();
    std::cout << "report: " << paths.report_json.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contrastive fault detection experiments on wheel monitoring data"};
    app.require_subcommand(1);

    const char* kCommands[] = {"simulate", "prep",   "train",    "fit-occ", "fit-helm",
                               "score",    "detect", "evaluate", "run"};
    const char* kDescriptions[] = {
        "generate the synthetic fleet dataset",
        "preprocess raw measurements into 1024-sample normalized signals",
        "train the contrastive encoder on the healthy training split",
        "fit the one-class SVM on encoded training features",
        "fit the HELM baseline on prepared training signals",
        "score the test split with the selected detectors",
        "apply the median-of-5 detection rule to the health series",
        "evaluate detections against ground truth and write the report",
        "full pipeline end to end"};

    CommonArgs args;
    for (std::size_t i = 0; i < std::size(kCommands); ++i) {
        CLI::App* cmd = app.add_subcommand(kCommands[i], kDescriptions[i]);
        add_common(cmd, args);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const rhm::ExperimentConfig cfg = make_config(args);
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "simulate") {
            require_wheel_task(cfg, name);
            rhm::stage_simulate(cfg);
            std::cout << "dataset: " << rhm::pipeline_paths(cfg).dataset.string() << "\n";
        } else if (name == "prep") {
            require_wheel_task(cfg, name);
            rhm::stage_prep(cfg);
        } else if (name == "train") {
            require_wheel_task(cfg, name);
            const auto history = rhm::stage_train(cfg);
            if (!history.empty())
                std::printf("final epoch mean loss %.4f (active triplets %.1f%%)\n",
                            history.back().mean_loss,
                            100.0 * history.back().active_triplet_fraction);
        } else if (name == "fit-occ") {
            require_wheel_task(cfg, name);
            rhm::stage_fit_occ(cfg);
        } else if (name == "fit-helm") {
            require_wheel_task(cfg, name);
            rhm::stage_fit_helm(cfg);
        } else if (name == "score") {
            require_wheel_task(cfg, name);
            rhm::stage_score(cfg);
        } else if (name == "detect") {
            require_wheel_task(cfg, name);
            rhm::stage_detect(cfg);
        } else if (name == "evaluate") {
            require_wheel_task(cfg, name);
            rhm::stage_evaluate(cfg);
            print_report_text(cfg);
        } else if (name == "run") {
            if (cfg.task == rhm::Task::SupervisedToy)
                rhm::run_toy(cfg);
            else
                rhm::run_pipeline(cfg);
            print_report_text(cfg);
        }
    } catch (const rhm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
