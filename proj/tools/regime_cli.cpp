// Command-line driver for the regime-detection pipeline.
//
//   regime [--config cfg.json] [--seed N] [--threads N] [--out DIR] [--paper-defaults] <command>
//
// Commands: synth, ingest, pca, cluster, train, backtest, run.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "regime/pipeline.hpp"

namespace {

using Command = regime::StageSummary (*)(const regime::RunConfig&, const regime::RunOptions&);

struct Entry {
    const char* name;
    const char* help;
    Command fn;
};

constexpr Entry kCommands[] = {
    {"synth", "Write a synthetic panel, asset returns and ground-truth regimes", &regime::cmd_synth},
    {"ingest", "Load, impute and split the economic panel", &regime::cmd_ingest},
    {"pca", "Standardize, fit PCA and export scores", &regime::cmd_pca},
    {"cluster", "Select k by average silhouette and label training regimes", &regime::cmd_cluster},
    {"train", "Cross-validate and fit the regime classifiers", &regime::cmd_train},
    {"backtest", "Simulate regime-driven strategies out of sample", &regime::cmd_backtest},
    {"run", "Run ingest, pca, cluster, train and backtest in sequence", &regime::cmd_run},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regime detection: PCA, k-means regimes, classifiers and strategy backtests"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool paper_defaults = false;
    std::string out_dir;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Override the config seed");
    app.add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1, 256));
    app.add_flag("--paper-defaults", paper_defaults, "Use the published parameter values; alone, print that config");
    app.add_option("--out", out_dir, "Output directory");

    for (const auto& e : kCommands) app.add_subcommand(e.name, e.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(regime::ErrorKind::Config);
    }

    try {
        regime::RunConfig cfg;
        if (!config_path.empty()) cfg = regime::load_config(config_path);
        if (paper_defaults) regime::apply_published_defaults(cfg);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;

        const auto subs = app.get_subcommands();
        if (subs.empty()) {
            if (paper_defaults) {
                std::cout << nlohmann::json(cfg).dump(2) << '\n';
                return 0;
            }
            std::cout << app.help();
            return static_cast<int>(regime::ErrorKind::Config);
        }
        const std::string name = subs.front()->get_name();
        for (const auto& e : kCommands) {
            if (name == e.name) {
                std::cout << e.fn(cfg, regime::RunOptions{threads}).line() << std::endl;
                return 0;
            }
        }
        return static_cast<int>(regime::ErrorKind::Config);
    } catch (const regime::Error& e) {
        std::cerr << "error code=" << e.code() << ' ' << e.message() << std::endl;
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error " << e.what() << std::endl;
        return static_cast<int>(regime::ErrorKind::Data);
    }
}
