#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "icl_ttc/config.hpp"
#include "icl_ttc/errors.hpp"
#include "icl_ttc/experiments.hpp"

using namespace icl_ttc;

int main(int argc, char** argv) {
    CLI::App app{"Test-time computing simulator for in-context linear regression"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    for (auto kind : {ExperimentKind::continuous_risk, ExperimentKind::binary_accuracy, ExperimentKind::markov_exact,
                      ExperimentKind::fit_predict, ExperimentKind::validate}) {
        auto* sub = app.add_subcommand(experiment_name(kind), "Run the " + experiment_name(kind) + " experiment");
        sub->add_option("--config", config_path, "Experiment config file")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "Master seed (overrides seed)");
        sub->add_option("--threads", threads, "Worker threads (default: ICL_TTC_THREADS or 1)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    const auto* sub = app.get_subcommands().front();
    const ExperimentKind kind = *parse_experiment_name(sub->get_name());

    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read config '" << config_path << "'\n";
        return exit_io;
    }
    std::ostringstream text;
    text << in.rdbuf();

    ExperimentConfig config;
    try {
        config = parse_config(text.str(), kind);
    } catch (const ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return exit_config;
    }
    if (sub->count("--out")) config.output_dir = out_dir;
    if (sub->count("--seed")) config.seed = seed;
    return run(config, threads, std::cerr);
}
