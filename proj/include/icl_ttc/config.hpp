#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icl_ttc/aggregate.hpp"
#include "icl_ttc/core.hpp"
#include "icl_ttc/decode.hpp"

namespace icl_ttc {

enum class ExperimentKind { continuous_risk, binary_accuracy, markov_exact, fit_predict, validate };

std::string experiment_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_name(const std::string& name);

// Method tokens of a sweep. gd and greedy are single deterministic paths
// (deterministic and binary-greedy decoders) reported for every N.
enum class SweepMethod { avg, bon, mv, gd, greedy };

std::string sweep_method_name(SweepMethod m);

enum class ValidateScale { quick, full };

struct SweepConfig {
    std::vector<std::size_t> t_list{1};
    std::vector<std::size_t> n_list{1};
    std::vector<SweepMethod> methods;
    std::size_t trials = 1;
    RewardChoice reward = RewardChoice::oracle_l2;
    std::vector<std::size_t> t_query;  // fit-predict held-out steps

    friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::validate;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    bool plot = true;
    TaskConfig task;
    SamplerKind sampler = Deterministic{};
    SweepConfig sweep;
    std::vector<int> criteria;  // validate: empty means all
    ValidateScale scale = ValidateScale::quick;
    std::string table_path;  // fit-predict: optional results.csv to read instead of simulating

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Sectioned "key = value" text with '#' comments. Throws ParseError naming the
// line and key. When `kind` is given and the text has no experiment kind, the
// given kind is used; a conflicting kind in the text is an error.
ExperimentConfig parse_config(const std::string& text,
                              std::optional<ExperimentKind> kind = std::nullopt);

// Canonical text that parses back to an equal config.
std::string to_config_text(const ExperimentConfig& config);

std::string format_double(double v);

}  // namespace icl_ttc
