#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "icl_ttc/core.hpp"
#include "icl_ttc/decode.hpp"

namespace icl_ttc {

struct OracleL2 {
    Vector w_star;
};

struct SparsityL1 {};

using RewardKind = std::variant<OracleL2, SparsityL1>;

double reward(const RewardKind& kind, const Vector& w);

enum class AggregateMethod { avg, bon, mv };

std::string method_name(AggregateMethod method);

using Support = std::vector<std::size_t>;

struct AggregateResult {
    Vector w_hat;
    AggregateMethod method = AggregateMethod::avg;
    std::map<Support, std::size_t> vote_counts;  // mv only; map order is the tie-break order
};

AggregateResult aggregate_avg(const std::vector<Vector>& finals);
AggregateResult aggregate_bon(const std::vector<Vector>& finals, const RewardKind& reward_kind);
AggregateResult aggregate_mv(const std::vector<Vector>& finals);

Vector aggregate_avg(const PathBatch& batch);
Vector aggregate_bon(const PathBatch& batch, const RewardKind& reward_kind);
Vector aggregate_mv(const PathBatch& batch);

// Sorted support of a {0,1} vector; throws UsageError for any other entry.
Support canonical_support(const Vector& w);

enum class RewardChoice { oracle_l2, sparsity_l1 };

struct TrialRow {
    std::size_t trial = 0;
    std::string metric_name;
    double metric_value = 0.0;
};

struct MetricTable {
    std::vector<TrialRow> rows;
    double mean = 0.0;
    double stderr_mean = 0.0;
};

struct TrialSpec {
    TaskConfig task;
    SamplerKind sampler;
    std::size_t t = 1;
    std::size_t N = 1;
    AggregateMethod method = AggregateMethod::avg;
    std::size_t trials = 1;
    RewardChoice reward = RewardChoice::oracle_l2;
};

// Dataset of trial i uses derive(derive(master, 0), i); its paths use derive(derive(master, 1), i).
// The metric is excess_risk for continuous samplers and accuracy (recovered) for binary ones.
MetricTable run_trials(const TrialSpec& spec, StreamKey master_seed, std::size_t threads = 1);

StreamKey trial_task_seed(StreamKey master_seed, std::size_t trial);
StreamKey trial_path_seed(StreamKey master_seed, std::size_t trial);

}  // namespace icl_ttc
