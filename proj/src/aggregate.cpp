#include "icl_ttc/aggregate.hpp"

#include <cmath>

#include "icl_ttc/errors.hpp"
#include "icl_ttc/parallel.hpp"

namespace icl_ttc {

double reward(const RewardKind& kind, const Vector& w) {
    if (const auto* o = std::get_if<OracleL2>(&kind)) {
        if (o->w_star.size() != w.size()) throw DimensionError("reward: length mismatch");
        return -(w - o->w_star).squaredNorm();
    }
    return -w.lpNorm<1>();
}

std::string method_name(AggregateMethod method) {
    switch (method) {
        case AggregateMethod::avg: return "avg";
        case AggregateMethod::bon: return "bon";
        default: return "mv";
    }
}

namespace {

void require_nonempty(const std::vector<Vector>& finals, const char* who) {
    if (finals.empty()) throw UsageError(std::string(who) + ": empty batch");
    for (const auto& w : finals)
        if (w.size() != finals.front().size())
            throw DimensionError(std::string(who) + ": finals have different lengths");
}

}  // namespace

Support canonical_support(const Vector& w) {
    Support s;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] == 1.0) {
            s.push_back(static_cast<std::size_t>(i));
        } else if (w[i] != 0.0) {
            throw UsageError("majority vote needs binary finals; entry " + std::to_string(i) +
                             " is neither 0 nor 1");
        }
    }
    return s;
}

AggregateResult aggregate_avg(const std::vector<Vector>& finals) {
    require_nonempty(finals, "aggregate_avg");
    Vector sum = Vector::Zero(finals.front().size());
    for (const auto& w : finals) sum += w;
    return AggregateResult{sum / static_cast<double>(finals.size()), AggregateMethod::avg, {}};
}

AggregateResult aggregate_bon(const std::vector<Vector>& finals, const RewardKind& reward_kind) {
    require_nonempty(finals, "aggregate_bon");
    std::size_t best = 0;
    double best_reward = reward(reward_kind, finals[0]);
    for (std::size_t i = 1; i < finals.size(); ++i) {
        const double r = reward(reward_kind, finals[i]);
        if (r > best_reward) {
            best_reward = r;
            best = i;
        }
    }
    return AggregateResult{finals[best], AggregateMethod::bon, {}};
}

AggregateResult aggregate_mv(const std::vector<Vector>& finals) {
    require_nonempty(finals, "aggregate_mv");
    AggregateResult result{Vector(), AggregateMethod::mv, {}};
    std::size_t sparsity = 0;
    for (std::size_t i = 0; i < finals.size(); ++i) {
        Support s = canonical_support(finals[i]);
        if (i == 0) sparsity = s.size();
        if (s.size() != sparsity || sparsity == 0)
            throw UsageError("majority vote needs k-sparse binary finals with a common k >= 1");
        ++result.vote_counts[std::move(s)];
    }
    // Map iteration is lexicographic, so the first maximum is the tie-break winner.
    const Support* winner = nullptr;
    std::size_t best = 0;
    for (const auto& [support, count] : result.vote_counts) {
        if (count > best) {
            best = count;
            winner = &support;
        }
    }
    result.w_hat = indicator(*winner, static_cast<std::size_t>(finals.front().size()));
    return result;
}

Vector aggregate_avg(const PathBatch& batch) { return aggregate_avg(batch.finals()).w_hat; }

Vector aggregate_bon(const PathBatch& batch, const RewardKind& reward_kind) {
    return aggregate_bon(batch.finals(), reward_kind).w_hat;
}

Vector aggregate_mv(const PathBatch& batch) { return aggregate_mv(batch.finals()).w_hat; }

StreamKey trial_task_seed(StreamKey master_seed, std::size_t trial) {
    return derive(master_seed, 0, trial);
}

StreamKey trial_path_seed(StreamKey master_seed, std::size_t trial) {
    return derive(master_seed, 1, trial);
}

MetricTable run_trials(const TrialSpec& spec, StreamKey master_seed, std::size_t threads) {
    if (spec.trials < 1) throw ConfigError("run_trials: trials must be at least 1");
    if (spec.N < 1) throw ConfigError("run_trials: N must be at least 1");
    spec.task.validate();
    validate_sampler(spec.sampler, spec.task.d);
    const bool binary = is_binary(spec.sampler);
    if (spec.method == AggregateMethod::mv && !binary)
        throw UsageError("run_trials: majority vote requires a binary sampler, got " +
                         sampler_name(spec.sampler));
    if (binary && !spec.task.binary())
        throw UsageError("run_trials: binary sampler requires a binary-sparse coefficient prior");

    MetricTable table;
    table.rows.resize(spec.trials);
    const std::string metric = binary ? "accuracy" : "excess_risk";
    parallel_for(spec.trials, threads, [&](std::size_t trial) {
        const InContextDataset ds = sample_task(spec.task, trial_task_seed(master_seed, trial));
        const std::vector<Vector> finals =
            roll_finals(ds, spec.sampler, spec.t, spec.N, trial_path_seed(master_seed, trial), 1);
        Vector w_hat;
        switch (spec.method) {
            case AggregateMethod::avg: w_hat = aggregate_avg(finals).w_hat; break;
            case AggregateMethod::bon: {
                RewardKind kind = spec.reward == RewardChoice::oracle_l2
                                      ? RewardKind{OracleL2{ds.w_star}}
                                      : RewardKind{SparsityL1{}};
                w_hat = aggregate_bon(finals, kind).w_hat;
                break;
            }
            case AggregateMethod::mv: w_hat = aggregate_mv(finals).w_hat; break;
        }
        const RiskReport r = evaluate(w_hat, ds);
        table.rows[trial] = TrialRow{trial, metric, binary ? (r.recovered ? 1.0 : 0.0) : r.excess_risk};
    });

    double sum = 0.0;
    for (const auto& row : table.rows) sum += row.metric_value;
    const double m = static_cast<double>(table.rows.size());
    table.mean = sum / m;
    double ss = 0.0;
    for (const auto& row : table.rows) ss += (row.metric_value - table.mean) * (row.metric_value - table.mean);
    table.stderr_mean = table.rows.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
    return table;
}

}  // namespace icl_ttc
