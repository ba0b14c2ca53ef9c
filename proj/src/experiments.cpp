#include "icl_ttc/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "icl_ttc/acceptance.hpp"
#include "icl_ttc/bounds.hpp"
#include "icl_ttc/errors.hpp"
#include "icl_ttc/markov.hpp"
#include "icl_ttc/parallel.hpp"

namespace icl_ttc {

namespace {

double sampler_sigma(const SamplerKind& s) {
    if (const auto* c = std::get_if<ConstantNoise>(&s)) return c->sigma;
    if (const auto* l = std::get_if<LinearNoise>(&s)) return l->sigma;
    return 0.0;
}

ResultRow base_row(const ExperimentConfig& c) {
    ResultRow r;
    r.experiment = experiment_name(c.experiment);
    r.d = c.task.d;
    r.n = c.task.n;
    r.k = c.task.sparsity();
    r.sigma_eps = c.task.label_noise_sd;
    r.sigma = sampler_sigma(c.sampler);
    r.eta = c.task.step_size;
    r.seed = c.seed;
    return r;
}

struct CellSummary {
    std::size_t t, N;
    std::string method, metric;
    double mean, stderr_mean;
};

nlohmann::ordered_json cells_json(const std::vector<CellSummary>& cells) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : cells)
        arr.push_back({{"t", c.t}, {"N", c.N}, {"method", c.method}, {"metric", c.metric},
                       {"mean", c.mean}, {"stderr", c.stderr_mean}});
    return arr;
}

TrialSpec spec_for(const ExperimentConfig& c, SweepMethod m, std::size_t t, std::size_t N) {
    TrialSpec s{c.task, c.sampler, t, N, AggregateMethod::avg, c.sweep.trials, c.sweep.reward};
    switch (m) {
        case SweepMethod::avg: s.method = AggregateMethod::avg; break;
        case SweepMethod::bon: s.method = AggregateMethod::bon; break;
        case SweepMethod::mv: s.method = AggregateMethod::mv; break;
        case SweepMethod::gd:
            s.sampler = Deterministic{};
            s.N = 1;
            break;
        case SweepMethod::greedy:
            s.sampler = BinaryGreedy{c.task.sparsity()};
            s.N = 1;
            s.method = AggregateMethod::mv;
            break;
    }
    return s;
}

// Sweep over (t, N, method, trial) shared by continuous-risk and binary-accuracy.
RunOutput run_sweep(const ExperimentConfig& c, std::size_t threads, std::ostream* log) {
    RunOutput out;
    const StreamKey master{c.seed};
    std::vector<CellSummary> cells;
    std::map<std::pair<SweepMethod, std::size_t>, MetricTable> single_path_cache;
    for (std::size_t t : c.sweep.t_list) {
        for (std::size_t N : c.sweep.n_list) {
            for (SweepMethod m : c.sweep.methods) {
                const bool single = m == SweepMethod::gd || m == SweepMethod::greedy;
                MetricTable table;
                if (single && single_path_cache.count({m, t})) {
                    table = single_path_cache.at({m, t});
                } else {
                    table = run_trials(spec_for(c, m, t, N), master, threads);
                    if (single) single_path_cache[{m, t}] = table;
                }
                for (const auto& tr : table.rows) {
                    ResultRow r = base_row(c);
                    r.t = t;
                    r.N = N;
                    r.method = sweep_method_name(m);
                    r.trial = tr.trial;
                    r.metric_name = tr.metric_name;
                    r.metric_value = tr.metric_value;
                    out.rows.push_back(std::move(r));
                }
                const std::string metric = table.rows.front().metric_name;
                cells.push_back({t, N, sweep_method_name(m), metric, table.mean, table.stderr_mean});
                if (log)
                    *log << "t=" << t << " N=" << N << " " << sweep_method_name(m) << ": " << metric
                         << " mean " << format_double(table.mean) << "\n";
            }
        }
    }
    out.metrics["cells"] = cells_json(cells);

    // Plot mean metric against t per (method, N), or against N when t is fixed.
    const bool by_t = c.sweep.t_list.size() > 1;
    std::map<std::string, Series> series;
    for (const auto& cell : cells) {
        const std::string label = by_t ? cell.method + " N=" + std::to_string(cell.N)
                                        : cell.method + " t=" + std::to_string(cell.t);
        auto& s = series[label];
        s.label = label;
        s.x.push_back(static_cast<double>(by_t ? cell.t : cell.N));
        s.y.push_back(cell.mean);
    }
    for (auto& [label, s] : series) out.plot.push_back(std::move(s));
    out.x_label = by_t ? "reasoning steps t" : "sampled paths N";
    out.y_label = cells.empty() ? "" : cells.front().metric;
    out.log_x = !by_t;
    return out;
}

RunOutput run_markov(const ExperimentConfig& c, std::size_t threads) {
    RunOutput out;
    const StreamKey master{c.seed};
    const std::size_t trials = c.sweep.trials;
    struct TrialResult {
        std::vector<GapReport> gaps;
        double stationary_star = NAN;
        double decay = NAN;
        bool irreducible = false;
        bool converged = true;
    };
    std::vector<TrialResult> results(trials);
    parallel_for(trials, threads, [&](std::size_t trial) {
        const InContextDataset ds = sample_task(c.task, trial_task_seed(master, trial));
        const MarkovChain chain = build_chain(ds, c.task.step_size);
        auto& res = results[trial];
        for (std::size_t t : c.sweep.t_list) res.gaps.push_back(delta_gap(chain, t, ds.w_star));
        try {
            const StationaryReport st = stationary(chain);
            res.irreducible = st.irreducible;
            res.stationary_star = st.pi[static_cast<Eigen::Index>(res.gaps.front().star_index)];
        } catch (const NumericalError&) {
            res.converged = false;
        }
        try {
            res.decay = decay_rate(chain);
        } catch (const NumericalError&) {
        }
    });

    const std::size_t w_count = binomial(c.task.d, c.task.sparsity());
    std::vector<CellSummary> cells;
    for (std::size_t ti = 0; ti < c.sweep.t_list.size(); ++ti) {
        const std::size_t t = c.sweep.t_list[ti];
        for (std::size_t N : c.sweep.n_list) {
            double sum_pi = 0, sum_delta = 0, sum_bound = 0;
            for (std::size_t trial = 0; trial < trials; ++trial) {
                const GapReport& g = results[trial].gaps[ti];
                const double pi_star = g.pi_t[static_cast<Eigen::Index>(g.star_index)];
                const double bound = hoeffding_mv_bound(g.delta_t, N, w_count).value;
                for (auto [name, value] : {std::pair<const char*, double>{"pi_star", pi_star},
                                           {"delta_t", g.delta_t},
                                           {"hoeffding_bound", bound}}) {
                    ResultRow r = base_row(c);
                    r.t = t;
                    r.N = N;
                    r.method = "exact";
                    r.trial = trial;
                    r.metric_name = name;
                    r.metric_value = value;
                    out.rows.push_back(std::move(r));
                }
                sum_pi += pi_star;
                sum_delta += g.delta_t;
                sum_bound += bound;
            }
            const double m = static_cast<double>(trials);
            cells.push_back({t, N, "exact", "pi_star", sum_pi / m, 0.0});
            cells.push_back({t, N, "exact", "delta_t", sum_delta / m, 0.0});
            cells.push_back({t, N, "exact", "hoeffding_bound", sum_bound / m, 0.0});
        }
    }
    out.metrics["cells"] = cells_json(cells);
    auto per_trial = nlohmann::ordered_json::array();
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto& r = results[trial];
        nlohmann::ordered_json j{{"trial", trial}, {"irreducible", r.irreducible}, {"converged", r.converged}};
        j["stationary_star"] = std::isfinite(r.stationary_star) ? nlohmann::ordered_json(r.stationary_star)
                                                                : nlohmann::ordered_json(nullptr);
        j["decay_rate"] = std::isfinite(r.decay) ? nlohmann::ordered_json(r.decay) : nlohmann::ordered_json(nullptr);
        per_trial.push_back(std::move(j));
    }
    out.metrics["chains"] = std::move(per_trial);

    Series s{"mean pi_t(w*)", {}, {}};
    for (const auto& cell : cells)
        if (cell.metric == "pi_star" && cell.N == c.sweep.n_list.front()) {
            s.x.push_back(static_cast<double>(cell.t));
            s.y.push_back(cell.mean);
        }
    out.plot.push_back(std::move(s));
    out.x_label = "reasoning steps t";
    out.y_label = "probability of w*";
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunOutput run_fit(const ExperimentConfig& c, std::size_t threads, std::ostream* log) {
    RunOutput out;
    AccuracyTable low, held;
    const std::set<std::size_t> low_t(c.sweep.t_list.begin(), c.sweep.t_list.end());
    const std::set<std::size_t> query_t(c.sweep.t_query.begin(), c.sweep.t_query.end());
    if (!c.table_path.empty()) {
        const AccuracyTable all = accuracy_table(parse_csv(read_file(c.table_path)));
        for (const auto& [cell, acc] : all) {
            if (low_t.count(cell.first)) low[cell] = acc;
            if (query_t.count(cell.first)) held[cell] = acc;
        }
    } else {
        std::set<std::size_t> all_t = low_t;
        all_t.insert(query_t.begin(), query_t.end());
        const StreamKey master{c.seed};
        for (std::size_t t : all_t) {
            for (std::size_t N : c.sweep.n_list) {
                TrialSpec spec{c.task, c.sampler, t, N, AggregateMethod::mv, c.sweep.trials, c.sweep.reward};
                const MetricTable table = run_trials(spec, master, threads);
                for (const auto& tr : table.rows) {
                    ResultRow r = base_row(c);
                    r.t = t;
                    r.N = N;
                    r.method = "mv";
                    r.trial = tr.trial;
                    r.metric_name = "accuracy";
                    r.metric_value = tr.metric_value;
                    out.rows.push_back(std::move(r));
                }
                if (low_t.count(t)) low[{t, N}] = table.mean;
                if (query_t.count(t)) held[{t, N}] = table.mean;
                if (log) *log << "t=" << t << " N=" << N << " accuracy " << format_double(table.mean) << "\n";
            }
        }
    }

    auto preds = nlohmann::ordered_json::array();
    std::size_t within = 0, compared = 0;
    std::map<std::size_t, Series> observed, predicted;
    for (std::size_t tq : c.sweep.t_query) {
        for (std::size_t N : c.sweep.n_list) {
            const Prediction p = low_to_high_predict(low, tq, N);
            ResultRow r = base_row(c);
            r.t = tq;
            r.N = N;
            r.method = "predict";
            r.metric_name = "predicted_accuracy";
            r.metric_value = p.value;
            out.rows.push_back(r);
            nlohmann::ordered_json j{{"t", tq}, {"N", N}, {"predicted", p.value}, {"mu", p.mu},
                                     {"gamma", p.gamma}, {"kappa", p.kappa}, {"alpha_N", p.column.alpha},
                                     {"beta_N", p.column.beta}, {"gap", p.gap_query}};
            if (held.count({tq, N})) {
                const double obs = held.at({tq, N});
                const double err = std::abs(p.value - obs);
                r.metric_name = "abs_error";
                r.metric_value = err;
                out.rows.push_back(r);
                j["observed"] = obs;
                j["abs_error"] = err;
                ++compared;
                if (err <= 0.05) ++within;
                observed[tq].x.push_back(static_cast<double>(N));
                observed[tq].y.push_back(obs);
            }
            predicted[tq].x.push_back(static_cast<double>(N));
            predicted[tq].y.push_back(p.value);
            preds.push_back(std::move(j));
        }
    }
    out.metrics["predictions"] = std::move(preds);
    out.metrics["held_out_cells"] = compared;
    out.metrics["within_0_05"] = within;
    for (auto& [t, s] : observed) {
        s.label = "observed t=" + std::to_string(t);
        out.plot.push_back(std::move(s));
    }
    for (auto& [t, s] : predicted) {
        s.label = "predicted t=" + std::to_string(t);
        out.plot.push_back(std::move(s));
    }
    out.x_label = "sampled paths N";
    out.y_label = "accuracy";
    out.log_x = true;
    return out;
}

RunOutput run_validate(const ExperimentConfig& c, std::size_t threads, std::ostream* log) {
    RunOutput out;
    const std::vector<int> ids = c.criteria.empty() ? all_criteria() : c.criteria;
    auto arr = nlohmann::ordered_json::array();
    for (int id : ids) {
        const CriterionResult res = run_criterion(id, c.scale, threads, c.seed);
        if (log) *log << format_criterion(res) << "\n";
        ResultRow r;
        r.experiment = "validate";
        r.method = "criterion-" + std::to_string(id);
        r.metric_name = "passed";
        r.metric_value = res.passed ? 1.0 : 0.0;
        r.seed = c.seed;
        out.rows.push_back(std::move(r));
        arr.push_back({{"criterion", id}, {"title", res.title}, {"passed", res.passed}, {"details", res.details}});
        if (!res.passed) out.validation_failed = true;
    }
    out.metrics["criteria"] = std::move(arr);
    return out;
}

}  // namespace

AccuracyTable accuracy_table(const std::vector<ResultRow>& rows, const std::string& method) {
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
        if (r.metric_name != "accuracy") continue;
        if (!method.empty() && r.method != method) continue;
        auto& a = acc[{r.t, r.N}];
        a.first += r.metric_value;
        ++a.second;
    }
    AccuracyTable table;
    for (const auto& [cell, a] : acc) table[cell] = a.first / static_cast<double>(a.second);
    return table;
}

RunOutput run_experiment(const ExperimentConfig& config, std::size_t threads, std::ostream* log) {
    threads = resolve_threads(threads);
    switch (config.experiment) {
        case ExperimentKind::continuous_risk:
        case ExperimentKind::binary_accuracy: return run_sweep(config, threads, log);
        case ExperimentKind::markov_exact: return run_markov(config, threads);
        case ExperimentKind::fit_predict: return run_fit(config, threads, log);
        default: return run_validate(config, threads, log);
    }
}

nlohmann::ordered_json summary_json(const ExperimentConfig& config, const RunOutput& output) {
    const std::string text = to_config_text(config);
    nlohmann::ordered_json j;
    j["run_id"] = run_id(text, config.seed);
    j["seed"] = config.seed;
    j["experiment"] = experiment_name(config.experiment);
    j["config"] = text;
    j["metrics"] = output.metrics;
    if (config.experiment == ExperimentKind::validate) j["passed"] = !output.validation_failed;
    return j;
}

int run(const ExperimentConfig& config, std::size_t threads, std::ostream& log) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        log << "error: cannot create output directory '" << config.output_dir << "'\n";
        return exit_io;
    }
    RunOutput output;
    try {
        output = run_experiment(config, threads, &log);
    } catch (const IoError& e) {
        log << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const UsageError& e) {
        log << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const Error& e) {
        // Numerical failures such as a non-identifiable fit.
        log << "error: " << e.what() << "\n";
        return exit_validation;
    }
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(dir / name, std::ios::binary);
        f << content;
        f.close();
        return static_cast<bool>(f);
    };
    if (!write("results.csv", to_csv(output.rows)) ||
        !write("summary.json", summary_json(config, output).dump(2) + "\n") ||
        (config.plot && !output.plot.empty() &&
         !write("plot.svg", render_svg(output.plot, output.x_label, output.y_label, output.log_x)))) {
        log << "error: cannot write outputs into '" << config.output_dir << "'\n";
        return exit_io;
    }
    return output.validation_failed ? exit_validation : exit_ok;
}

}  // namespace icl_ttc
