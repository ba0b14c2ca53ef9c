#include "icl_ttc/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "icl_ttc/aggregate.hpp"
#include "icl_ttc/bounds.hpp"
#include "icl_ttc/decode.hpp"
#include "icl_ttc/errors.hpp"
#include "icl_ttc/experiments.hpp"
#include "icl_ttc/fit.hpp"
#include "icl_ttc/markov.hpp"
#include "icl_ttc/parallel.hpp"
#include "icl_ttc/transformer.hpp"

namespace icl_ttc {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string g(double v) { return fmt("%.6g", v); }

bool full(ValidateScale s) { return s == ValidateScale::full; }

TaskConfig gaussian_task(std::size_t d, std::size_t n, double sigma_eps, double eta) {
    TaskConfig c;
    c.d = d;
    c.n = n;
    c.prior = GaussianPrior{1.0};
    c.label_noise_sd = sigma_eps;
    c.covariance = CovarianceSpec{CovarianceKind::identity, d, 0.0};
    c.step_size = eta;
    return c;
}

TaskConfig binary_task(std::size_t d, std::size_t n, std::size_t k, double sigma_eps, double eta) {
    TaskConfig c = gaussian_task(d, n, sigma_eps, eta);
    c.prior = BinarySparsePrior{k};
    return c;
}

double rel_err(const Vector& a, const Vector& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return b.norm() == 0.0 && a.norm() == 0.0 ? 0.0 : (a - b).norm() / scale;
}

// 1. Full-matrix inference, fast path and the explicit closed form agree.
void criterion_gd_equivalence(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t count = full(scale) ? 100 : 20;
    std::vector<double> err_full(count), err_closed(count);
    parallel_for(count, threads, [&](std::size_t inst) {
        Stream rng(derive(key, 0, inst));
        const std::size_t d = 1 + rng.uniform_index(20);
        const std::size_t n = 1 + rng.uniform_index(40);
        const std::size_t t = rng.uniform_index(201);
        TaskConfig cfg = gaussian_task(d, n, 0.5, 1.0);
        InContextDataset ds = sample_task(cfg, derive(key, 1, inst));
        const Matrix S = ds.X.transpose() * ds.X / static_cast<double>(n);
        const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        ds.config.step_size = (0.25 + 0.75 * rng.uniform()) / lmax;
        const double eta = ds.config.step_size;

        const StreamKey seed = derive(key, 2, inst);
        const Vector fast = roll_path(ds, Deterministic{}, t, seed, RollMode::fast).final_weight();
        const Vector fullm = roll_path(ds, Deterministic{}, t, seed, RollMode::full_matrix).final_weight();
        // (I − (I − ηΣ̂)^t) X⁺ y, with X⁺ = Xᵀ(XXᵀ)⁻¹ when XXᵀ is invertible.
        const Matrix M = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) - eta * S;
        Matrix Mt = Matrix::Identity(M.rows(), M.cols());
        for (std::size_t s = 0; s < t; ++s) Mt = Mt * M;
        const Matrix pinv = ds.X.completeOrthogonalDecomposition().pseudoInverse();
        const Vector closed = (Matrix::Identity(M.rows(), M.cols()) - Mt) * (pinv * ds.y);
        err_full[inst] = rel_err(fullm, fast);
        err_closed[inst] = rel_err(fast, closed);
    });
    const double worst_full = *std::max_element(err_full.begin(), err_full.end());
    const double worst_closed = *std::max_element(err_closed.begin(), err_closed.end());
    res.passed = worst_full <= 1e-10 && worst_closed <= 1e-10;
    res.details.push_back(std::to_string(count) + " instances");
    res.details.push_back("max rel err full-matrix vs fast " + g(worst_full));
    res.details.push_back("max rel err fast vs closed form " + g(worst_closed));
}

// 2. E[(I − ξξᵀ) A (I − ξξᵀ)] = tr(A) I + diag(A).
// The exact Gaussian moment is tr(A) I + Aᵀ, which coincides with the target only
// for diagonal A. Both are reported; only the stated target decides the verdict.
void criterion_noise_identity(CriterionResult& res, ValidateScale scale, std::size_t, StreamKey key) {
    const std::size_t draws = full(scale) ? 1000000 : 100000;
    std::vector<Matrix> mats{Matrix::Identity(3, 3)};
    Stream build(derive(key, 0));
    for (int r = 0; r < 2; ++r) {
        Matrix B(3, 3);
        for (int i = 0; i < 9; ++i) B.data()[i] = build.normal();
        mats.push_back((B + B.transpose()) / 2.0);
    }
    double worst_z = 0.0;
    double worst_exact_z = 0.0;
    res.details.push_back(std::to_string(draws) + " draws per matrix, A in {I, two random symmetric}");
    for (std::size_t a = 0; a < mats.size(); ++a) {
        const Matrix& A = mats[a];
        Matrix target = A.trace() * Matrix::Identity(3, 3);
        target.diagonal() += A.diagonal();
        const Matrix exact = A.trace() * Matrix::Identity(3, 3) + A.transpose();
        Matrix sum = Matrix::Zero(3, 3), sq = Matrix::Zero(3, 3);
        Stream rng(derive(key, 1, a));
        for (std::size_t s = 0; s < draws; ++s) {
            Vector xi(3);
            for (int i = 0; i < 3; ++i) xi[i] = rng.normal();
            const Matrix P = Matrix::Identity(3, 3) - xi * xi.transpose();
            const Matrix Y = P * A * P;
            sum += Y;
            sq += Y.cwiseProduct(Y);
        }
        const double m = static_cast<double>(draws);
        const Matrix mean = sum / m;
        const Matrix var = (sq / m - mean.cwiseProduct(mean)) * (m / (m - 1.0));
        double z_target = 0.0, z_exact = 0.0;
        for (int i = 0; i < 9; ++i) {
            const double se = std::sqrt(var.data()[i] / m);
            z_target = std::max(z_target, std::abs(mean.data()[i] - target.data()[i]) / se);
            z_exact = std::max(z_exact, std::abs(mean.data()[i] - exact.data()[i]) / se);
        }
        worst_z = std::max(worst_z, z_target);
        worst_exact_z = std::max(worst_exact_z, z_exact);
        res.details.push_back("matrix " + std::to_string(a) + ": max z vs tr(A)I+diag(A) " + g(z_target) +
                              ", vs tr(A)I+A^T " + g(z_exact));
    }
    res.passed = worst_z <= 4.0;
    res.details.push_back("max |mean - (tr(A)I + diag(A))| / stderr = " + g(worst_z));
    res.details.push_back("max |mean - (tr(A)I + A^T)| / stderr = " + g(worst_exact_z));
}

// 3. ‖mean of N constant-noise finals − GD iterate‖² scales as 1/N.
void criterion_fluctuation_scaling(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t d = 10, n = 20, t = 50;
    const double sigma = 0.1, eta = 0.2;
    const std::size_t reps = full(scale) ? 20 : 5;
    const std::vector<std::size_t> Ns = full(scale) ? std::vector<std::size_t>{10, 100, 1000, 10000}
                                                    : std::vector<std::size_t>{10, 100, 1000};
    std::vector<std::vector<double>> err(reps, std::vector<double>(Ns.size()));
    for (std::size_t r = 0; r < reps; ++r) {
        const InContextDataset ds = sample_task(gaussian_task(d, n, 0.5, eta), derive(key, 0, r));
        const Vector gd = closed_form_gd(ds.X, ds.y, eta, t);
        const std::vector<Vector> finals = roll_finals(ds, ConstantNoise{sigma}, t, Ns.back(), derive(key, 1, r), threads);
        Vector sum = Vector::Zero(static_cast<Eigen::Index>(d));
        std::size_t next = 0;
        for (std::size_t i = 0; i < finals.size(); ++i) {
            sum += finals[i];
            if (i + 1 == Ns[next]) {
                err[r][next] = (sum / static_cast<double>(i + 1) - gd).squaredNorm();
                ++next;
            }
        }
    }
    std::vector<double> lx, ly;
    std::string curve;
    for (std::size_t j = 0; j < Ns.size(); ++j) {
        double m = 0.0;
        for (std::size_t r = 0; r < reps; ++r) m += err[r][j];
        m /= static_cast<double>(reps);
        lx.push_back(std::log(static_cast<double>(Ns[j])));
        ly.push_back(std::log(m));
        curve += (j ? ", " : "") + std::string("N=") + std::to_string(Ns[j]) + ":" + g(m);
    }
    const double xm = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double ym = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0, sxx = 0;
    for (std::size_t j = 0; j < lx.size(); ++j) {
        sxy += (lx[j] - xm) * (ly[j] - ym);
        sxx += (lx[j] - xm) * (lx[j] - xm);
    }
    const double slope = sxy / sxx;
    res.passed = std::abs(slope + 1.0) <= 0.15;
    res.details.push_back("eta=" + g(eta) + ", " + std::to_string(reps) + " repetitions");
    res.details.push_back("mean squared deviation " + curve);
    res.details.push_back("log-log slope " + g(slope));
}

// 4. Linear-noise ensemble beats GD; constant-noise ensemble matches GD within 5%.
void criterion_linear_nft(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t d = 72, n = 36, t = 950;
    const double eta = 1e-3, sigma_eps = 1.0, sigma = 2.0;
    const std::size_t tasks = full(scale) ? 50 : 4;
    const std::size_t N = full(scale) ? 512 : 64;
    std::vector<double> gd(tasks), lin(tasks), con(tasks);
    parallel_for(tasks, threads, [&](std::size_t i) {
        const InContextDataset ds = sample_task(gaussian_task(d, n, sigma_eps, eta), derive(key, 0, i));
        gd[i] = excess_risk(closed_form_gd(ds.X, ds.y, eta, t), ds.w_star, ds.eigenvalues);
        const auto lf = roll_finals(ds, LinearNoise{sigma, LinearForm::additive}, t, N, derive(key, 1, i), 1);
        lin[i] = excess_risk(aggregate_avg(lf).w_hat, ds.w_star, ds.eigenvalues);
        const auto cf = roll_finals(ds, ConstantNoise{sigma}, t, N, derive(key, 2, i), 1);
        con[i] = excess_risk(aggregate_avg(cf).w_hat, ds.w_star, ds.eigenvalues);
    });
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double mg = mean(gd), ml = mean(lin), mc = mean(con);
    const auto non_finite = std::count_if(lin.begin(), lin.end(), [](double v) { return !std::isfinite(v); });
    const bool linear_ok = ml < mg;
    const bool constant_ok = std::abs(mc - mg) <= 0.05 * mg;
    res.passed = linear_ok && constant_ok;
    res.details.push_back(std::to_string(tasks) + " tasks, N=" + std::to_string(N) + ", sigma^2=4, t=950");
    res.details.push_back("GD risk " + g(mg));
    res.details.push_back("linear-noise ensemble risk " + g(ml) + (linear_ok ? " (below GD)" : " (not below GD)"));
    res.details.push_back("constant-noise ensemble risk " + g(mc) + " (ratio to GD " + g(mc / mg) + ")");
    res.details.push_back("linear-noise tasks with non-finite risk " + std::to_string(non_finite) + "/" +
                          std::to_string(tasks) + " (mean iterate scales by 1 + sigma^2 per step)");
}

// 5. Sufficient-n binary regime: greedy and majority vote recover w*.
void criterion_sufficient_n(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t d = 30, n = 40, k = 2, T = 10, N = 64;
    const double sigma_eps = 0.1, eta = 1.0;
    const std::size_t tasks = full(scale) ? 500 : 50;
    std::vector<int> greedy(tasks), mv(tasks);
    parallel_for(tasks, threads, [&](std::size_t i) {
        const InContextDataset ds = sample_task(binary_task(d, n, k, sigma_eps, eta), derive(key, 0, i));
        greedy[i] = recovered(roll_final(ds, BinaryGreedy{k}, T, derive(key, 1, i)), ds.w_star);
        mv[i] = recovered(aggregate_mv(roll_finals(ds, BinarySample{k}, T, N, derive(key, 2, i), 1)).w_hat, ds.w_star);
    });
    const double ga = std::accumulate(greedy.begin(), greedy.end(), 0.0) / static_cast<double>(tasks);
    const double ma = std::accumulate(mv.begin(), mv.end(), 0.0) / static_cast<double>(tasks);
    res.passed = ga >= 0.99 && ma >= 0.99;
    res.details.push_back(std::to_string(tasks) + " tasks, eta=1, T=10, N=64");
    res.details.push_back("greedy accuracy " + g(ga));
    res.details.push_back("majority-vote accuracy " + g(ma));
}

// 6. Limited-n binary regime: greedy near 2/d, majority vote high.
void criterion_limited_n(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t d = 10, n = 1, k = 1, T = 40, N = 200;
    const double sigma_eps = 0.0, eta = 1.0;
    const std::size_t tasks = full(scale) ? 2000 : 200;
    std::vector<int> greedy(tasks), mv(tasks);
    parallel_for(tasks, threads, [&](std::size_t i) {
        const InContextDataset ds = sample_task(binary_task(d, n, k, sigma_eps, eta), derive(key, 0, i));
        greedy[i] = recovered(roll_final(ds, BinaryGreedy{k}, T, derive(key, 1, i)), ds.w_star);
        mv[i] = recovered(aggregate_mv(roll_finals(ds, BinarySample{k}, T, N, derive(key, 2, i), 1)).w_hat, ds.w_star);
    });
    const double ga = std::accumulate(greedy.begin(), greedy.end(), 0.0) / static_cast<double>(tasks);
    const double ma = std::accumulate(mv.begin(), mv.end(), 0.0) / static_cast<double>(tasks);
    res.passed = std::abs(ga - 0.20) <= 0.07 && ma >= 0.90;
    res.details.push_back(std::to_string(tasks) + " tasks, T=40, N=200");
    res.details.push_back("greedy accuracy " + g(ga));
    res.details.push_back("majority-vote accuracy " + g(ma));
}

// Final states of one path at the requested steps.
std::vector<std::size_t> states_at(const InContextDataset& ds, const StateSpace& space, std::size_t t_max,
                                   const std::vector<std::size_t>& steps, StreamKey seed) {
    const ReasoningPath path = roll_path(ds, BinarySample{space.k}, t_max, seed);
    std::vector<std::size_t> out;
    for (std::size_t t : steps) out.push_back(space.index_of(canonical_support(path.weights[t])));
    return out;
}

// 7. Exact chain marginals agree with simulated path marginals.
void criterion_chain_agreement(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t d = 4, n = 3, k = 1;
    const std::vector<std::size_t> steps{1, 5, 20};
    const std::size_t instances = full(scale) ? 20 : 5;
    const std::size_t paths = full(scale) ? 50000 : 10000;
    std::vector<double> worst(instances);
    parallel_for(instances, threads, [&](std::size_t inst) {
        const InContextDataset ds = sample_task(binary_task(d, n, k, 0.1, 1.0), derive(key, 0, inst));
        const MarkovChain chain = build_chain(ds, 1.0);
        std::vector<Vector> counts(steps.size(), Vector::Zero(static_cast<Eigen::Index>(chain.space.size())));
        for (std::size_t p = 0; p < paths; ++p) {
            const auto s = states_at(ds, chain.space, steps.back(), steps, derive(key, 1 + inst, p));
            for (std::size_t j = 0; j < steps.size(); ++j) counts[j][static_cast<Eigen::Index>(s[j])] += 1.0;
        }
        double w = 0.0;
        for (std::size_t j = 0; j < steps.size(); ++j) {
            const Vector pi = evolve(chain, steps[j]);
            w = std::max(w, 0.5 * (counts[j] / static_cast<double>(paths) - pi).lpNorm<1>());
        }
        worst[inst] = w;
    });
    const double tv = *std::max_element(worst.begin(), worst.end());
    res.passed = tv <= 0.02;
    res.details.push_back(std::to_string(instances) + " instances (d=4, k=1, n=3), " + std::to_string(paths) + " paths");
    res.details.push_back("max total-variation distance " + g(tv));
}

// 8. Majority-vote success never falls below the Hoeffding bound.
void criterion_hoeffding(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    const std::size_t d = 4, n = 3, k = 1;
    const std::vector<std::size_t> steps{1, 5, 20};
    const std::vector<std::size_t> Ns{1, 4, 16, 64, 256};
    const std::size_t instances = full(scale) ? 5 : 2;
    const std::size_t reps = full(scale) ? 1000 : 200;
    const std::size_t w_count = binomial(d, k);

    struct Cell {
        std::size_t inst, t, N;
        double delta, bound, p_hat, se;
    };
    std::vector<std::vector<Cell>> per_inst(instances);
    parallel_for(instances, threads, [&](std::size_t inst) {
        // Instances are drawn until one has Δ_t > 0 at some step of the grid.
        InContextDataset ds;
        MarkovChain chain;
        std::vector<GapReport> gaps;
        for (std::size_t attempt = 0;; ++attempt) {
            ds = sample_task(binary_task(d, n, k, 0.1, 1.0), derive(derive(key, 0, inst), attempt));
            chain = build_chain(ds, 1.0);
            gaps.clear();
            bool any = false;
            for (std::size_t t : steps) {
                gaps.push_back(delta_gap(chain, t, ds.w_star));
                any = any || gaps.back().delta_t > 0.0;
            }
            if (any) break;
        }
        const std::size_t star = gaps.front().star_index;
        std::vector<std::vector<std::size_t>> success(steps.size(), std::vector<std::size_t>(Ns.size(), 0));
        for (std::size_t r = 0; r < reps; ++r) {
            std::vector<std::vector<std::size_t>> votes(steps.size(), std::vector<std::size_t>(chain.space.size(), 0));
            std::size_t next = 0;
            for (std::size_t p = 0; p < Ns.back(); ++p) {
                const auto s = states_at(ds, chain.space, steps.back(), steps, derive(derive(key, 1 + inst, r), p));
                for (std::size_t j = 0; j < steps.size(); ++j) ++votes[j][s[j]];
                if (p + 1 == Ns[next]) {
                    for (std::size_t j = 0; j < steps.size(); ++j) {
                        // Majority vote with ties to the lexicographically smallest state.
                        const auto best = std::max_element(votes[j].begin(), votes[j].end());
                        if (static_cast<std::size_t>(best - votes[j].begin()) == star) ++success[j][next];
                    }
                    ++next;
                }
            }
        }
        for (std::size_t j = 0; j < steps.size(); ++j) {
            if (!(gaps[j].delta_t > 0.0)) continue;
            for (std::size_t q = 0; q < Ns.size(); ++q) {
                const double p_hat = static_cast<double>(success[j][q]) / static_cast<double>(reps);
                const double se = std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(reps));
                per_inst[inst].push_back({inst, steps[j], Ns[q], gaps[j].delta_t,
                                          hoeffding_mv_bound(gaps[j].delta_t, Ns[q], w_count).value, p_hat, se});
            }
        }
    });
    std::size_t cells = 0, violations = 0;
    double min_margin = INFINITY;
    for (const auto& v : per_inst)
        for (const auto& c : v) {
            ++cells;
            const double margin = c.p_hat - (c.bound - 3.0 * c.se);
            min_margin = std::min(min_margin, margin);
            if (margin < 0.0) {
                ++violations;
                res.details.push_back("violation inst " + std::to_string(c.inst) + " t=" + std::to_string(c.t) +
                                      " N=" + std::to_string(c.N) + " p=" + g(c.p_hat) + " bound=" + g(c.bound));
            }
        }
    res.passed = cells > 0 && violations == 0;
    res.details.insert(res.details.begin(), std::to_string(cells) + " grid cells with delta_t > 0 over " +
                                                std::to_string(instances) + " instances, " +
                                                std::to_string(reps) + " repetitions each");
    res.details.insert(res.details.begin() + 1, "min margin p_hat - (bound - 3 se) " + g(min_margin));
}

// 9. Geometric convergence of π_t(w*) at rate μ for two-state chains.
void criterion_convergence_rate(CriterionResult& res, ValidateScale scale, std::size_t, StreamKey key) {
    const std::size_t wanted = full(scale) ? 20 : 5;
    std::size_t found = 0, failures = 0;
    double worst = 0.0;
    for (std::size_t attempt = 0; found < wanted && attempt < 100000; ++attempt) {
        Stream rng(derive(key, 0, attempt));
        const std::size_t n = 1 + rng.uniform_index(3);
        const InContextDataset ds = sample_task(binary_task(2, n, 1, 0.5, 1.0), derive(key, 1, attempt));
        const MarkovChain chain = build_chain(ds, 1.0);
        const double mu = decay_rate(chain);
        if (!(mu > 0.05 && mu < 0.95)) continue;
        const std::size_t star = chain.space.index_of(canonical_support(ds.w_star));
        const double pi_inf = stationary(chain).pi[static_cast<Eigen::Index>(star)];
        std::vector<double> xs, ys;
        for (std::size_t t = 1; t <= 400; ++t) {
            const double diff = std::abs(evolve(chain, t)[static_cast<Eigen::Index>(star)] - pi_inf);
            if (diff < 1e-11) break;
            xs.push_back(static_cast<double>(t));
            ys.push_back(std::log(diff));
        }
        if (xs.size() < 3) continue;
        ++found;
        const double xm = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        const double ym = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        double sxy = 0, sxx = 0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            sxy += (xs[j] - xm) * (ys[j] - ym);
            sxx += (xs[j] - xm) * (xs[j] - xm);
        }
        const double slope = sxy / sxx;
        const double rel = std::abs(slope - std::log(mu)) / std::abs(std::log(mu));
        worst = std::max(worst, rel);
        if (rel > 0.05) ++failures;
    }
    res.passed = found == wanted && failures == 0;
    res.details.push_back(std::to_string(found) + " two-state instances with 0.05 < mu < 0.95");
    res.details.push_back("max relative slope error vs log mu " + g(worst));
}

// 10. Fitter recovery on exact and simulated accuracy data.
void criterion_fitter(CriterionResult& res, ValidateScale scale, std::size_t threads, StreamKey key) {
    // (a) exact exponential curve
    std::vector<Point> pts;
    for (int T = 1; T <= 10; ++T) pts.push_back({double(T), 0.9 - 0.5 * std::exp(-0.3 * T)});
    const ExpCurveParams e = fit_exp_curve(pts);
    const double err_a = std::max({std::abs(e.gamma - 0.9), std::abs(e.kappa - 0.5), std::abs(e.mu - 0.3)});
    const bool ok_a = err_a <= 1e-6;

    // (b) self-consistent synthetic surface
    const double gp = 0.8, kp = 0.6, mu = 0.35, alpha = 0.97, beta = 0.9, gam = 0.6, kap = 0.5;
    auto gap = [&](double T) { return gam - kap * std::exp(-mu * T); };
    auto surface = [&](double T, double N) {
        return N == 1 ? gp - kp * std::exp(-mu * T) : alpha - beta * std::exp(-gap(T) * gap(T) * N / 2.0);
    };
    AccuracyTable synth;
    for (std::size_t T = 1; T <= 6; ++T)
        for (std::size_t N : {1, 2, 4, 8, 16, 32}) synth[{T, N}] = surface(double(T), double(N));
    double err_b = 0.0;
    for (std::size_t N : {2, 4, 8, 16, 32}) {
        const Prediction p = low_to_high_predict(synth, 20, N);
        err_b = std::max(err_b, std::abs(p.value - std::clamp(surface(20.0, double(N)), 0.0, 1.0)));
    }
    const bool ok_b = err_b <= 1e-6;

    // (c) binary simulator tables, held-out large T
    TaskConfig task = binary_task(10, 5, 1, 0.1, 1.0);
    const std::vector<std::size_t> low_t{1, 2, 3, 4, 5, 6};
    const std::vector<std::size_t> query_t{10, 15, 20};
    const std::vector<std::size_t> Ns{1, 2, 4, 8, 16, 32, 64};
    const std::size_t trials = full(scale) ? 2000 : 300;
    AccuracyTable low, held;
    const StreamKey master = derive(key, 0);
    for (const auto* ts : {&low_t, &query_t})
        for (std::size_t T : *ts)
            for (std::size_t N : Ns) {
                TrialSpec spec{task, BinarySample{1}, T, N, AggregateMethod::mv, trials, RewardChoice::oracle_l2};
                const double acc = run_trials(spec, master, threads).mean;
                (ts == &low_t ? low : held)[{T, N}] = acc;
            }
    std::size_t within = 0, total = 0;
    double worst = 0.0;
    for (std::size_t T : query_t)
        for (std::size_t N : Ns) {
            const double err = std::abs(low_to_high_predict(low, T, N).value - held.at({T, N}));
            worst = std::max(worst, err);
            ++total;
            if (err <= 0.05) ++within;
        }
    const double frac = static_cast<double>(within) / static_cast<double>(total);
    const bool ok_c = frac >= 0.8;
    res.passed = ok_a && ok_b && ok_c;
    res.details.push_back("exact curve max parameter error " + g(err_a));
    res.details.push_back("synthetic surface max prediction error " + g(err_b));
    res.details.push_back("simulator (d=10, k=1, n=5, " + std::to_string(trials) + " tasks per cell): " +
                          std::to_string(within) + "/" + std::to_string(total) +
                          " held-out cells within 0.05, worst error " + g(worst));
}

// 11. Byte-identical results.csv across reruns and thread counts.
void criterion_determinism(CriterionResult& res, ValidateScale, std::size_t threads, StreamKey key) {
    const std::vector<std::string> configs{
        "[experiment]\nkind = binary-accuracy\n[task]\nd = 6\nn = 3\nk = 1\nsigma_eps = 0.1\neta = 1\n"
        "[sweep]\nt_list = 1, 4\nn_list_samples = 1, 8\nmethods = mv, greedy\ntrials = 6\n",
        "[experiment]\nkind = continuous-risk\n[task]\nd = 8\nn = 5\nsigma_eps = 0.5\neta = 0.05\n"
        "[sampler]\nvariant = linear-noise\nsigma = 0.3\n"
        "[sweep]\nt_list = 3, 9\nn_list_samples = 1, 5\nmethods = avg, bon, gd\ntrials = 4\n",
        "[experiment]\nkind = markov-exact\n[task]\nd = 4\nn = 2\nk = 1\nsigma_eps = 0.2\neta = 1\n"
        "[sweep]\nt_list = 1, 3\nn_list_samples = 4\ntrials = 3\n",
        "[experiment]\nkind = fit-predict\n[task]\nd = 6\nn = 3\nk = 1\nsigma_eps = 0.1\neta = 1\n"
        "[sweep]\nt_list = 1, 2, 3, 4\nt_query = 8\nn_list_samples = 1, 2, 4, 8\ntrials = 20\n",
    };
    const std::size_t many = std::max<std::size_t>(threads, 4);
    bool ok = true;
    for (const auto& text : configs) {
        ExperimentConfig c = parse_config(text);
        c.seed = key.value;
        const std::string a = to_csv(run_experiment(c, 1).rows);
        const std::string b = to_csv(run_experiment(c, 1).rows);
        const std::string p = to_csv(run_experiment(c, many).rows);
        const bool same = a == b && a == p;
        ok = ok && same;
        res.details.push_back(experiment_name(c.experiment) + ": " + std::to_string(a.size()) + " bytes, " +
                              (same ? "identical" : "DIFFERENT") + " across reruns and 1 vs " +
                              std::to_string(many) + " threads");
    }
    res.passed = ok;
}

using CriterionFn = std::function<void(CriterionResult&, ValidateScale, std::size_t, StreamKey)>;

const std::map<int, std::pair<std::string, CriterionFn>>& registry() {
    static const std::map<int, std::pair<std::string, CriterionFn>> r{
        {1, {"GD equivalence of full-matrix inference, fast path and closed form", criterion_gd_equivalence}},
        {2, {"noise identity E[(I-xx^T)A(I-xx^T)] = tr(A)I + diag(A)", criterion_noise_identity}},
        {3, {"constant-noise ensemble fluctuation scales as 1/N", criterion_fluctuation_scaling}},
        {4, {"linear-noise ensemble beats GD, constant noise does not", criterion_linear_nft}},
        {5, {"binary sufficient-n: greedy and majority vote recover w*", criterion_sufficient_n}},
        {6, {"binary limited-n: greedy near 0.2, majority vote at least 0.9", criterion_limited_n}},
        {7, {"exact chain marginals match simulation", criterion_chain_agreement}},
        {8, {"majority vote respects the Hoeffding bound", criterion_hoeffding}},
        {9, {"two-state convergence rate equals mu", criterion_convergence_rate}},
        {10, {"accuracy-curve fitter recovery and prediction", criterion_fitter}},
        {11, {"results.csv determinism across reruns and threads", criterion_determinism}},
    };
    return r;
}

}  // namespace

std::vector<int> all_criteria() {
    std::vector<int> ids;
    for (const auto& [id, entry] : registry()) ids.push_back(id);
    return ids;
}

std::string criterion_title(int id) {
    auto it = registry().find(id);
    if (it == registry().end()) throw UsageError("unknown criterion " + std::to_string(id));
    return it->second.first;
}

CriterionResult run_criterion(int id, ValidateScale scale, std::size_t threads, std::uint64_t seed) {
    CriterionResult res;
    res.id = id;
    res.title = criterion_title(id);
    const auto start = Clock::now();
    try {
        registry().at(id).second(res, scale, resolve_threads(threads), derive(StreamKey{seed}, 1000 + id));
    } catch (const std::exception& e) {
        res.passed = false;
        res.details.push_back(std::string("exception: ") + e.what());
    }
    res.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

std::string format_criterion(const CriterionResult& r) {
    std::string s = "criterion " + std::to_string(r.id) + " " + (r.passed ? "PASS" : "FAIL") + " " + r.title +
                    " (" + fmt("%.1f", r.seconds) + "s)";
    for (std::size_t i = 0; i < r.details.size(); ++i) s += (i ? "; " : ": ") + r.details[i];
    return s;
}

}  // namespace icl_ttc
