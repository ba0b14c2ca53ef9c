#include "icl_ttc/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "icl_ttc/decode.hpp"
#include "icl_ttc/errors.hpp"
#include "icl_ttc/transformer.hpp"

namespace icl_ttc {

namespace {

constexpr std::size_t kMaxStates = 100000;
constexpr std::size_t kMaxDim = 20;
constexpr std::size_t kMaxExactK = 3;

}  // namespace

std::size_t StateSpace::index_of(const Support& support) const {
    auto it = std::lower_bound(states.begin(), states.end(), support);
    if (it == states.end() || *it != support) return states.size();
    return static_cast<std::size_t>(it - states.begin());
}

Vector StateSpace::vector_of(std::size_t index) const { return indicator(states.at(index), d); }

const Support& GreedyTrajectory::state_at(std::size_t t) const {
    if (t < 1) throw DomainError("state_at: t must be at least 1");
    if (t <= states.size()) return states[t - 1];
    if (cycle_length == 0) throw DomainError("state_at: step beyond the recorded trajectory");
    const std::size_t offset = (t - cycle_start) % cycle_length;
    return states[cycle_start - 1 + offset];
}

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > 10 * kMaxStates * kMaxStates) return r;  // only compared against the cap
    }
    return r;
}

StateSpace enumerate_states(std::size_t d, std::size_t k) {
    if (k < 1 || k >= d) throw ConfigError("enumerate_states: need 1 <= k < d");
    if (d > kMaxDim || binomial(d, k) > kMaxStates)
        throw CapacityError("enumerate_states: C(" + std::to_string(d) + "," + std::to_string(k) +
                            ") exceeds the supported state count (d <= 20, at most 1e5 states)");
    StateSpace space{d, k, {}};
    space.states.reserve(binomial(d, k));
    Support s(k);
    std::iota(s.begin(), s.end(), std::size_t{0});
    for (;;) {
        space.states.push_back(s);
        std::size_t i = k;
        while (i > 0 && s[i - 1] == d - k + (i - 1)) --i;
        if (i == 0) break;
        ++s[i - 1];
        for (std::size_t j = i; j < k; ++j) s[j] = s[j - 1] + 1;
    }
    return space;
}

double set_probability(const Vector& p, const Support& support) {
    if (support.size() > kMaxExactK)
        throw CapacityError("set_probability: exact rows support k <= 3");
    Support order = support;
    std::sort(order.begin(), order.end());
    std::vector<bool> taken(static_cast<std::size_t>(p.size()), false);
    double total = 0.0;
    do {
        std::fill(taken.begin(), taken.end(), false);
        double prob = 1.0;
        for (std::size_t j : order) {
            prob *= next_pick_probability(p, taken, j);
            if (prob == 0.0) break;
            taken[j] = true;
        }
        total += prob;
    } while (std::next_permutation(order.begin(), order.end()));
    return total;
}

Vector transition_row_from(const InContextDataset& dataset, double eta, const Vector& w_from,
                           const StateSpace& space) {
    if (space.k > kMaxExactK) throw CapacityError("transition_row: exact rows support k <= 3");
    const Vector p = clip_norm(gd_step(dataset.X, dataset.y, w_from, eta));
    Vector row(static_cast<Eigen::Index>(space.size()));
    for (std::size_t s = 0; s < space.size(); ++s)
        row[static_cast<Eigen::Index>(s)] = set_probability(p, space.states[s]);
    return row;
}

Vector transition_row(const InContextDataset& dataset, double eta, const Support& from,
                      const StateSpace& space) {
    return transition_row_from(dataset, eta, indicator(from, space.d), space);
}

MarkovChain build_chain(const InContextDataset& dataset, double eta) {
    const std::size_t k = dataset.config.sparsity();
    if (k == 0) throw UsageError("build_chain: requires a binary-sparse task");
    if (k > kMaxExactK) throw CapacityError("build_chain: exact rows support k <= 3");
    MarkovChain chain;
    chain.space = enumerate_states(dataset.config.d, k);
    const auto m = static_cast<Eigen::Index>(chain.space.size());
    chain.P.resize(m, m);
    for (Eigen::Index s = 0; s < m; ++s)
        chain.P.row(s) = transition_row(dataset, eta, chain.space.states[static_cast<std::size_t>(s)],
                                        chain.space)
                             .transpose();
    chain.pi1 = transition_row_from(dataset, eta, Vector::Zero(dataset.X.cols()), chain.space);
    return chain;
}

Vector evolve(const MarkovChain& chain, std::size_t t) {
    if (t < 1) throw DomainError("evolve: t must be at least 1");
    Eigen::RowVectorXd pi = chain.pi1.transpose();
    for (std::size_t s = 1; s < t; ++s) pi = pi * chain.P;
    return pi.transpose();
}

GapReport delta_gap(const MarkovChain& chain, std::size_t t, const Vector& w_star) {
    const Support star = canonical_support(w_star);
    if (star.size() != chain.space.k || static_cast<std::size_t>(w_star.size()) != chain.space.d)
        throw UsageError("delta_gap: w_star is not a k-sparse state of the chain");
    GapReport report;
    report.t = t;
    report.pi_t = evolve(chain, t);
    report.star_index = chain.space.index_of(star);
    double other = 0.0;
    for (Eigen::Index s = 0; s < report.pi_t.size(); ++s)
        if (static_cast<std::size_t>(s) != report.star_index) other = std::max(other, report.pi_t[s]);
    report.delta_t = report.pi_t[static_cast<Eigen::Index>(report.star_index)] - other;
    return report;
}

namespace {

std::vector<bool> reachable(const Matrix& P, bool transpose) {
    const auto m = static_cast<std::size_t>(P.rows());
    std::vector<bool> seen(m, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < m; ++v) {
            const double w = transpose ? P(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u))
                                       : P(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
            if (w > 0.0 && !seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

// Period of an irreducible chain: gcd of level differences along edges.
std::size_t period(const Matrix& P) {
    const auto m = static_cast<std::size_t>(P.rows());
    std::vector<long> level(m, -1);
    std::vector<std::size_t> queue{0};
    level[0] = 0;
    std::size_t g = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::size_t u = queue[head];
        for (std::size_t v = 0; v < m; ++v) {
            if (!(P(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0)) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                const long diff = std::labs(level[u] + 1 - level[v]);
                g = std::gcd(g, static_cast<std::size_t>(diff));
            }
        }
    }
    return g == 0 ? 1 : g;
}

}  // namespace

bool is_irreducible(const Matrix& P) {
    const auto fwd = reachable(P, false);
    const auto bwd = reachable(P, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

StationaryReport stationary(const MarkovChain& chain) {
    const Matrix& P = chain.P;
    const Eigen::Index m = P.rows();
    StationaryReport report;
    report.irreducible = is_irreducible(P);
    if (report.irreducible) {
        report.aperiodic = period(P) == 1;
        report.method = StationaryMethod::null_space;
        Matrix A = P.transpose() - Matrix::Identity(m, m);
        A.row(m - 1).setOnes();
        Vector b = Vector::Zero(m);
        b[m - 1] = 1.0;
        report.pi = A.fullPivLu().solve(b);
        return report;
    }
    // Reducible: limit of π₁ P^s, reached through repeated squaring of P.
    report.method = StationaryMethod::power_iteration;
    report.aperiodic = true;
    Matrix Q = P;
    Eigen::RowVectorXd pi = chain.pi1.transpose();
    Eigen::RowVectorXd prev = pi;
    for (int iter = 0; iter < 64; ++iter) {
        pi = chain.pi1.transpose() * Q;
        Q = Q * Q;
        if (iter > 0 && (pi - prev).lpNorm<1>() < 1e-15) break;
        prev = pi;
    }
    const double residual = (pi * P - pi).lpNorm<1>();
    if (residual > 1e-9)
        throw NumericalError("stationary: pi_t does not converge (periodic behaviour, residual " +
                             std::to_string(residual) + ")");
    report.pi = pi.transpose();
    return report;
}

double decay_rate(const MarkovChain& chain) {
    const Matrix& P = chain.P;
    if (P.rows() == 2) return P(0, 0) + P(1, 1) - 1.0;
    Eigen::EigenSolver<Matrix> solver(P.transpose());
    if (solver.info() != Eigen::Success) throw NumericalError("decay_rate: eigensolver failed");
    const auto values = solver.eigenvalues();
    const auto vectors = solver.eigenvectors();
    const Eigen::MatrixXcd Pc = P.transpose().cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const Eigen::VectorXcd v = vectors.col(i);
        const double res = (Pc * v - values[i] * v).norm();
        if (res > 1e-8 * std::max(1.0, v.norm()))
            throw NumericalError("decay_rate: eigensolve residual " + std::to_string(res) +
                                 " exceeds 1e-8");
    }
    std::vector<double> moduli(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) moduli[static_cast<std::size_t>(i)] = std::abs(values[i]);
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    return moduli.size() > 1 ? moduli[1] : 0.0;
}

GreedyTrajectory greedy_trajectory(const InContextDataset& dataset, double eta, std::size_t t_max) {
    const std::size_t k = dataset.config.sparsity();
    if (k == 0) throw UsageError("greedy_trajectory: requires a binary-sparse task");
    const Support star = canonical_support(dataset.w_star);
    GreedyTrajectory traj;
    std::map<Support, std::size_t> first_seen;
    Vector w = Vector::Zero(dataset.X.cols());
    for (std::size_t step = 1; step <= t_max; ++step) {
        Support s = greedy_top_k(gd_step(dataset.X, dataset.y, w, eta), k);
        if (s == star) traj.visits_star = true;
        auto [it, inserted] = first_seen.emplace(s, step);
        if (!inserted) {
            traj.cycle_start = it->second;
            traj.cycle_length = step - it->second;
            traj.absorbed_at_star = traj.cycle_length == 1 && s == star;
            break;
        }
        w = indicator(s, dataset.config.d);
        traj.states.push_back(std::move(s));
    }
    return traj;
}

}  // namespace icl_ttc
