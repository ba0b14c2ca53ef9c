#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "icl_ttc/aggregate.hpp"
#include "icl_ttc/core.hpp"

namespace icl_ttc {

struct StateSpace {
    std::size_t d = 0;
    std::size_t k = 0;
    std::vector<Support> states;  // lexicographic by support

    std::size_t size() const { return states.size(); }
    // Index of the support, or size() when absent.
    std::size_t index_of(const Support& support) const;
    Vector vector_of(std::size_t index) const;
};

struct MarkovChain {
    StateSpace space;
    Matrix P;
    Vector pi1;
};

struct GapReport {
    std::size_t t = 0;
    Vector pi_t;
    double delta_t = 0.0;
    std::size_t star_index = 0;
};

enum class StationaryMethod { null_space, power_iteration };

struct StationaryReport {
    Vector pi;
    bool irreducible = false;
    bool aperiodic = true;
    StationaryMethod method = StationaryMethod::null_space;
};

struct GreedyTrajectory {
    std::vector<Support> states;  // states[j] is w_{j+1}
    std::size_t cycle_start = 0;  // first step (1-based) of the repeating block
    std::size_t cycle_length = 0;  // 0 when no repeat was seen within t_max
    bool visits_star = false;
    bool absorbed_at_star = false;  // the repeating block is the single state w*

    // State at step t >= 1, extended periodically past the observed prefix.
    const Support& state_at(std::size_t t) const;
};

std::size_t binomial(std::size_t n, std::size_t k);

StateSpace enumerate_states(std::size_t d, std::size_t k);

// Probability that the k-without-replacement sampler returns exactly `support`
// under distribution p, by summation over all orderings.
double set_probability(const Vector& p, const Support& support);

Vector transition_row(const InContextDataset& dataset, double eta, const Support& from,
                      const StateSpace& space);

// Row for an arbitrary current weight (used for the w_0 = 0 prefix step).
Vector transition_row_from(const InContextDataset& dataset, double eta, const Vector& w_from,
                           const StateSpace& space);

MarkovChain build_chain(const InContextDataset& dataset, double eta);

Vector evolve(const MarkovChain& chain, std::size_t t);

GapReport delta_gap(const MarkovChain& chain, std::size_t t, const Vector& w_star);

bool is_irreducible(const Matrix& P);

StationaryReport stationary(const MarkovChain& chain);

double decay_rate(const MarkovChain& chain);

GreedyTrajectory greedy_trajectory(const InContextDataset& dataset, double eta, std::size_t t_max);

}  // namespace icl_ttc
