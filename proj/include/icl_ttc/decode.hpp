#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "icl_ttc/core.hpp"
#include "icl_ttc/rng.hpp"

namespace icl_ttc {

struct Deterministic {
    friend bool operator==(const Deterministic&, const Deterministic&) = default;
};

struct ConstantNoise {
    double sigma = 0.0;
    friend bool operator==(const ConstantNoise&, const ConstantNoise&) = default;
};

// Additive: w + ξξᵀw (mean (1+σ²)w). Projective: w − ξξᵀw = (I − ξξᵀ)w (mean (1−σ²)w).
enum class LinearForm { additive, projective };

struct LinearNoise {
    double sigma = 0.0;
    LinearForm form = LinearForm::additive;
    friend bool operator==(const LinearNoise&, const LinearNoise&) = default;
};

struct BinarySample {
    std::size_t k = 1;
    friend bool operator==(const BinarySample&, const BinarySample&) = default;
};

struct BinaryGreedy {
    std::size_t k = 1;
    friend bool operator==(const BinaryGreedy&, const BinaryGreedy&) = default;
};

using SamplerKind = std::variant<Deterministic, ConstantNoise, LinearNoise, BinarySample, BinaryGreedy>;

bool is_binary(const SamplerKind& sampler);
std::string sampler_name(const SamplerKind& sampler);
// Throws ConfigError for negative σ or k outside [1, d).
void validate_sampler(const SamplerKind& sampler, std::size_t d);

struct ReasoningPath {
    std::vector<Vector> weights;  // w_0 .. w_t
    SamplerKind sampler;
    StreamKey seed;

    const Vector& final_weight() const { return weights.back(); }
    std::size_t steps() const { return weights.size() - 1; }
};

struct PathBatch {
    std::vector<ReasoningPath> paths;
    StreamKey master_seed;

    std::vector<Vector> finals() const;
};

enum class RollMode { fast, full_matrix };

Vector clip_norm(const Vector& w_tilde);

// Sequential draws without replacement; sorted indices are returned.
std::vector<std::size_t> sample_k_without_replacement(const Vector& p, std::size_t k, Stream& stream);
std::vector<std::size_t> sample_k_without_replacement(const Vector& p, std::size_t k, StreamKey seed);

// Probability that the sequential scheme picks index j next, given the
// indices already taken. Shared with the exact chain so both use one law.
double next_pick_probability(const Vector& p, const std::vector<bool>& taken, std::size_t j);

std::vector<std::size_t> greedy_top_k(const Vector& w_tilde, std::size_t k);

Vector indicator(const std::vector<std::size_t>& support, std::size_t d);

Vector sample_step(const SamplerKind& sampler, const Vector& w_tilde, Stream& stream);
Vector sample_step(const SamplerKind& sampler, const Vector& w_tilde, StreamKey seed);

StreamKey path_seed(StreamKey master_seed, std::size_t path_index);

ReasoningPath roll_path(const InContextDataset& dataset, const SamplerKind& sampler, std::size_t t,
                        StreamKey seed, RollMode mode = RollMode::fast);

// Final weight of roll_path(..., fast) without storing intermediate iterates.
Vector roll_final(const InContextDataset& dataset, const SamplerKind& sampler, std::size_t t,
                  StreamKey seed);

PathBatch roll_batch(const InContextDataset& dataset, const SamplerKind& sampler, std::size_t t,
                     std::size_t N, StreamKey master_seed, std::size_t threads = 1);

// Finals of roll_batch, element i equal to roll_batch(...).paths[i].final_weight().
std::vector<Vector> roll_finals(const InContextDataset& dataset, const SamplerKind& sampler,
                                std::size_t t, std::size_t N, StreamKey master_seed,
                                std::size_t threads = 1);

// E[w_t] for the linear-noise decoder:
//   Σ_{j<t} (1 ± σ²)^{j+1} (I − ηΣ̂)^j (η/n) Xᵀy,
// with + for the additive form and − for the projective form.
Vector expected_path_linear_nft(const Matrix& X, const Vector& y, double eta, double sigma,
                                std::size_t t, LinearForm form = LinearForm::projective);

}  // namespace icl_ttc
