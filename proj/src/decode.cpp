#include "icl_ttc/decode.hpp"

#include <algorithm>
#include <numeric>

#include "icl_ttc/errors.hpp"
#include "icl_ttc/parallel.hpp"
#include "icl_ttc/transformer.hpp"

namespace icl_ttc {

namespace {

std::size_t binary_k(const SamplerKind& s) {
    if (const auto* b = std::get_if<BinarySample>(&s)) return b->k;
    if (const auto* g = std::get_if<BinaryGreedy>(&s)) return g->k;
    return 0;
}

}  // namespace

bool is_binary(const SamplerKind& sampler) {
    return std::holds_alternative<BinarySample>(sampler) ||
           std::holds_alternative<BinaryGreedy>(sampler);
}

std::string sampler_name(const SamplerKind& sampler) {
    switch (sampler.index()) {
        case 0: return "deterministic";
        case 1: return "constant-noise";
        case 2: return "linear-noise";
        case 3: return "binary-sample";
        default: return "binary-greedy";
    }
}

void validate_sampler(const SamplerKind& sampler, std::size_t d) {
    double sigma = 0.0;
    if (const auto* c = std::get_if<ConstantNoise>(&sampler)) sigma = c->sigma;
    if (const auto* l = std::get_if<LinearNoise>(&sampler)) sigma = l->sigma;
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw ConfigError("sampler: sigma must be finite and >= 0");
    if (is_binary(sampler)) {
        const std::size_t k = binary_k(sampler);
        if (k < 1 || k >= d)
            throw ConfigError("sampler: binary decoder needs 1 <= k < d (k = " + std::to_string(k) +
                              ", d = " + std::to_string(d) + ")");
    }
}

std::vector<Vector> PathBatch::finals() const {
    std::vector<Vector> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(p.final_weight());
    return out;
}

Vector clip_norm(const Vector& w_tilde) {
    const Vector clipped = w_tilde.cwiseMax(0.0);
    const double total = clipped.sum();
    if (!(total > 0.0) || !std::isfinite(total))
        return Vector::Constant(w_tilde.size(), 1.0 / static_cast<double>(w_tilde.size()));
    return clipped / total;
}

double next_pick_probability(const Vector& p, const std::vector<bool>& taken, std::size_t j) {
    if (taken[j]) return 0.0;
    double mass = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < taken.size(); ++i) {
        if (taken[i]) continue;
        mass += p[static_cast<Eigen::Index>(i)];
        ++free_count;
    }
    if (mass > 0.0) return p[static_cast<Eigen::Index>(j)] / mass;
    return 1.0 / static_cast<double>(free_count);
}

std::vector<std::size_t> sample_k_without_replacement(const Vector& p, std::size_t k, Stream& stream) {
    const auto d = static_cast<std::size_t>(p.size());
    if (k > d) throw ConfigError("sample_k_without_replacement: k exceeds the dimension");
    std::vector<bool> taken(d, false);
    std::vector<std::size_t> picked;
    picked.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        double mass = 0.0;
        std::size_t last_positive = d;
        for (std::size_t i = 0; i < d; ++i) {
            if (taken[i]) continue;
            const double pi = p[static_cast<Eigen::Index>(i)];
            mass += pi;
            if (pi > 0.0) last_positive = i;
        }
        std::size_t choice = d;
        if (mass > 0.0) {
            const double u = stream.uniform() * mass;
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                if (taken[i]) continue;
                const double pi = p[static_cast<Eigen::Index>(i)];
                if (!(pi > 0.0)) continue;
                acc += pi;
                if (u < acc) {
                    choice = i;
                    break;
                }
            }
            // Rounding can leave u at the top of the range.
            if (choice == d) choice = last_positive;
        } else {
            const std::size_t free_count = d - draw;
            std::size_t target = stream.uniform_index(free_count);
            for (std::size_t i = 0; i < d; ++i) {
                if (taken[i]) continue;
                if (target == 0) {
                    choice = i;
                    break;
                }
                --target;
            }
        }
        taken[choice] = true;
        picked.push_back(choice);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::vector<std::size_t> sample_k_without_replacement(const Vector& p, std::size_t k, StreamKey seed) {
    Stream stream(seed);
    return sample_k_without_replacement(p, k, stream);
}

std::vector<std::size_t> greedy_top_k(const Vector& w_tilde, std::size_t k) {
    const auto d = static_cast<std::size_t>(w_tilde.size());
    if (k < 1 || k > d) throw ConfigError("greedy_top_k: k must lie in [1, d]");
    const Vector p = clip_norm(w_tilde);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p[static_cast<Eigen::Index>(a)] > p[static_cast<Eigen::Index>(b)];
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

Vector indicator(const std::vector<std::size_t>& support, std::size_t d) {
    Vector w = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i : support) w[static_cast<Eigen::Index>(i)] = 1.0;
    return w;
}

Vector sample_step(const SamplerKind& sampler, const Vector& w_tilde, Stream& stream) {
    const Eigen::Index d = w_tilde.size();
    switch (sampler.index()) {
        case 0:
            return w_tilde;
        case 1: {
            const double sigma = std::get<ConstantNoise>(sampler).sigma;
            Vector out = w_tilde;
            for (Eigen::Index i = 0; i < d; ++i) out[i] += sigma * stream.normal();
            return out;
        }
        case 2: {
            const auto& lin = std::get<LinearNoise>(sampler);
            Vector xi(d);
            for (Eigen::Index i = 0; i < d; ++i) xi[i] = lin.sigma * stream.normal();
            const double proj = xi.dot(w_tilde);
            return lin.form == LinearForm::additive ? Vector(w_tilde + proj * xi)
                                                    : Vector(w_tilde - proj * xi);
        }
        case 3: {
            const std::size_t k = std::get<BinarySample>(sampler).k;
            return indicator(sample_k_without_replacement(clip_norm(w_tilde), k, stream),
                             static_cast<std::size_t>(d));
        }
        default: {
            const std::size_t k = std::get<BinaryGreedy>(sampler).k;
            return indicator(greedy_top_k(w_tilde, k), static_cast<std::size_t>(d));
        }
    }
}

Vector sample_step(const SamplerKind& sampler, const Vector& w_tilde, StreamKey seed) {
    Stream stream(seed);
    return sample_step(sampler, w_tilde, stream);
}

StreamKey path_seed(StreamKey master_seed, std::size_t path_index) {
    return derive(master_seed, path_index);
}

ReasoningPath roll_path(const InContextDataset& dataset, const SamplerKind& sampler, std::size_t t,
                        StreamKey seed, RollMode mode) {
    validate_sampler(sampler, dataset.config.d);
    const double eta = dataset.config.step_size;
    ReasoningPath path{{}, sampler, seed};
    path.weights.reserve(t + 1);
    path.weights.push_back(Vector::Zero(dataset.X.cols()));
    if (mode == RollMode::fast) {
        for (std::size_t l = 0; l < t; ++l) {
            const Vector w_tilde = gd_step(dataset.X, dataset.y, path.weights.back(), eta);
            Stream stream(derive(seed, l));
            path.weights.push_back(sample_step(sampler, w_tilde, stream));
        }
        return path;
    }
    const TransformerParams params = build_gd_params(dataset.config.d, eta, dataset.config.n);
    PromptEmbedding prompt(dataset.X, dataset.y, path.weights.back());
    for (std::size_t l = 0; l < t; ++l) {
        const Matrix out = forward(params, prompt.matrix());
        const Vector w_tilde = extract_coefficient(out.col(out.cols() - 1));
        Stream stream(derive(seed, l));
        path.weights.push_back(sample_step(sampler, w_tilde, stream));
        prompt.append(path.weights.back());
    }
    return path;
}

Vector roll_final(const InContextDataset& dataset, const SamplerKind& sampler, std::size_t t,
                  StreamKey seed) {
    validate_sampler(sampler, dataset.config.d);
    const double eta = dataset.config.step_size;
    Vector w = Vector::Zero(dataset.X.cols());
    for (std::size_t l = 0; l < t; ++l) {
        const Vector w_tilde = gd_step(dataset.X, dataset.y, w, eta);
        Stream stream(derive(seed, l));
        w = sample_step(sampler, w_tilde, stream);
    }
    return w;
}

PathBatch roll_batch(const InContextDataset& dataset, const SamplerKind& sampler, std::size_t t,
                     std::size_t N, StreamKey master_seed, std::size_t threads) {
    if (N < 1) throw ConfigError("roll_batch: N must be at least 1");
    PathBatch batch{std::vector<ReasoningPath>(N), master_seed};
    parallel_for(N, threads, [&](std::size_t i) {
        batch.paths[i] = roll_path(dataset, sampler, t, path_seed(master_seed, i));
    });
    return batch;
}

std::vector<Vector> roll_finals(const InContextDataset& dataset, const SamplerKind& sampler,
                                std::size_t t, std::size_t N, StreamKey master_seed,
                                std::size_t threads) {
    if (N < 1) throw ConfigError("roll_finals: N must be at least 1");
    std::vector<Vector> finals(N);
    parallel_for(N, threads, [&](std::size_t i) {
        finals[i] = roll_final(dataset, sampler, t, path_seed(master_seed, i));
    });
    return finals;
}

Vector expected_path_linear_nft(const Matrix& X, const Vector& y, double eta, double sigma,
                                std::size_t t, LinearForm form) {
    if (X.rows() != y.size()) throw DimensionError("expected_path_linear_nft: shape mismatch");
    const double n = static_cast<double>(X.rows());
    const double s2 = sigma * sigma;
    const double factor = form == LinearForm::additive ? 1.0 + s2 : 1.0 - s2;
    const Vector b = (eta / n) * (X.transpose() * y);
    // Horner form of the sum: v_{j+1} = factor * ((I − ηΣ̂) v_j + b), v_0 = 0.
    Vector v = Vector::Zero(X.cols());
    for (std::size_t j = 0; j < t; ++j) {
        const Vector contracted = v - (eta / n) * (X.transpose() * (X * v));
        v = factor * (contracted + b);
    }
    return v;
}

}  // namespace icl_ttc
