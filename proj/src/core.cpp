#include "icl_ttc/core.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "icl_ttc/errors.hpp"

namespace icl_ttc {

std::size_t TaskConfig::sparsity() const {
    if (const auto* b = std::get_if<BinarySparsePrior>(&prior)) return b->k;
    return 0;
}

void TaskConfig::validate() const {
    if (d < 1) throw ConfigError("task: d must be at least 1");
    if (n < 1) throw ConfigError("task: n must be at least 1");
    if (covariance.d != d)
        throw ConfigError("task: covariance dimension " + std::to_string(covariance.d) +
                          " does not match d = " + std::to_string(d));
    if (!(covariance.r >= 0.0)) throw ConfigError("task: covariance exponent r must be >= 0");
    if (!(label_noise_sd >= 0.0) || !std::isfinite(label_noise_sd))
        throw ConfigError("task: sigma_eps must be finite and >= 0");
    if (!(step_size > 0.0) || !std::isfinite(step_size))
        throw ConfigError("task: eta must be finite and > 0");
    if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
        if (!(g->omega > 0.0) || !std::isfinite(g->omega))
            throw ConfigError("task: omega must be finite and > 0");
    } else {
        const std::size_t k = std::get<BinarySparsePrior>(prior).k;
        if (k < 1 || k >= d)
            throw ConfigError("task: binary prior needs 1 <= k < d (k = " + std::to_string(k) +
                              ", d = " + std::to_string(d) + ")");
    }
}

Vector build_covariance(const CovarianceSpec& spec) {
    if (spec.d < 1) throw ConfigError("covariance: d must be at least 1");
    if (!(spec.r >= 0.0) || !std::isfinite(spec.r))
        throw ConfigError("covariance: r must be finite and >= 0");
    const auto d = static_cast<Eigen::Index>(spec.d);
    if (spec.kind == CovarianceKind::identity) return Vector::Ones(d);
    Vector lambda(d);
    for (Eigen::Index i = 0; i < d; ++i)
        lambda[i] = std::pow(static_cast<double>(i + 1), -(spec.r + 1.0));
    return lambda;
}

InContextDataset sample_task(const TaskConfig& config, StreamKey seed) {
    config.validate();
    const auto d = static_cast<Eigen::Index>(config.d);
    const auto n = static_cast<Eigen::Index>(config.n);
    InContextDataset ds;
    ds.config = config;
    ds.eigenvalues = build_covariance(config.covariance);

    Stream prior_stream(derive(seed, 0));
    ds.w_star = Vector::Zero(d);
    if (const auto* g = std::get_if<GaussianPrior>(&config.prior)) {
        for (Eigen::Index i = 0; i < d; ++i) ds.w_star[i] = g->omega * prior_stream.normal();
    } else {
        // Partial Fisher-Yates gives a uniform k-subset.
        const std::size_t k = std::get<BinarySparsePrior>(config.prior).k;
        std::vector<std::size_t> idx(config.d);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t pick = j + prior_stream.uniform_index(config.d - j);
            std::swap(idx[j], idx[pick]);
            ds.w_star[static_cast<Eigen::Index>(idx[j])] = 1.0;
        }
    }

    Stream x_stream(derive(seed, 1));
    ds.X.resize(n, d);
    const Vector root = ds.eigenvalues.cwiseSqrt();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) ds.X(i, j) = root[j] * x_stream.normal();

    ds.y = ds.X * ds.w_star;
    if (config.label_noise_sd > 0.0) {
        Stream eps_stream(derive(seed, 2));
        for (Eigen::Index i = 0; i < n; ++i) ds.y[i] += config.label_noise_sd * eps_stream.normal();
    }
    return ds;
}

InContextDataset make_dataset(const TaskConfig& config, Matrix X, Vector y, Vector w_star) {
    config.validate();
    const auto d = static_cast<Eigen::Index>(config.d);
    const auto n = static_cast<Eigen::Index>(config.n);
    if (X.rows() != n || X.cols() != d || y.size() != n || w_star.size() != d)
        throw DimensionError("make_dataset: shapes do not match (n, d) of the config");
    InContextDataset ds;
    ds.X = std::move(X);
    ds.y = std::move(y);
    ds.w_star = std::move(w_star);
    ds.eigenvalues = build_covariance(config.covariance);
    ds.config = config;
    return ds;
}

double excess_risk(const Vector& w, const Vector& w_star, const Vector& eigenvalues) {
    if (w.size() != w_star.size() || w.size() != eigenvalues.size())
        throw DimensionError("excess_risk: length mismatch");
    return 0.5 * (eigenvalues.array() * (w - w_star).array().square()).sum();
}

bool recovered(const Vector& w, const Vector& w_star) {
    if (w.size() != w_star.size()) return false;
    return (w.array() == w_star.array()).all();
}

RiskReport evaluate(const Vector& w, const InContextDataset& dataset) {
    return RiskReport{excess_risk(w, dataset.w_star, dataset.eigenvalues),
                      recovered(w, dataset.w_star)};
}

}  // namespace icl_ttc
