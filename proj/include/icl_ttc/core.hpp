#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <variant>

#include "icl_ttc/rng.hpp"

namespace icl_ttc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class CovarianceKind { identity, polynomial_decay };

struct CovarianceSpec {
    CovarianceKind kind = CovarianceKind::identity;
    std::size_t d = 1;
    double r = 0.0;  // decay exponent, polynomial_decay only

    friend bool operator==(const CovarianceSpec&, const CovarianceSpec&) = default;
};

struct GaussianPrior {
    double omega = 1.0;
    friend bool operator==(const GaussianPrior&, const GaussianPrior&) = default;
};

struct BinarySparsePrior {
    std::size_t k = 1;
    friend bool operator==(const BinarySparsePrior&, const BinarySparsePrior&) = default;
};

using CoefficientPrior = std::variant<GaussianPrior, BinarySparsePrior>;

struct TaskConfig {
    std::size_t d = 1;
    std::size_t n = 1;
    CoefficientPrior prior = GaussianPrior{};
    double label_noise_sd = 0.0;
    CovarianceSpec covariance{};
    double step_size = 1.0;

    bool binary() const { return std::holds_alternative<BinarySparsePrior>(prior); }
    // Sparsity of a binary prior; 0 for the gaussian prior.
    std::size_t sparsity() const;

    // Throws ConfigError when any field violates its range.
    void validate() const;

    friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct InContextDataset {
    Matrix X;  // n x d, covariates as rows
    Vector y;
    Vector w_star;
    Vector eigenvalues;  // diagonal of H
    TaskConfig config;
};

struct RiskReport {
    double excess_risk = 0.0;
    bool recovered = false;
};

Vector build_covariance(const CovarianceSpec& spec);

InContextDataset sample_task(const TaskConfig& config, StreamKey seed);

// Dataset from caller-supplied data; eigenvalues come from config.covariance.
InContextDataset make_dataset(const TaskConfig& config, Matrix X, Vector y, Vector w_star);

double excess_risk(const Vector& w, const Vector& w_star, const Vector& eigenvalues);

bool recovered(const Vector& w, const Vector& w_star);

RiskReport evaluate(const Vector& w, const InContextDataset& dataset);

}  // namespace icl_ttc
