#pragma once

#include <cstddef>

#include "icl_ttc/core.hpp"

namespace icl_ttc {

// All bounds are reported with absolute constant 1; they are shape curves.

struct GdBoundReport {
    std::size_t k_star = 1;
    double lambda_tilde = 0.0;
    double bias_term = 0.0;
    double variance_term = 0.0;
    double total = 0.0;
};

struct EnsembleBoundReport {
    double lambda_eff_bias = 0.0;
    double lambda_eff_var = 0.0;
    double vartheta = 0.0;
    double varsigma = 0.0;
    double effective_rank = 0.0;
};

struct GapBoundReport {
    double p_trans = 0.0;
    double p_recurr = 0.0;
    double delta_lower = 0.0;
    bool in_regime = false;  // n >= (6k + 3σ_ε)^4
};

struct HoeffdingReport {
    double value = 0.0;
    bool condition_violated = false;  // Δ_t <= 0
};

// Eigenvalues must be positive and non-increasing.
GdBoundReport gd_risk_bound(const Vector& eigenvalues, std::size_t n, double eta, std::size_t t,
                            double omega, double sigma_eps);

EnsembleBoundReport ensemble_bound_terms(const Vector& eigenvalues, std::size_t n, double eta,
                                         std::size_t t, double sigma, double sigma_eps,
                                         std::size_t d, double omega = 1.0);

GapBoundReport sufficient_n_gap_bound(std::size_t n, std::size_t d, std::size_t k, double sigma_eps,
                                      std::size_t t);

HoeffdingReport hoeffding_mv_bound(double delta_t, std::size_t N, std::size_t w_count);

double effective_rank(const Vector& eigenvalues);

// Whether a binary-task dataset lies in the concentration event under which
// the sufficient-n gap bound is stated: for A_i = Σ_j x_ji², B_il = Σ_j x_ji x_jl
// and the noise correlations Σ_j x_ji ε_j,
//   |A_i − n| <= n^{3/4},  |B_il| <= n^{3/4} (i != l),  |Σ_j x_ji ε_j| <= σ_ε n^{3/4}.
bool concentration_event_holds(const InContextDataset& dataset);

}  // namespace icl_ttc
