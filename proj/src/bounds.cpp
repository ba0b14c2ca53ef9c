#include "icl_ttc/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "icl_ttc/errors.hpp"

namespace icl_ttc {

namespace {

void check_spectrum(const Vector& lambda) {
    if (lambda.size() < 1) throw DimensionError("bounds: empty spectrum");
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i] > 0.0)) throw DomainError("bounds: eigenvalues must be positive");
        if (i > 0 && lambda[i] > lambda[i - 1]) throw DomainError("bounds: eigenvalues must be non-increasing");
    }
}

}  // namespace

double effective_rank(const Vector& eigenvalues) {
    check_spectrum(eigenvalues);
    return eigenvalues.sum() / eigenvalues[0];
}

GdBoundReport gd_risk_bound(const Vector& lambda, std::size_t n, double eta, std::size_t t,
                            double omega, double sigma_eps) {
    check_spectrum(lambda);
    if (n < 1) throw DomainError("gd_risk_bound: n must be at least 1");
    if (t < 1) throw DomainError("gd_risk_bound: t must be at least 1");
    if (!(eta > 0.0) || eta > 1.0 / lambda[0] * (1.0 + 1e-12))
        throw DomainError("gd_risk_bound: need 0 < eta <= 1/lambda_1");
    const auto d = static_cast<std::size_t>(lambda.size());
    const double nd = static_cast<double>(n);
    const double base = nd / (eta * static_cast<double>(t));

    // tail[k] = Σ_{i > k} λ_i with 1-based k, so tail[d] = 0.
    std::vector<double> tail(d + 1, 0.0);
    for (std::size_t k = d; k-- > 0;) tail[k] = tail[k + 1] + lambda[static_cast<Eigen::Index>(k)];

    GdBoundReport r;
    r.k_star = d;
    for (std::size_t k = 1; k <= d; ++k) {
        const double next = k < d ? lambda[static_cast<Eigen::Index>(k)] : 0.0;
        if (nd * next <= base + tail[k]) {
            r.k_star = k;
            break;
        }
    }
    r.lambda_tilde = base + tail[r.k_star];
    double inv_head = 0.0;
    for (std::size_t i = 0; i < r.k_star; ++i) inv_head += 1.0 / lambda[static_cast<Eigen::Index>(i)];
    double sq_tail = 0.0;
    for (std::size_t i = r.k_star; i < d; ++i) sq_tail += lambda[static_cast<Eigen::Index>(i)] * lambda[static_cast<Eigen::Index>(i)];
    const double lt2 = r.lambda_tilde * r.lambda_tilde;
    r.bias_term = omega * omega * (lt2 / (nd * nd) * inv_head + tail[r.k_star]);
    r.variance_term = sigma_eps * sigma_eps * (static_cast<double>(r.k_star) / nd + nd / lt2 * sq_tail);
    r.total = r.bias_term + r.variance_term;
    return r;
}

EnsembleBoundReport ensemble_bound_terms(const Vector& lambda, std::size_t n, double eta,
                                         std::size_t t, double sigma, double sigma_eps,
                                         std::size_t d, double omega) {
    check_spectrum(lambda);
    const double s2 = sigma * sigma;
    if (!(s2 > 0.0) || s2 >= 1.0) throw DomainError("ensemble_bound_terms: need 0 < sigma^2 < 1");
    if (t < 1) throw DomainError("ensemble_bound_terms: t must be at least 1");
    if (n < 1 || !(eta > 0.0)) throw DomainError("ensemble_bound_terms: need n >= 1 and eta > 0");
    const double nd = static_cast<double>(n);
    const double td = static_cast<double>(t);
    const double dd = static_cast<double>(d);
    EnsembleBoundReport r;
    r.effective_rank = effective_rank(lambda);
    r.lambda_eff_bias = nd / eta * (2.0 / td + s2 * (1.0 + 2.0 / td) / (1.0 - s2));
    r.lambda_eff_var = s2 * nd / ((1.0 - s2) * eta);
    const double rank_term = std::max(r.effective_rank, std::log(nd));
    r.vartheta = s2 * dd * (td * std::sqrt(rank_term / nd) + 1.0 / eta);
    const double trace = lambda.sum();
    const double op_norm = lambda[0];
    r.varsigma = (eta * sigma_eps * sigma_eps * dd / (nd * s2) * trace + omega * omega) * op_norm;
    return r;
}

GapBoundReport sufficient_n_gap_bound(std::size_t n, std::size_t d, std::size_t k, double sigma_eps,
                                      std::size_t t) {
    if (n < 1 || d < 1 || k < 1 || t < 1) throw DomainError("sufficient_n_gap_bound: n, d, k, t must be positive");
    if (!(sigma_eps >= 0.0)) throw DomainError("sufficient_n_gap_bound: sigma_eps must be >= 0");
    const double kd = static_cast<double>(k);
    const double root4 = std::pow(static_cast<double>(n), 0.25);
    const double threshold = 6.0 * kd + 3.0 * sigma_eps;
    GapBoundReport r;
    r.in_regime = static_cast<double>(n) >= std::pow(threshold, 4.0);
    const double a = 2.0 * kd + sigma_eps;
    const double dk = std::pow(static_cast<double>(d), kd);
    r.p_trans = (1.0 - a / (root4 - a)) / dk;
    const double base = root4 - sigma_eps;
    r.p_recurr = (1.0 - sigma_eps / base) *
                 std::pow(base / (base + static_cast<double>(d) * sigma_eps), kd);
    const double denom = r.p_trans + 1.0 - r.p_recurr;
    const double ratio = denom > 0.0 ? r.p_trans / denom : 0.0;
    r.delta_lower = ratio * (1.0 - std::pow(r.p_recurr - r.p_trans, static_cast<double>(t - 1)));
    return r;
}

HoeffdingReport hoeffding_mv_bound(double delta_t, std::size_t N, std::size_t w_count) {
    if (N < 1) throw DomainError("hoeffding_mv_bound: N must be at least 1");
    if (delta_t > 1.0) throw DomainError("hoeffding_mv_bound: delta_t must be at most 1");
    if (!(delta_t > 0.0)) return HoeffdingReport{0.0, true};
    const double v = 1.0 - static_cast<double>(w_count) *
                               std::exp(-static_cast<double>(N) * delta_t * delta_t / 2.0);
    return HoeffdingReport{std::clamp(v, 0.0, 1.0), false};
}

bool concentration_event_holds(const InContextDataset& ds) {
    const double n = static_cast<double>(ds.X.rows());
    const double limit = std::pow(n, 0.75);
    const Matrix G = ds.X.transpose() * ds.X;
    const Vector eps = ds.y - ds.X * ds.w_star;
    const Vector xe = ds.X.transpose() * eps;
    const Eigen::Index d = G.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(G(i, i) - n) > limit) return false;
        if (std::abs(xe[i]) > ds.config.label_noise_sd * limit) return false;
        for (Eigen::Index l = 0; l < d; ++l)
            if (l != i && std::abs(G(i, l)) > limit) return false;
    }
    return true;
}

}  // namespace icl_ttc
