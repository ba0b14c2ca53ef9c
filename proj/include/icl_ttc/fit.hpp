#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace icl_ttc {

struct ExpCurveParams {
    double gamma = 0.0;
    double kappa = 0.0;
    double mu = 0.0;
    double rss = 0.0;
    bool degenerate = false;  // near-constant data: kappa = 0, mu = 0

    double operator()(double T) const;
};

enum class SurfaceContext { fixed_t, fixed_n };

struct AccSurfaceParams {
    double alpha = 0.0;
    double beta = 0.0;
    SurfaceContext context = SurfaceContext::fixed_t;
    double rss = 0.0;

    // α − β·exp(−Δ²N/2), clamped to [0, 1].
    double predict(double N, double gap) const;
};

// Fixed-T fit with the gap as a third parameter, found by an outer profile.
struct RowFit {
    AccSurfaceParams surface;
    double gap = 0.0;
};

struct Point {
    double x = 0.0;
    double value = 0.0;
};

// value ≈ γ − κ e^{−μ x}. The μ profile uses 64 log-spaced points on
// [1e-3, 10], refined by golden section to relative tolerance 1e-8.
ExpCurveParams fit_exp_curve(const std::vector<Point>& points);

// acc ≈ α − β e^{−Δ² N / 2}; points hold (N, acc), gaps the matching Δ values.
AccSurfaceParams fit_affine_in_gap(const std::vector<Point>& points, const std::vector<double>& gaps,
                                   SurfaceContext context = SurfaceContext::fixed_t);

// Fixed-T fit of (α, β, Δ) from (N, acc) points; Δ profiled over [1e-3, 1].
RowFit fit_acc_fix_t(const std::vector<Point>& points);

// Acc(T, N) cells keyed by (T, N).
using AccuracyTable = std::map<std::pair<std::size_t, std::size_t>, double>;

struct Prediction {
    double value = 0.0;
    double unclamped = 0.0;
    ExpCurveParams single_path;  // γ′, κ′, μ from the N = 1 column
    std::size_t t1 = 0;
    std::size_t t2 = 0;
    RowFit row1;
    RowFit row2;
    double gamma = 0.0;
    double kappa = 0.0;
    double mu = 0.0;  // shared with single_path.mu
    std::size_t part2_t1 = 0;
    std::size_t part2_t2 = 0;
    AccSurfaceParams column;  // α_N, β_N at the query N
    double gap_query = 0.0;
};

// Rows used for the (α, β, Δ) fits take cells with N >= 2; the N = 1 column
// feeds the single-path curve only.
Prediction low_to_high_predict(const AccuracyTable& table, std::size_t t_query, std::size_t n_query);

}  // namespace icl_ttc
