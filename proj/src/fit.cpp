#include "icl_ttc/fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>

#include "icl_ttc/errors.hpp"

namespace icl_ttc {

namespace {

constexpr int kGridSize = 64;
constexpr double kGoldenTol = 1e-8;

struct LinearFit {
    double intercept = 0.0;  // a in value ≈ a + b·z
    double slope = 0.0;
    double rss = std::numeric_limits<double>::infinity();
    bool ok = false;
};

// Two-parameter least squares value ≈ a + b·z via centred sums.
LinearFit fit_line(const std::vector<double>& z, const std::vector<double>& v) {
    const double m = static_cast<double>(z.size());
    double zm = 0.0, vm = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        zm += z[i];
        vm += v[i];
    }
    zm /= m;
    vm /= m;
    double szz = 0.0, szv = 0.0, zscale = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        szz += (z[i] - zm) * (z[i] - zm);
        szv += (z[i] - zm) * (v[i] - vm);
        zscale = std::max(zscale, std::abs(z[i]));
    }
    LinearFit f;
    if (!(szz > 1e-28 * std::max(1.0, zscale * zscale) * m)) return f;
    f.slope = szv / szz;
    f.intercept = vm - f.slope * zm;
    f.rss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = v[i] - (f.intercept + f.slope * z[i]);
        f.rss += r * r;
    }
    f.ok = true;
    return f;
}

// Minimises a profiled RSS over a log-spaced grid on [lo, hi], then refines
// around the best grid point by golden section in log space.
double profile_minimise(const std::function<double(double)>& rss, double lo, double hi) {
    std::vector<double> grid(kGridSize);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < kGridSize; ++i)
        grid[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (kGridSize - 1));
    std::size_t best = 0;
    double best_rss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = rss(grid[i]);
        if (r < best_rss) {
            best_rss = r;
            best = i;
        }
    }
    if (!std::isfinite(best_rss)) return grid[best];
    double a = std::log(grid[best == 0 ? 0 : best - 1]);
    double b = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = rss(std::exp(c));
    double fd = rss(std::exp(d));
    // Relative tolerance on the parameter equals absolute tolerance on its log.
    while (b - a > kGoldenTol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = rss(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = rss(std::exp(d));
        }
    }
    const double refined = std::exp(fc <= fd ? c : d);
    return rss(refined) <= best_rss ? refined : grid[best];
}

LinearFit exp_fit_at(const std::vector<Point>& pts, double mu) {
    std::vector<double> z(pts.size()), v(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        z[i] = -std::exp(-mu * pts[i].x);
        v[i] = pts[i].value;
    }
    return fit_line(z, v);
}

LinearFit gap_fit_at(const std::vector<Point>& pts, double gap) {
    std::vector<double> z(pts.size()), v(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        z[i] = -std::exp(-gap * gap * pts[i].x / 2.0);
        v[i] = pts[i].value;
    }
    return fit_line(z, v);
}

}  // namespace

double ExpCurveParams::operator()(double T) const { return gamma - kappa * std::exp(-mu * T); }

double AccSurfaceParams::predict(double N, double gap) const {
    return std::clamp(alpha - beta * std::exp(-gap * gap * N / 2.0), 0.0, 1.0);
}

ExpCurveParams fit_exp_curve(const std::vector<Point>& points) {
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.x);
    if (distinct.size() < 3) throw UsageError("fit_exp_curve: need at least 3 distinct T values");

    double lo = points.front().value, hi = lo, mean = 0.0;
    for (const auto& p : points) {
        lo = std::min(lo, p.value);
        hi = std::max(hi, p.value);
        mean += p.value;
    }
    mean /= static_cast<double>(points.size());
    ExpCurveParams out;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(mean))) {
        out.gamma = mean;
        out.degenerate = true;
        for (const auto& p : points) out.rss += (p.value - mean) * (p.value - mean);
        return out;
    }
    const double mu = profile_minimise([&](double m) { return exp_fit_at(points, m).rss; }, 1e-3, 10.0);
    const LinearFit f = exp_fit_at(points, mu);
    out.gamma = f.intercept;
    out.kappa = f.slope;
    out.mu = mu;
    out.rss = f.rss;
    return out;
}

AccSurfaceParams fit_affine_in_gap(const std::vector<Point>& points, const std::vector<double>& gaps,
                                   SurfaceContext context) {
    if (points.size() < 2) throw UsageError("fit_affine_in_gap: need at least 2 points");
    if (gaps.size() != points.size()) throw DimensionError("fit_affine_in_gap: one gap per point required");
    std::vector<double> z(points.size()), v(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        z[i] = -std::exp(-gaps[i] * gaps[i] * points[i].x / 2.0);
        v[i] = points[i].value;
    }
    const LinearFit f = fit_line(z, v);
    if (!f.ok) throw RankError("fit_affine_in_gap: regressor exp(-gap^2 N / 2) is constant across points");
    return AccSurfaceParams{f.intercept, f.slope, context, f.rss};
}

RowFit fit_acc_fix_t(const std::vector<Point>& points) {
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.x);
    if (distinct.size() < 3) throw UsageError("fit_acc_fix_t: need at least 3 distinct N values");
    const double gap = profile_minimise([&](double g) { return gap_fit_at(points, g).rss; }, 1e-3, 1.0);
    const LinearFit f = gap_fit_at(points, gap);
    if (!f.ok) throw RankError("fit_acc_fix_t: regressor is constant across N");
    return RowFit{AccSurfaceParams{f.intercept, f.slope, SurfaceContext::fixed_t, f.rss}, gap};
}

Prediction low_to_high_predict(const AccuracyTable& table, std::size_t t_query, std::size_t n_query) {
    Prediction out;
    std::vector<Point> single;
    std::map<std::size_t, std::vector<Point>> rows;
    for (const auto& [cell, acc] : table) {
        const auto [T, N] = cell;
        if (N == 1) single.push_back({static_cast<double>(T), acc});
        if (N >= 2) rows[T].push_back({static_cast<double>(N), acc});
    }
    if (single.size() < 3)
        throw UsageError("low_to_high_predict: the N = 1 column needs at least 3 T values, found " +
                         std::to_string(single.size()));
    std::vector<std::size_t> full_rows;
    for (const auto& [T, pts] : rows)
        if (pts.size() >= 3) full_rows.push_back(T);
    if (full_rows.size() < 2)
        throw UsageError("low_to_high_predict: need 2 T rows with at least 3 N >= 2 cells, found " +
                         std::to_string(full_rows.size()));

    out.single_path = fit_exp_curve(single);
    if (out.single_path.degenerate || out.single_path.mu == 0.0)
        throw NonIdentifiableError("low_to_high_predict: single-path accuracy is flat in T, mu is not identifiable");
    out.mu = out.single_path.mu;

    out.t1 = full_rows[0];
    out.t2 = full_rows[1];
    out.row1 = fit_acc_fix_t(rows[out.t1]);
    out.row2 = fit_acc_fix_t(rows[out.t2]);

    // Δ_T = γ − κ e^{−μT} through the two (T, Δ_T) pairs.
    const double e1 = std::exp(-out.mu * static_cast<double>(out.t1));
    const double e2 = std::exp(-out.mu * static_cast<double>(out.t2));
    if (e1 == e2) throw NonIdentifiableError("low_to_high_predict: gap rows are not separable in T");
    out.kappa = (out.row2.gap - out.row1.gap) / (e1 - e2);
    out.gamma = out.row1.gap + out.kappa * e1;

    // Part 2: the two largest low-T rows that contain the query N.
    std::vector<std::size_t> with_query;
    for (const auto& [cell, acc] : table)
        if (cell.second == n_query) with_query.push_back(cell.first);
    if (with_query.size() < 2)
        throw UsageError("low_to_high_predict: N = " + std::to_string(n_query) +
                         " must be present at 2 or more T values, found " + std::to_string(with_query.size()));
    out.part2_t1 = with_query[with_query.size() - 2];
    out.part2_t2 = with_query.back();
    auto gap_at = [&](std::size_t T) { return out.gamma - out.kappa * std::exp(-out.mu * static_cast<double>(T)); };
    const double nq = static_cast<double>(n_query);
    out.column = fit_affine_in_gap(
        {{nq, table.at({out.part2_t1, n_query})}, {nq, table.at({out.part2_t2, n_query})}},
        {gap_at(out.part2_t1), gap_at(out.part2_t2)}, SurfaceContext::fixed_n);
    out.gap_query = gap_at(t_query);
    out.unclamped = out.column.alpha - out.column.beta * std::exp(-out.gap_query * out.gap_query * nq / 2.0);
    out.value = std::clamp(out.unclamped, 0.0, 1.0);
    return out;
}

}  // namespace icl_ttc
