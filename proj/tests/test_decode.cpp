#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "icl_ttc/decode.hpp"
#include "icl_ttc/errors.hpp"
#include "icl_ttc/transformer.hpp"

using namespace icl_ttc;

namespace {

TaskConfig gaussian(std::size_t d, std::size_t n, double eta) {
    TaskConfig c;
    c.d = d;
    c.n = n;
    c.covariance.d = d;
    c.label_noise_sd = 0.3;
    c.step_size = eta;
    return c;
}

TaskConfig binary(std::size_t d, std::size_t n, std::size_t k, double eta) {
    TaskConfig c = gaussian(d, n, eta);
    c.prior = BinarySparsePrior{k};
    return c;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Probability of an unordered set under sequential draws, summed over orderings.
double set_probability_oracle(const Vector& p, std::vector<std::size_t> set) {
    std::sort(set.begin(), set.end());
    double total = 0.0;
    do {
        double prob = 1.0, used = 0.0;
        for (std::size_t idx : set) {
            prob *= p[static_cast<Eigen::Index>(idx)] / (1.0 - used);
            used += p[static_cast<Eigen::Index>(idx)];
        }
        total += prob;
    } while (std::next_permutation(set.begin(), set.end()));
    return total;
}

void subsets(std::size_t d, std::size_t k, std::size_t start, std::vector<std::size_t>& cur,
             std::vector<std::vector<std::size_t>>& out) {
    if (cur.size() == k) {
        out.push_back(cur);
        return;
    }
    for (std::size_t i = start; i < d; ++i) {
        cur.push_back(i);
        subsets(d, k, i + 1, cur, out);
        cur.pop_back();
    }
}

bool is_k_sparse_binary(const Vector& w, std::size_t k) {
    std::size_t ones = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w[i] == 1.0)
            ++ones;
        else if (w[i] != 0.0)
            return false;
    }
    return ones == k;
}

}  // namespace

TEST_CASE("clip_norm examples") {
    const Vector a = clip_norm(vec({0.3, -0.1, 0.7}));
    CHECK(a[0] == doctest::Approx(0.3));
    CHECK(a[1] == 0.0);
    CHECK(a[2] == doctest::Approx(0.7));
    CHECK(clip_norm(vec({-1, -2, -3, -0.5})) == Vector::Constant(4, 0.25));
    CHECK(clip_norm(Vector::Zero(4)) == Vector::Constant(4, 0.25));
    const Vector b = clip_norm(vec({4, 2}));
    CHECK(b[0] == doctest::Approx(2.0 / 3.0));
    CHECK(b[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("clip_norm is a probability vector for every input") {
    Stream rng(StreamKey{11});
    for (int i = 0; i < 1000; ++i) {
        const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(12));
        Vector w(d);
        for (Eigen::Index j = 0; j < d; ++j) w[j] = rng.normal() - (i % 3 == 0 ? 3.0 : 0.0);
        const Vector p = clip_norm(w);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sample_k_without_replacement trivial cases") {
    Stream rng(StreamKey{12});
    for (int i = 0; i < 100; ++i) {
        CHECK(sample_k_without_replacement(vec({0, 0, 1, 0}), 1, rng) == std::vector<std::size_t>{2});
        CHECK(sample_k_without_replacement(vec({2.0 / 3.0, 1.0 / 3.0}), 2, rng) ==
              std::vector<std::size_t>{0, 1});
    }
    CHECK_THROWS_AS(sample_k_without_replacement(vec({0.5, 0.5}), 3, rng), ConfigError);
}

TEST_CASE("sample_k_without_replacement worked frequency") {
    const Vector p = vec({0.5, 0.3, 0.2});
    const double expect = 0.5 * (0.3 / 0.5) + 0.3 * (0.5 / 0.7);
    CHECK(set_probability_oracle(p, {0, 1}) == doctest::Approx(expect));
    Stream rng(StreamKey{13});
    const std::size_t draws = 1000000;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < draws; ++s)
        if (sample_k_without_replacement(p, 2, rng) == std::vector<std::size_t>{0, 1}) ++hits;
    const double freq = static_cast<double>(hits) / static_cast<double>(draws);
    const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(draws));
    CHECK(std::abs(freq - expect) <= 3.0 * se);
}

TEST_CASE("sample_k_without_replacement matches the permutation-sum oracle") {
    struct Case {
        std::size_t d, k;
    };
    std::size_t seed = 14;
    for (const Case c : {Case{4, 2}, Case{5, 1}, Case{6, 3}}) {
        Stream build(StreamKey{seed++});
        Vector p(static_cast<Eigen::Index>(c.d));
        for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = 0.1 + build.uniform();
        p /= p.sum();
        std::vector<std::vector<std::size_t>> sets;
        std::vector<std::size_t> cur;
        subsets(c.d, c.k, 0, cur, sets);
        double oracle_total = 0.0;
        for (const auto& s : sets) oracle_total += set_probability_oracle(p, s);
        CHECK(oracle_total == doctest::Approx(1.0).epsilon(1e-12));

        std::map<std::vector<std::size_t>, std::size_t> counts;
        const std::size_t draws = 1000000;
        Stream rng(StreamKey{seed++});
        for (std::size_t s = 0; s < draws; ++s) ++counts[sample_k_without_replacement(p, c.k, rng)];
        CHECK(counts.size() <= sets.size());
        for (const auto& s : sets) {
            const double q = set_probability_oracle(p, s);
            const double freq = static_cast<double>(counts[s]) / static_cast<double>(draws);
            const double se = std::sqrt(q * (1.0 - q) / static_cast<double>(draws));
            CHECK(std::abs(freq - q) <= 4.0 * se);
        }
    }
}

TEST_CASE("next_pick_probability follows sequential conditioning") {
    const Vector p = vec({0.5, 0.3, 0.2});
    CHECK(next_pick_probability(p, {false, false, false}, 1) == doctest::Approx(0.3));
    CHECK(next_pick_probability(p, {true, false, false}, 1) == doctest::Approx(0.6));
    CHECK(next_pick_probability(p, {true, false, false}, 0) == 0.0);
    CHECK(next_pick_probability(vec({1, 0, 0}), {true, false, false}, 2) == doctest::Approx(0.5));
}

TEST_CASE("exhausted positive mass falls back to uniform over zero-mass indices") {
    Stream rng(StreamKey{20});
    std::size_t with_one = 0;
    const std::size_t draws = 20000;
    for (std::size_t s = 0; s < draws; ++s) {
        const auto set = sample_k_without_replacement(vec({1, 0, 0}), 2, rng);
        REQUIRE(set.size() == 2);
        CHECK(set[0] == 0);
        if (set[1] == 1) ++with_one;
    }
    const double freq = static_cast<double>(with_one) / static_cast<double>(draws);
    CHECK(std::abs(freq - 0.5) <= 4.0 * std::sqrt(0.25 / static_cast<double>(draws)));
}

TEST_CASE("greedy_top_k examples and sort oracle") {
    CHECK(greedy_top_k(vec({4, 2}), 1) == std::vector<std::size_t>{0});
    CHECK(greedy_top_k(vec({1, 1, 0}), 1) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(greedy_top_k(vec({1, 2}), 0), ConfigError);

    Stream rng(StreamKey{21});
    for (int i = 0; i < 10000; ++i) {
        const std::size_t d = 2 + rng.uniform_index(10);
        const std::size_t k = 1 + rng.uniform_index(d - 1);
        Vector w(static_cast<Eigen::Index>(d));
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.normal();
        const Vector p = clip_norm(w);
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t j = 0; j < d; ++j) order.emplace_back(-p[static_cast<Eigen::Index>(j)], j);
        std::sort(order.begin(), order.end());
        std::vector<std::size_t> expect;
        for (std::size_t j = 0; j < k; ++j) expect.push_back(order[j].second);
        std::sort(expect.begin(), expect.end());
        CHECK(greedy_top_k(w, k) == expect);
    }
}

TEST_CASE("sample_step reductions") {
    Stream rng(StreamKey{22});
    const Vector w = vec({0.4, -1.2, 3.0});
    CHECK(sample_step(Deterministic{}, w, rng) == w);
    CHECK(sample_step(ConstantNoise{0.0}, w, rng) == w);
    CHECK(sample_step(LinearNoise{0.0}, w, rng) == w);
    CHECK(sample_step(BinaryGreedy{1}, w, rng) == vec({0, 0, 1}));
    const Vector b = sample_step(BinarySample{2}, w, rng);
    CHECK(b == vec({1, 0, 1}));
}

TEST_CASE("linear-noise step mean is (1 + sigma^2) w for the additive form") {
    const Vector w = vec({1.0, -0.5, 2.0});
    const double sigma = 0.6;
    const std::size_t draws = 1000000;
    for (LinearForm form : {LinearForm::additive, LinearForm::projective}) {
        Stream rng(StreamKey{23});
        Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
        for (std::size_t s = 0; s < draws; ++s) {
            const Vector o = sample_step(LinearNoise{sigma, form}, w, rng);
            sum += o;
            sq += o.cwiseProduct(o);
        }
        const double m = static_cast<double>(draws);
        const Vector mean = sum / m;
        const double factor = form == LinearForm::additive ? 1.0 + sigma * sigma : 1.0 - sigma * sigma;
        for (Eigen::Index i = 0; i < 3; ++i) {
            const double se = std::sqrt((sq[i] / m - mean[i] * mean[i]) / m);
            CHECK(std::abs(mean[i] - factor * w[i]) <= 3.0 * se);
        }
    }
}

TEST_CASE("constant-noise step mean and spread") {
    const Vector w = vec({1.0, -2.0});
    Stream rng(StreamKey{24});
    const std::size_t draws = 200000;
    Vector sum = Vector::Zero(2), sq = Vector::Zero(2);
    for (std::size_t s = 0; s < draws; ++s) {
        const Vector o = sample_step(ConstantNoise{0.5}, w, rng) - w;
        sum += o;
        sq += o.cwiseProduct(o);
    }
    const double m = static_cast<double>(draws);
    for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK(std::abs(sum[i] / m) <= 4.0 * 0.5 / std::sqrt(m));
        CHECK(std::abs(sq[i] / m - 0.25) <= 0.005);
    }
}

TEST_CASE("noise matrix moment: diagonal A matches tr(A)I + diag(A), general A matches tr(A)I + A^T") {
    Stream build(StreamKey{25});
    Matrix diag = Matrix::Zero(3, 3);
    diag.diagonal() << 1.5, -0.5, 2.0;
    Matrix B(3, 3);
    for (int i = 0; i < 9; ++i) B.data()[i] = build.normal();
    const Matrix sym = (B + B.transpose()) / 2.0;
    const std::vector<Matrix> mats{Matrix::Identity(3, 3), diag, sym, B};
    const std::size_t draws = 400000;
    for (std::size_t a = 0; a < mats.size(); ++a) {
        const Matrix& A = mats[a];
        const Matrix exact = A.trace() * Matrix::Identity(3, 3) + A.transpose();
        Stream rng(derive(StreamKey{26}, a));
        Matrix sum = Matrix::Zero(3, 3), sq = Matrix::Zero(3, 3);
        for (std::size_t s = 0; s < draws; ++s) {
            Vector xi(3);
            for (int i = 0; i < 3; ++i) xi[i] = rng.normal();
            const Matrix P = Matrix::Identity(3, 3) - xi * xi.transpose();
            const Matrix Y = P * A * P;
            sum += Y;
            sq += Y.cwiseProduct(Y);
        }
        const double m = static_cast<double>(draws);
        const Matrix mean = sum / m;
        for (int i = 0; i < 9; ++i) {
            const double se = std::sqrt((sq.data()[i] / m - mean.data()[i] * mean.data()[i]) / m);
            CHECK(std::abs(mean.data()[i] - exact.data()[i]) <= 4.0 * se);
        }
        if (a < 2) {
            Matrix stated = A.trace() * Matrix::Identity(3, 3);
            stated.diagonal() += A.diagonal();
            CHECK((stated - exact).norm() == 0.0);
        }
    }
}

TEST_CASE("deterministic roll equals the GD iterates") {
    const InContextDataset ds = sample_task(gaussian(4, 9, 0.5), StreamKey{27});
    const ReasoningPath path = roll_path(ds, Deterministic{}, 12, StreamKey{1});
    REQUIRE(path.weights.size() == 13);
    CHECK(path.steps() == 12);
    CHECK(path.weights[0].isZero());
    for (std::size_t l = 0; l <= 12; ++l)
        CHECK((path.weights[l] - closed_form_gd(ds.X, ds.y, 0.5, l)).norm() <= 1e-12);
    CHECK(roll_path(ds, Deterministic{}, 0, StreamKey{1}).weights.size() == 1);
}

TEST_CASE("fast and full-matrix modes agree") {
    const std::vector<SamplerKind> samplers{Deterministic{}, ConstantNoise{0.2}, LinearNoise{0.3},
                                            BinarySample{2}, BinaryGreedy{2}};
    double worst = 0.0;
    for (std::size_t r = 0; r < 100; ++r) {
        Stream rng(derive(StreamKey{28}, r));
        const std::size_t d = 3 + rng.uniform_index(4);
        const std::size_t n = 1 + rng.uniform_index(8);
        const SamplerKind& s = samplers[r % samplers.size()];
        const TaskConfig cfg = is_binary(s) ? binary(d, n, 2, 0.3) : gaussian(d, n, 0.3);
        const InContextDataset ds = sample_task(cfg, derive(StreamKey{29}, r));
        const StreamKey seed = derive(StreamKey{30}, r);
        const ReasoningPath a = roll_path(ds, s, 15, seed, RollMode::fast);
        const ReasoningPath b = roll_path(ds, s, 15, seed, RollMode::full_matrix);
        for (std::size_t l = 0; l < a.weights.size(); ++l) {
            const double scale = std::max(1.0, a.weights[l].norm());
            worst = std::max(worst, (a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() / scale);
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("binary samplers produce k-sparse binary iterates") {
    const InContextDataset ds = sample_task(binary(8, 5, 3, 1.0), StreamKey{31});
    for (const SamplerKind& s : {SamplerKind{BinarySample{3}}, SamplerKind{BinaryGreedy{3}}}) {
        const ReasoningPath path = roll_path(ds, s, 20, StreamKey{32});
        for (std::size_t l = 1; l < path.weights.size(); ++l) CHECK(is_k_sparse_binary(path.weights[l], 3));
    }
    CHECK_THROWS_AS(roll_path(ds, BinarySample{8}, 3, StreamKey{1}), ConfigError);
    CHECK_THROWS_AS(roll_path(ds, ConstantNoise{-1.0}, 3, StreamKey{1}), ConfigError);
}

TEST_CASE("paths are reproducible and roll_final matches roll_path") {
    const InContextDataset ds = sample_task(binary(6, 4, 2, 1.0), StreamKey{33});
    const ReasoningPath a = roll_path(ds, BinarySample{2}, 10, StreamKey{34});
    const ReasoningPath b = roll_path(ds, BinarySample{2}, 10, StreamKey{34});
    CHECK(a.weights == b.weights);
    CHECK(roll_final(ds, BinarySample{2}, 10, StreamKey{34}) == a.final_weight());
}

TEST_CASE("roll_batch structure, seeds and thread independence") {
    const InContextDataset ds = sample_task(gaussian(5, 6, 0.4), StreamKey{35});
    const StreamKey master{36};
    const PathBatch one = roll_batch(ds, ConstantNoise{0.3}, 7, 1, master);
    REQUIRE(one.paths.size() == 1);
    CHECK(one.paths[0].weights == roll_path(ds, ConstantNoise{0.3}, 7, path_seed(master, 0)).weights);

    const PathBatch det = roll_batch(ds, Deterministic{}, 7, 5, master);
    for (const auto& p : det.paths) CHECK(p.weights == det.paths[0].weights);

    const PathBatch serial = roll_batch(ds, LinearNoise{0.2}, 9, 16, master, 1);
    const PathBatch threaded = roll_batch(ds, LinearNoise{0.2}, 9, 16, master, 4);
    const std::vector<Vector> finals = roll_finals(ds, LinearNoise{0.2}, 9, 16, master, 3);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(serial.paths[i].seed == path_seed(master, i));
        CHECK(serial.paths[i].weights == threaded.paths[i].weights);
        CHECK(finals[i] == serial.paths[i].final_weight());
    }
    CHECK(serial.finals() == finals);
    CHECK(serial.paths[0].weights != serial.paths[1].weights);
    CHECK_THROWS_AS(roll_batch(ds, Deterministic{}, 3, 0, master), ConfigError);
}

TEST_CASE("expected_path_linear_nft reductions") {
    const InContextDataset ds = sample_task(gaussian(3, 7, 0.3), StreamKey{37});
    for (LinearForm form : {LinearForm::additive, LinearForm::projective}) {
        CHECK((expected_path_linear_nft(ds.X, ds.y, 0.3, 0.0, 9, form) - closed_form_gd(ds.X, ds.y, 0.3, 9)).norm() <=
              1e-12);
    }
    const Vector b = (0.3 / 7.0) * (ds.X.transpose() * ds.y);
    CHECK((expected_path_linear_nft(ds.X, ds.y, 0.3, 0.5, 1) - 0.75 * b).norm() <= 1e-14);
    CHECK((expected_path_linear_nft(ds.X, ds.y, 0.3, 0.5, 1, LinearForm::additive) - 1.25 * b).norm() <= 1e-14);
    CHECK_THROWS_AS(expected_path_linear_nft(ds.X, Vector::Zero(2), 0.3, 0.5, 1), DimensionError);
}

TEST_CASE("linear-noise path mean matches expected_path_linear_nft") {
    const InContextDataset ds = sample_task(gaussian(2, 5, 0.3), StreamKey{38});
    const std::size_t N = 100000, t = 6;
    for (LinearForm form : {LinearForm::additive, LinearForm::projective}) {
        const LinearNoise s{0.4, form};
        const std::vector<Vector> finals = roll_finals(ds, s, t, N, StreamKey{39});
        Vector sum = Vector::Zero(2), sq = Vector::Zero(2);
        for (const auto& f : finals) {
            sum += f;
            sq += f.cwiseProduct(f);
        }
        const double m = static_cast<double>(N);
        const Vector mean = sum / m;
        const Vector expect = expected_path_linear_nft(ds.X, ds.y, 0.3, 0.4, t, form);
        for (Eigen::Index i = 0; i < 2; ++i) {
            const double se = std::sqrt((sq[i] / m - mean[i] * mean[i]) / m);
            CHECK(std::abs(mean[i] - expect[i]) <= 3.0 * se);
        }
    }
}

TEST_CASE("constant-noise batch mean converges to GD at rate 1/N") {
    const double eta = 0.2;
    const std::size_t t = 30;
    const std::vector<std::size_t> Ns{10, 100, 1000, 10000};
    std::vector<double> err(Ns.size(), 0.0);
    const std::size_t reps = 10;
    for (std::size_t r = 0; r < reps; ++r) {
        const InContextDataset ds = sample_task(gaussian(6, 12, eta), derive(StreamKey{40}, r));
        const Vector gd = closed_form_gd(ds.X, ds.y, eta, t);
        const std::vector<Vector> finals = roll_finals(ds, ConstantNoise{0.1}, t, Ns.back(), derive(StreamKey{41}, r));
        for (std::size_t j = 0; j < Ns.size(); ++j) {
            Vector sum = Vector::Zero(6);
            for (std::size_t i = 0; i < Ns[j]; ++i) sum += finals[i];
            err[j] += (sum / static_cast<double>(Ns[j]) - gd).squaredNorm() / static_cast<double>(reps);
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < Ns.size(); ++j) {
        const double x = std::log(static_cast<double>(Ns[j])), y = std::log(err[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(Ns.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::abs(slope + 1.0) <= 0.15);
}

TEST_CASE("sampler naming and validation") {
    CHECK(sampler_name(Deterministic{}) == "deterministic");
    CHECK(sampler_name(ConstantNoise{}) == "constant-noise");
    CHECK(sampler_name(LinearNoise{}) == "linear-noise");
    CHECK(sampler_name(BinarySample{}) == "binary-sample");
    CHECK(sampler_name(BinaryGreedy{}) == "binary-greedy");
    CHECK(is_binary(BinarySample{}));
    CHECK_FALSE(is_binary(LinearNoise{}));
    CHECK_NOTHROW(validate_sampler(BinarySample{2}, 3));
    CHECK_THROWS_AS(validate_sampler(BinarySample{3}, 3), ConfigError);
    CHECK_THROWS_AS(validate_sampler(BinaryGreedy{0}, 3), ConfigError);
    CHECK_THROWS_AS(validate_sampler(LinearNoise{std::nan("")}, 3), ConfigError);
}
