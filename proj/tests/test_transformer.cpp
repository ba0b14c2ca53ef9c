#include "doctest.h"

#include <cmath>

#include "icl_ttc/errors.hpp"
#include "icl_ttc/rng.hpp"
#include "icl_ttc/transformer.hpp"

using namespace icl_ttc;

namespace {

Matrix random_matrix(Stream& rng, Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

Vector random_vector(Stream& rng, Eigen::Index n) { return random_matrix(rng, n, 1); }

long nonzeros(const Matrix& m) { return (m.array() != 0.0).count(); }

}  // namespace

TEST_CASE("build_gd_params block layout for d=1") {
    const TransformerParams p = build_gd_params(1, 1.0, 1);
    CHECK(p.d_e == 4);
    Matrix V = Matrix::Zero(4, 4);
    V(2, 0) = -1.0;
    Matrix W = Matrix::Zero(4, 4);
    W(0, 2) = 1.0;
    W(1, 3) = -1.0;
    CHECK(p.V == V);
    CHECK(p.W == W);
}

TEST_CASE("build_gd_params nonzero counts and block positions") {
    for (std::size_t d : {1, 2, 5, 13}) {
        const TransformerParams p = build_gd_params(d, 0.3, 7);
        const auto di = static_cast<Eigen::Index>(d);
        CHECK(p.d_e == 2 * d + 2);
        CHECK(p.n_divisor == 7);
        CHECK(nonzeros(p.V) == di);
        CHECK(nonzeros(p.W) == di + 1);
        for (Eigen::Index i = 0; i < di; ++i) {
            CHECK(p.V(di + 1 + i, i) == -0.3);
            CHECK(p.W(i, di + 1 + i) == 1.0);
        }
        CHECK(p.W(di, 2 * di + 1) == -1.0);
    }
    CHECK_THROWS_AS(build_gd_params(0, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(build_gd_params(2, 1.0, 0), ConfigError);
}

TEST_CASE("zero step size leaves the prompt unchanged") {
    Stream rng(StreamKey{3});
    const Matrix X = random_matrix(rng, 4, 3);
    const Vector y = random_vector(rng, 4);
    const TransformerParams p = build_gd_params(3, 0.0, 4);
    CHECK(nonzeros(p.V) == 0);
    PromptEmbedding h(X, y, random_vector(rng, 3));
    CHECK(forward(p, h.matrix()) == h.matrix());
}

TEST_CASE("forward with V = 0 is the residual identity") {
    Stream rng(StreamKey{4});
    TransformerParams p;
    p.d_e = 6;
    p.n_divisor = 3;
    p.V = Matrix::Zero(6, 6);
    p.W = random_matrix(rng, 6, 6);
    const Matrix H = random_matrix(rng, 6, 5);
    CHECK(forward(p, H) == H);
}

TEST_CASE("forward rejects shape mismatches") {
    const TransformerParams p = build_gd_params(2, 1.0, 3);
    CHECK_THROWS_AS(forward(p, Matrix::Zero(5, 4)), DimensionError);
    TransformerParams bad = p;
    bad.V = Matrix::Zero(5, 5);
    CHECK_THROWS_AS(forward(bad, Matrix::Zero(6, 4)), DimensionError);
}

TEST_CASE("single demonstration hand example") {
    Matrix X(1, 1);
    X << 2.0;
    Vector y(1);
    y << 2.0;
    const PromptEmbedding h(X, y, Vector::Zero(1));
    const Matrix out = forward(build_gd_params(1, 1.0, 1), h.matrix());
    const Vector w = extract_coefficient(out.col(out.cols() - 1));
    CHECK(w[0] == doctest::Approx(4.0));
}

TEST_CASE("extract_coefficient index arithmetic") {
    Vector c(4);
    c << 1.0, 2.0, 3.0, 4.0;
    CHECK(extract_coefficient(c) == Vector::Constant(1, 3.0));
    Vector col = Vector::Zero(8);
    col.segment(4, 3) << 5.0, -6.0, 7.0;
    col[7] = 1.0;
    const Vector w = extract_coefficient(col);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == 5.0);
    CHECK(w[1] == -6.0);
    CHECK(w[2] == 7.0);
    CHECK_THROWS_AS(extract_coefficient(Vector::Zero(5)), DimensionError);
    CHECK_THROWS_AS(extract_coefficient(Vector::Zero(2)), DimensionError);
}

TEST_CASE("prompt layout and construct-then-extract round trip") {
    Stream rng(StreamKey{5});
    const Matrix X = random_matrix(rng, 3, 2);
    const Vector y = random_vector(rng, 3);
    std::vector<Vector> ws{random_vector(rng, 2)};
    PromptEmbedding h(X, y, ws[0]);
    for (int j = 0; j < 4; ++j) {
        ws.push_back(random_vector(rng, 2));
        h.append(ws.back());
    }
    CHECK(h.steps() == 4);
    const Matrix& H = h.matrix();
    CHECK(H.rows() == 6);
    CHECK(H.cols() == 3 + 1 + 4);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(H.block(0, i, 2, 1) == X.row(i).transpose());
        CHECK(H(2, i) == y[i]);
        CHECK(H.block(3, i, 3, 1).isZero());
    }
    for (std::size_t j = 0; j < ws.size(); ++j) {
        const auto c = static_cast<Eigen::Index>(3 + j);
        CHECK(H.block(0, c, 3, 1).isZero());
        CHECK(H(5, c) == 1.0);
        CHECK(h.coefficient(j) == ws[j]);
    }
    CHECK_THROWS_AS(h.append(Vector::Zero(3)), DimensionError);
    CHECK_THROWS_AS(PromptEmbedding(X, Vector::Zero(2), ws[0]), DimensionError);
}

TEST_CASE("gd_step hand example and fixed point") {
    Vector y(2);
    y << 1.0, 2.0;
    const Vector w = gd_step(Matrix::Identity(2, 2), y, Vector::Zero(2), 1.0);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(1.0));

    Stream rng(StreamKey{6});
    const Matrix X = random_matrix(rng, 8, 3);
    const Vector w_star = random_vector(rng, 3);
    const Vector clean = X * w_star;
    CHECK((gd_step(X, clean, w_star, 0.7) - w_star).norm() <= 1e-12);
    CHECK_THROWS_AS(gd_step(X, Vector::Zero(7), w_star, 1.0), DimensionError);
}

TEST_CASE("forward last column equals gd_step on random instances") {
    Stream rng(StreamKey{7});
    double worst = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(20));
        const auto n = static_cast<Eigen::Index>(1 + rng.uniform_index(40));
        const Matrix X = random_matrix(rng, n, d);
        const Vector y = random_vector(rng, n);
        const double eta = 0.05 + rng.uniform();
        PromptEmbedding h(X, y, random_vector(rng, d));
        const std::size_t extra = rng.uniform_index(4);
        for (std::size_t j = 0; j < extra; ++j) h.append(random_vector(rng, d));
        const Vector w_last = h.coefficient(h.steps());
        const Matrix out = forward(build_gd_params(static_cast<std::size_t>(d), eta, static_cast<std::size_t>(n)), h.matrix());
        const Vector last = out.col(out.cols() - 1);
        const Vector expect = gd_step(X, y, w_last, eta);
        const double scale = std::max(expect.norm(), 1.0);
        worst = std::max(worst, (extract_coefficient(last) - expect).norm() / scale);
        CHECK(last.head(d + 1).isZero(1e-12));
        CHECK(last[last.size() - 1] == doctest::Approx(1.0));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("closed_form_gd examples") {
    Vector y(2);
    y << 1.0, 2.0;
    const Matrix I = Matrix::Identity(2, 2);
    CHECK(closed_form_gd(I, y, 1.0, 0).isZero());
    const Vector w1 = closed_form_gd(I, y, 1.0, 1);
    CHECK(w1[0] == doctest::Approx(0.5));
    CHECK(w1[1] == doctest::Approx(1.0));
    for (std::size_t t : {2, 5, 10}) {
        const double f = 1.0 - std::pow(0.5, static_cast<double>(t));
        const Vector w = closed_form_gd(I, y, 1.0, t);
        CHECK(w[0] == doctest::Approx(f * 1.0));
        CHECK(w[1] == doctest::Approx(f * 2.0));
    }
    CHECK((closed_form_gd(I, y, 1.0, 200) - y).norm() <= 1e-12);
}

TEST_CASE("closed_form_gd matches the explicit inverse formula for square X") {
    Stream rng(StreamKey{8});
    for (int inst = 0; inst < 20; ++inst) {
        const Eigen::Index d = 4;
        Matrix X = random_matrix(rng, d, d) + 3.0 * Matrix::Identity(d, d);
        const Vector y = random_vector(rng, d);
        const Matrix S = X.transpose() * X / static_cast<double>(d);
        const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues().maxCoeff();
        const double eta = 0.9 / lmax;
        const Matrix M = Matrix::Identity(d, d) - eta * S;
        const Matrix pinv = X.transpose() * (X * X.transpose()).inverse();
        Matrix Mt = Matrix::Identity(d, d);
        for (std::size_t t = 0; t <= 50; ++t) {
            const Vector explicit_form = (Matrix::Identity(d, d) - Mt) * pinv * y;
            const Vector iter = closed_form_gd(X, y, eta, t);
            CHECK((iter - explicit_form).norm() <= 1e-9 * std::max(1.0, explicit_form.norm()));
            Mt = Mt * M;
        }
    }
}

TEST_CASE("iterating forward reproduces closed_form_gd") {
    Stream rng(StreamKey{9});
    for (int inst = 0; inst < 10; ++inst) {
        const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(6));
        const auto n = static_cast<Eigen::Index>(1 + rng.uniform_index(10));
        const Matrix X = random_matrix(rng, n, d);
        const Vector y = random_vector(rng, n);
        const double eta = 0.1;
        const std::size_t t = 25;
        const TransformerParams p = build_gd_params(static_cast<std::size_t>(d), eta, static_cast<std::size_t>(n));
        PromptEmbedding h(X, y, Vector::Zero(d));
        for (std::size_t l = 0; l < t; ++l) {
            const Matrix out = forward(p, h.matrix());
            h.append(extract_coefficient(out.col(out.cols() - 1)));
        }
        const Vector expect = closed_form_gd(X, y, eta, t);
        CHECK((h.coefficient(t) - expect).norm() <= 1e-10 * std::max(1.0, expect.norm()));
    }
}

TEST_CASE("excess risk is non-increasing under a stable step in noiseless full-rank cases") {
    Stream rng(StreamKey{10});
    for (int inst = 0; inst < 10; ++inst) {
        const Eigen::Index d = 5, n = 20;
        const Matrix X = random_matrix(rng, n, d);
        const Vector w_star = random_vector(rng, d);
        const Vector y = X * w_star;
        const Matrix S = X.transpose() * X / static_cast<double>(n);
        const double eta = 1.0 / Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues().maxCoeff();
        Vector w = Vector::Zero(d);
        double prev = (w - w_star).squaredNorm();
        for (int t = 0; t < 60; ++t) {
            w = gd_step(X, y, w, eta);
            const double risk = (w - w_star).squaredNorm();
            CHECK(risk <= prev * (1.0 + 1e-12) + 1e-15);
            prev = risk;
        }
    }
}
