#include "icl_ttc/transformer.hpp"

#include <string>

#include "icl_ttc/errors.hpp"

namespace icl_ttc {

PromptEmbedding::PromptEmbedding(const Matrix& X, const Vector& y, const Vector& w0)
    : d_(static_cast<std::size_t>(X.cols())), n_(static_cast<std::size_t>(X.rows())) {
    const Eigen::Index d = X.cols();
    const Eigen::Index n = X.rows();
    if (y.size() != n || w0.size() != d) throw DimensionError("prompt: shape mismatch");
    H_ = Matrix::Zero(2 * d + 2, n + 1);
    H_.block(0, 0, d, n) = X.transpose();
    H_.block(d, 0, 1, n) = y.transpose();
    H_.block(d + 1, n, d, 1) = w0;
    H_(2 * d + 1, n) = 1.0;
}

void PromptEmbedding::append(const Vector& w) {
    const auto d = static_cast<Eigen::Index>(d_);
    if (w.size() != d) throw DimensionError("prompt: appended coefficient has wrong length");
    const Eigen::Index c = H_.cols();
    H_.conservativeResize(Eigen::NoChange, c + 1);
    H_.col(c).setZero();
    H_.block(d + 1, c, d, 1) = w;
    H_(2 * d + 1, c) = 1.0;
}

Vector PromptEmbedding::coefficient(std::size_t j) const {
    return extract_coefficient(H_.col(static_cast<Eigen::Index>(n_ + j)));
}

TransformerParams build_gd_params(std::size_t d, double eta, std::size_t n) {
    if (d < 1 || n < 1) throw ConfigError("build_gd_params: d and n must be positive");
    const auto di = static_cast<Eigen::Index>(d);
    TransformerParams p;
    p.d_e = 2 * d + 2;
    p.n_divisor = n;
    p.V = Matrix::Zero(2 * di + 2, 2 * di + 2);
    p.W = Matrix::Zero(2 * di + 2, 2 * di + 2);
    for (Eigen::Index i = 0; i < di; ++i) {
        if (eta != 0.0) p.V(di + 1 + i, i) = -eta;
        p.W(i, di + 1 + i) = 1.0;
    }
    p.W(di, 2 * di + 1) = -1.0;
    return p;
}

Matrix forward(const TransformerParams& params, const Matrix& H) {
    const auto de = static_cast<Eigen::Index>(params.d_e);
    if (params.V.rows() != de || params.V.cols() != de || params.W.rows() != de ||
        params.W.cols() != de)
        throw DimensionError("forward: parameter matrices are not d_e x d_e");
    if (H.rows() != de)
        throw DimensionError("forward: embedding has " + std::to_string(H.rows()) +
                             " rows, expected " + std::to_string(de));
    // (V H Hᵀ) W H keeps every product at d_e x d_e or d_e x L.
    const Matrix VHHt = (params.V * H) * H.transpose();
    return H + (VHHt * params.W * H) / static_cast<double>(params.n_divisor);
}

Vector extract_coefficient(const Vector& column) {
    const Eigen::Index len = column.size();
    if (len < 4 || len % 2 != 0)
        throw DimensionError("extract_coefficient: column length " + std::to_string(len) +
                             " is not 2d+2");
    const Eigen::Index d = (len - 2) / 2;
    return column.segment(d + 1, d);
}

Vector gd_step(const Matrix& X, const Vector& y, const Vector& w, double eta) {
    if (X.rows() != y.size() || X.cols() != w.size())
        throw DimensionError("gd_step: shape mismatch");
    const double scale = eta / static_cast<double>(X.rows());
    return w - scale * (X.transpose() * (X * w - y));
}

Vector closed_form_gd(const Matrix& X, const Vector& y, double eta, std::size_t t) {
    Vector w = Vector::Zero(X.cols());
    for (std::size_t s = 0; s < t; ++s) w = gd_step(X, y, w, eta);
    return w;
}

}  // namespace icl_ttc
