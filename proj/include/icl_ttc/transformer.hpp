#pragma once

#include <cstddef>

#include "icl_ttc/core.hpp"

namespace icl_ttc {

struct TransformerParams {
    Matrix V;
    Matrix W;
    std::size_t n_divisor = 1;
    std::size_t d_e = 4;
};

// Prompt matrix with n demonstration columns (x_i; y_i; 0; 0) followed by
// generated columns (0; 0; w_j; 1).
class PromptEmbedding {
public:
    PromptEmbedding(const Matrix& X, const Vector& y, const Vector& w0);

    const Matrix& matrix() const { return H_; }
    std::size_t d() const { return d_; }
    std::size_t n() const { return n_; }
    // Number of columns appended after w_0.
    std::size_t steps() const { return static_cast<std::size_t>(H_.cols()) - n_ - 1; }

    void append(const Vector& w);
    Vector coefficient(std::size_t j) const;

private:
    Matrix H_;
    std::size_t d_;
    std::size_t n_;
};

TransformerParams build_gd_params(std::size_t d, double eta, std::size_t n);

Matrix forward(const TransformerParams& params, const Matrix& H);

Vector extract_coefficient(const Vector& column);

Vector gd_step(const Matrix& X, const Vector& y, const Vector& w, double eta);

Vector closed_form_gd(const Matrix& X, const Vector& y, double eta, std::size_t t);

}  // namespace icl_ttc
