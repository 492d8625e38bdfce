#pragma once

#include <Eigen/Dense>
#include <vector>

#include "xmf/corpus.hpp"
#include "xmf/error.hpp"

namespace xmf {

struct GaussianStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // symmetric, PSD within tolerance
    std::size_t n = 0;
};

struct ProbVector {
    std::vector<double> p;  // non-negative, sums to 1 after smoothing
};

// Sample mean and unbiased (n-1) covariance; symmetry enforced by (C+C')/2.
GaussianStats fit_gaussian(const EmbeddingSet& set);

// ||mu_b - mu_e||^2 + Tr(S_b + S_e - 2 (S_b S_e)^(1/2)), with the cross
// square root evaluated as sqrtm(S_b^(1/2) S_e S_b^(1/2)) through symmetric
// eigendecompositions. Eigenvalues in [-1e-10, 0) are clamped to 0; below
// -1e-6 the covariance is rejected as non-PSD. Result clamped at 0.
double fad(const GaussianStats& b, const GaussianStats& e);

// Smoothed KL divergence in nats: eps is added to every entry of both
// vectors, both are renormalized, then sum p_i ln(p_i / q_i).
double kl_div(const ProbVector& p, const ProbVector& q, double eps = 1e-10);

// Cosine similarity between an artwork embedding and a generated-audio
// embedding in the shared space.
double ibsc(std::span<const double> e_art, std::span<const double> e_gen);

// Equal-width histogram of one coordinate over [lo, hi], normalized.
// Values outside the range fall into the nearest edge bin.
ProbVector histogram_features(const EmbeddingSet& set, std::size_t bins,
                              std::size_t axis, double lo, double hi);

}  // namespace xmf
