#include "xmf/genmetrics.hpp"

#include <cmath>

#include "xmf/log.hpp"
#include "xmf/simkernel.hpp"

namespace xmf {
namespace {

// Symmetric PSD square root with the spec'd eigenvalue handling.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw XmfError(ErrorCode::non_psd_covariance,
                       std::string("eigendecomposition failed for ") + what);
    }
    Eigen::VectorXd evals = solver.eigenvalues();
    bool clamped = false;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals[i] < -1e-6) {
            throw XmfError(ErrorCode::non_psd_covariance,
                           std::string(what) + " has eigenvalue " + std::to_string(evals[i]));
        }
        if (evals[i] < 0.0) {
            evals[i] = 0.0;
            clamped = true;
        }
    }
    if (clamped) {
        log_debug(std::string("clamped negative eigenvalue(s) while taking sqrt of ") + what);
    }
    return solver.eigenvectors() * evals.cwiseSqrt().asDiagonal() *
           solver.eigenvectors().transpose();
}

}  // namespace

GaussianStats fit_gaussian(const EmbeddingSet& set) {
    if (set.count() < 2) {
        throw XmfError(ErrorCode::insufficient_samples,
                       "need >= 2 samples, got " + std::to_string(set.count()));
    }
    const auto n = Eigen::Index(set.count());
    const auto d = Eigen::Index(set.dim());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        rows(set.data().data(), n, d);
    GaussianStats stats;
    stats.n = set.count();
    stats.mean = rows.colwise().mean();
    Eigen::MatrixXd centered = rows.rowwise() - stats.mean.transpose();
    stats.cov = (centered.transpose() * centered) / double(n - 1);
    stats.cov = 0.5 * (stats.cov + stats.cov.transpose()).eval();
    return stats;
}

double fad(const GaussianStats& b, const GaussianStats& e) {
    if (b.mean.size() != e.mean.size()) {
        throw XmfError(ErrorCode::dim_mismatch,
                       std::to_string(b.mean.size()) + " vs " + std::to_string(e.mean.size()));
    }
    Eigen::MatrixXd sqrt_b = psd_sqrt(b.cov, "first covariance");
    // Tr((S_b S_e)^(1/2)) == Tr(sqrtm(S_b^(1/2) S_e S_b^(1/2))) by cyclicity.
    Eigen::MatrixXd cross = psd_sqrt(sqrt_b * e.cov * sqrt_b, "cross product");
    double mean_term = (b.mean - e.mean).squaredNorm();
    double trace_term = b.cov.trace() + e.cov.trace() - 2.0 * cross.trace();
    return std::max(0.0, mean_term + trace_term);
}

double kl_div(const ProbVector& p, const ProbVector& q, double eps) {
    if (p.p.size() != q.p.size()) {
        throw XmfError(ErrorCode::length_mismatch,
                       std::to_string(p.p.size()) + " vs " + std::to_string(q.p.size()));
    }
    double psum = 0.0, qsum = 0.0;
    for (std::size_t i = 0; i < p.p.size(); ++i) {
        if (p.p[i] < 0.0 || q.p[i] < 0.0) {
            throw XmfError(ErrorCode::out_of_range_operand,
                           "negative probability at index " + std::to_string(i));
        }
        psum += p.p[i] + eps;
        qsum += q.p[i] + eps;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.p.size(); ++i) {
        double pi = (p.p[i] + eps) / psum;
        double qi = (q.p[i] + eps) / qsum;
        if (pi > 0.0) kl += pi * std::log(pi / qi);
    }
    return kl;
}

double ibsc(std::span<const double> e_art, std::span<const double> e_gen) {
    return cosine(e_art, e_gen);
}

ProbVector histogram_features(const EmbeddingSet& set, std::size_t bins,
                              std::size_t axis, double lo, double hi) {
    if (bins < 2) {
        throw XmfError(ErrorCode::out_of_range_operand, "bins must be >= 2");
    }
    if (axis >= set.dim()) {
        throw XmfError(ErrorCode::out_of_range_operand,
                       "axis " + std::to_string(axis) + " >= dim " + std::to_string(set.dim()));
    }
    if (!(lo < hi)) {
        throw XmfError(ErrorCode::degenerate_range,
                       "range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    std::vector<double> counts(bins, 0.0);
    double width = (hi - lo) / double(bins);
    for (std::size_t i = 0; i < set.count(); ++i) {
        double v = set.row(i)[axis];
        auto bin = std::size_t(std::clamp((v - lo) / width, 0.0, double(bins - 1)));
        counts[bin] += 1.0;
    }
    double total = double(set.count());
    ProbVector out;
    out.p.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) out.p[i] = total == 0.0 ? 0.0 : counts[i] / total;
    return out;
}

}  // namespace xmf
