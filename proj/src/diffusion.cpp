#include "xmf/diffusion.hpp"

#include <cmath>
#include <random>

namespace xmf {
namespace {

void require_timestep(std::size_t t, const DiffusionSchedule& sched) {
    if (t < 1 || t > sched.T) {
        throw XmfError(ErrorCode::timestep_out_of_range,
                       "t=" + std::to_string(t) + " outside [1, " + std::to_string(sched.T) + "]");
    }
}

void require_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw XmfError(ErrorCode::dim_mismatch,
                       std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

}  // namespace

double DiffusionSchedule::alpha_bar_at(std::size_t t) const {
    if (t == 0) return 1.0;
    if (t > T) {
        throw XmfError(ErrorCode::timestep_out_of_range,
                       "t=" + std::to_string(t) + " > T=" + std::to_string(T));
    }
    return alpha_bar[t - 1];
}

DiffusionSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
    if (T < 1 || !(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw XmfError(ErrorCode::invalid_range,
                       "need T >= 1 and 0 < beta_start <= beta_end < 1");
    }
    DiffusionSchedule sched;
    sched.T = T;
    sched.beta.resize(T);
    sched.alpha.resize(T);
    sched.alpha_bar.resize(T);
    sched.snr.resize(T);
    double prod = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        double frac = T == 1 ? 0.0 : double(i) / double(T - 1);
        sched.beta[i] = beta_start + (beta_end - beta_start) * frac;
        sched.alpha[i] = 1.0 - sched.beta[i];
        prod *= sched.alpha[i];
        sched.alpha_bar[i] = prod;
        sched.snr[i] = prod / (1.0 - prod);
    }
    return sched;
}

LatentState q_sample(const LatentState& z0, std::size_t t, const Eigen::VectorXd& eps,
                     const DiffusionSchedule& sched) {
    require_timestep(t, sched);
    require_same_size(z0.z, eps);
    double abar = sched.alpha_bar_at(t);
    return {std::sqrt(abar) * z0.z + std::sqrt(1.0 - abar) * eps, t};
}

Eigen::VectorXd estimate_z0(const LatentState& zt, const Eigen::VectorXd& eps_pred,
                            const DiffusionSchedule& sched) {
    require_timestep(zt.t, sched);
    require_same_size(zt.z, eps_pred);
    double abar = sched.alpha_bar_at(zt.t);
    return (zt.z - std::sqrt(1.0 - abar) * eps_pred) / std::sqrt(abar);
}

LatentState ddim_step_to(const LatentState& zt, std::size_t t_prev,
                         const Eigen::VectorXd& eps_pred, const DiffusionSchedule& sched) {
    require_timestep(zt.t, sched);
    if (t_prev >= zt.t) {
        throw XmfError(ErrorCode::invalid_step_sequence,
                       "target timestep " + std::to_string(t_prev) +
                           " not below current " + std::to_string(zt.t));
    }
    Eigen::VectorXd z0_hat = estimate_z0(zt, eps_pred, sched);
    double abar_prev = sched.alpha_bar_at(t_prev);
    return {std::sqrt(abar_prev) * z0_hat + std::sqrt(1.0 - abar_prev) * eps_pred, t_prev};
}

LatentState ddim_step(const LatentState& zt, const Eigen::VectorXd& eps_pred,
                      const DiffusionSchedule& sched) {
    require_timestep(zt.t, sched);
    return ddim_step_to(zt, zt.t - 1, eps_pred, sched);
}

Eigen::VectorXd ddim_sample(const LatentState& zT, const Denoiser& denoiser,
                            const std::any& cond, const std::vector<std::size_t>& steps,
                            const DiffusionSchedule& sched) {
    if (steps.empty()) {
        throw XmfError(ErrorCode::invalid_step_sequence, "empty timestep sequence");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] < 1 || steps[i] > sched.T) {
            throw XmfError(ErrorCode::invalid_step_sequence,
                           "timestep " + std::to_string(steps[i]) + " out of range");
        }
        if (i > 0 && steps[i] >= steps[i - 1]) {
            throw XmfError(ErrorCode::invalid_step_sequence, "sequence not strictly decreasing");
        }
    }
    if (zT.t != steps.front()) {
        throw XmfError(ErrorCode::invalid_step_sequence,
                       "state at t=" + std::to_string(zT.t) + " but sequence starts at " +
                           std::to_string(steps.front()));
    }
    LatentState state = zT;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        Eigen::VectorXd eps_pred = denoiser(state.z, state.t, cond);
        std::size_t t_prev = i + 1 < steps.size() ? steps[i + 1] : 0;
        state = ddim_step_to(state, t_prev, eps_pred, sched);
    }
    return state.z;
}

double min_snr_weight(std::size_t t, const DiffusionSchedule& sched, double gamma_snr) {
    require_timestep(t, sched);
    double snr = sched.snr[t - 1];
    return std::min(snr, gamma_snr) / snr;
}

double weighted_loss(const Eigen::VectorXd& eps, const Eigen::VectorXd& eps_pred,
                     std::size_t t, const DiffusionSchedule& sched, double gamma_snr) {
    require_same_size(eps, eps_pred);
    return min_snr_weight(t, sched, gamma_snr) * (eps - eps_pred).squaredNorm();
}

ToyAligner ToyAligner::zeros(const AlignerShape& shape) {
    ToyAligner a;
    a.shape = shape;
    if (shape.has_upscaler()) {
        a.w_up = Eigen::MatrixXd::Zero(Eigen::Index(shape.up_dim), Eigen::Index(shape.in_dim));
    }
    a.w_proj = Eigen::MatrixXd::Zero(Eigen::Index(shape.cond_dim()), Eigen::Index(shape.up_dim));
    return a;
}

namespace {

Eigen::MatrixXd seeded_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                              double scale) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * normal(rng);
    }
    return m;
}

}  // namespace

ToyAligner ToyAligner::seeded(const AlignerShape& shape, uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    ToyAligner a;
    a.shape = shape;
    if (shape.has_upscaler()) {
        a.w_up = seeded_matrix(Eigen::Index(shape.up_dim), Eigen::Index(shape.in_dim), rng, scale);
    }
    a.w_proj = seeded_matrix(Eigen::Index(shape.cond_dim()), Eigen::Index(shape.up_dim), rng, scale);
    return a;
}

Eigen::VectorXd ToyAligner::apply(const Eigen::VectorXd& x) const {
    if (std::size_t(x.size()) != shape.in_dim) {
        throw XmfError(ErrorCode::dim_mismatch,
                       "input dim " + std::to_string(x.size()) + ", aligner expects " +
                           std::to_string(shape.in_dim));
    }
    Eigen::VectorXd h = shape.has_upscaler() ? Eigen::VectorXd(*w_up * x) : x;
    return w_proj * h;
}

ToyDenoiser ToyDenoiser::seeded(std::size_t latent_dim, std::size_t cond_dim, uint64_t seed) {
    std::mt19937_64 rng(seed);
    ToyDenoiser d;
    double scale = 1.0 / std::sqrt(double(latent_dim + cond_dim));
    d.d_z = seeded_matrix(Eigen::Index(latent_dim), Eigen::Index(latent_dim), rng, scale);
    d.d_c = seeded_matrix(Eigen::Index(latent_dim), Eigen::Index(cond_dim), rng, scale);
    return d;
}

Eigen::VectorXd ToyDenoiser::predict(const Eigen::VectorXd& z, const Eigen::VectorXd& c) const {
    return d_z * z + d_c * c;
}

namespace {

// Shared forward pass: returns per-sample weight * residual, where
// residual = eps_hat - eps.
struct SampleForward {
    double weight;
    Eigen::VectorXd residual;
    Eigen::VectorXd h;  // upscaler output (or raw input)
};

SampleForward forward_one(const ToyAligner& aligner, const ToyDenoiser& denoiser,
                          const NoisedSample& s, const DiffusionSchedule& sched,
                          double gamma_snr) {
    LatentState zt = q_sample({s.z0, 0}, s.t, s.eps, sched);
    Eigen::VectorXd h = aligner.shape.has_upscaler() ? Eigen::VectorXd(*aligner.w_up * s.x)
                                                     : s.x;
    Eigen::VectorXd c = aligner.w_proj * h;
    Eigen::VectorXd eps_hat = denoiser.predict(zt.z, c);
    return {min_snr_weight(s.t, sched, gamma_snr), eps_hat - s.eps, std::move(h)};
}

}  // namespace

double aligner_batch_loss(const ToyAligner& aligner, const ToyDenoiser& denoiser,
                          const std::vector<NoisedSample>& batch,
                          const DiffusionSchedule& sched, double gamma_snr) {
    if (batch.empty()) {
        throw XmfError(ErrorCode::empty_input, "empty training batch");
    }
    double total = 0.0;
    for (const NoisedSample& s : batch) {
        SampleForward f = forward_one(aligner, denoiser, s, sched, gamma_snr);
        total += f.weight * f.residual.squaredNorm();
    }
    return total / double(batch.size());
}

AlignerGradient aligner_batch_gradient(const ToyAligner& aligner, const ToyDenoiser& denoiser,
                                       const std::vector<NoisedSample>& batch,
                                       const DiffusionSchedule& sched, double gamma_snr) {
    if (batch.empty()) {
        throw XmfError(ErrorCode::empty_input, "empty training batch");
    }
    AlignerGradient grad;
    if (aligner.shape.has_upscaler()) {
        grad.w_up = Eigen::MatrixXd::Zero(aligner.w_up->rows(), aligner.w_up->cols());
    }
    grad.w_proj = Eigen::MatrixXd::Zero(aligner.w_proj.rows(), aligner.w_proj.cols());
    for (const NoisedSample& s : batch) {
        SampleForward f = forward_one(aligner, denoiser, s, sched, gamma_snr);
        Eigen::VectorXd g_c = 2.0 * f.weight * (denoiser.d_c.transpose() * f.residual);
        grad.w_proj.noalias() += g_c * f.h.transpose();
        if (aligner.shape.has_upscaler()) {
            grad.w_up->noalias() += (aligner.w_proj.transpose() * g_c) * s.x.transpose();
        }
    }
    double inv = 1.0 / double(batch.size());
    grad.w_proj *= inv;
    if (grad.w_up) *grad.w_up *= inv;
    return grad;
}

TrainResult train_toy_aligner(const std::vector<TrainSample>& pairs,
                              const DiffusionSchedule& sched, std::size_t steps, double lr,
                              const ToyDenoiser& denoiser, const ToyAligner& initial,
                              uint64_t seed, double gamma_snr) {
    if (pairs.empty()) {
        throw XmfError(ErrorCode::empty_input, "no training pairs");
    }
    if (!(lr > 0.0)) {
        throw XmfError(ErrorCode::invalid_range, "lr must be positive");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> t_dist(1, sched.T);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<NoisedSample> batch;
    batch.reserve(pairs.size());
    for (const TrainSample& p : pairs) {
        if (std::size_t(p.image_embedding.size()) != initial.shape.in_dim) {
            throw XmfError(ErrorCode::dim_mismatch,
                           "image embedding dim " + std::to_string(p.image_embedding.size()));
        }
        NoisedSample s;
        s.x = p.image_embedding;
        s.z0 = p.target_latent;
        s.t = t_dist(rng);
        s.eps.resize(p.target_latent.size());
        for (Eigen::Index i = 0; i < s.eps.size(); ++i) s.eps[i] = normal(rng);
        batch.push_back(std::move(s));
    }

    TrainResult result;
    result.aligner = initial;
    for (std::size_t step = 0; step < steps; ++step) {
        double loss = aligner_batch_loss(result.aligner, denoiser, batch, sched, gamma_snr);
        if (!std::isfinite(loss)) {
            throw XmfError(ErrorCode::non_finite_loss,
                           "diverged at step " + std::to_string(step));
        }
        result.log.push_back({step, loss});
        AlignerGradient grad =
            aligner_batch_gradient(result.aligner, denoiser, batch, sched, gamma_snr);
        result.aligner.w_proj -= lr * grad.w_proj;
        if (result.aligner.w_up) *result.aligner.w_up -= lr * *grad.w_up;
    }
    return result;
}

}  // namespace xmf
