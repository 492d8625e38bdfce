#pragma once

#include <Eigen/Dense>
#include <any>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "xmf/error.hpp"

namespace xmf {

// Linear variance schedule; arrays are indexed t-1 for t in [1, T].
// alpha_bar_at(0) == 1 so the final reverse step emits the clean estimate.
struct DiffusionSchedule {
    std::size_t T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;      // 1 - beta
    std::vector<double> alpha_bar;  // cumulative product
    std::vector<double> snr;        // alpha_bar / (1 - alpha_bar)

    double alpha_bar_at(std::size_t t) const;  // t in [0, T]
};

struct LatentState {
    Eigen::VectorXd z;
    std::size_t t = 0;  // 0 means clean
};

DiffusionSchedule make_schedule(std::size_t T, double beta_start, double beta_end);

// z_t = sqrt(abar_t) z_0 + sqrt(1 - abar_t) eps
LatentState q_sample(const LatentState& z0, std::size_t t, const Eigen::VectorXd& eps,
                     const DiffusionSchedule& sched);

// zhat_0 = (z_t - sqrt(1 - abar_t) eps_pred) / sqrt(abar_t)
Eigen::VectorXd estimate_z0(const LatentState& zt, const Eigen::VectorXd& eps_pred,
                            const DiffusionSchedule& sched);

// Deterministic update to the given previous timestep (default t-1):
// z_prev = sqrt(abar_prev) zhat_0 + sqrt(1 - abar_prev) eps_pred
LatentState ddim_step(const LatentState& zt, const Eigen::VectorXd& eps_pred,
                      const DiffusionSchedule& sched);
LatentState ddim_step_to(const LatentState& zt, std::size_t t_prev,
                         const Eigen::VectorXd& eps_pred, const DiffusionSchedule& sched);

using Denoiser =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& z, std::size_t t, const std::any& cond)>;

// Iterates ddim_step_to along a strictly decreasing timestep sequence;
// the step after the last sequence element targets t=0.
Eigen::VectorXd ddim_sample(const LatentState& zT, const Denoiser& denoiser,
                            const std::any& cond, const std::vector<std::size_t>& steps,
                            const DiffusionSchedule& sched);

// min(SNR_t, gamma) / SNR_t
double min_snr_weight(std::size_t t, const DiffusionSchedule& sched, double gamma_snr = 5.0);

// min_snr_weight(t) * ||eps - eps_pred||^2
double weighted_loss(const Eigen::VectorXd& eps, const Eigen::VectorXd& eps_pred,
                     std::size_t t, const DiffusionSchedule& sched, double gamma_snr = 5.0);

// ---- toy aligner (frozen-backbone training exercise) ----

struct AlignerShape {
    std::size_t in_dim = 512;
    std::size_t up_dim = 1024;       // == in_dim disables the upscaler
    std::size_t token_width = 768;
    std::size_t n_tokens = 4;

    std::size_t cond_dim() const { return token_width * n_tokens; }
    bool has_upscaler() const { return in_dim != up_dim; }
};

struct ToyAligner {
    AlignerShape shape;
    std::optional<Eigen::MatrixXd> w_up;  // up_dim x in_dim
    Eigen::MatrixXd w_proj;               // cond_dim x up_dim

    static ToyAligner zeros(const AlignerShape& shape);
    static ToyAligner seeded(const AlignerShape& shape, uint64_t seed, double scale = 0.01);

    // conditioning vector, reshapeable to n_tokens tokens of token_width
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

// Fixed linear denoiser: eps_hat = D_z z + D_c c. Never updated by training.
struct ToyDenoiser {
    Eigen::MatrixXd d_z;  // latent_dim x latent_dim
    Eigen::MatrixXd d_c;  // latent_dim x cond_dim

    static ToyDenoiser seeded(std::size_t latent_dim, std::size_t cond_dim, uint64_t seed);
    Eigen::VectorXd predict(const Eigen::VectorXd& z, const Eigen::VectorXd& c) const;
};

struct TrainSample {
    Eigen::VectorXd image_embedding;
    Eigen::VectorXd target_latent;
};

// One training equation instance with its noise draw frozen.
struct NoisedSample {
    Eigen::VectorXd x;
    Eigen::VectorXd z0;
    std::size_t t = 1;
    Eigen::VectorXd eps;
};

struct AlignerGradient {
    std::optional<Eigen::MatrixXd> w_up;
    Eigen::MatrixXd w_proj;
};

// Mean over the batch of min_snr_weight(t) * ||eps - eps_hat||^2 with
// eps_hat = denoiser(q_sample(z0, t, eps), aligner(x)).
double aligner_batch_loss(const ToyAligner& aligner, const ToyDenoiser& denoiser,
                          const std::vector<NoisedSample>& batch,
                          const DiffusionSchedule& sched, double gamma_snr = 5.0);

AlignerGradient aligner_batch_gradient(const ToyAligner& aligner, const ToyDenoiser& denoiser,
                                       const std::vector<NoisedSample>& batch,
                                       const DiffusionSchedule& sched, double gamma_snr = 5.0);

struct TrainLogEntry {
    std::size_t step;
    double loss;
};

struct TrainResult {
    ToyAligner aligner;
    std::vector<TrainLogEntry> log;
};

// Full-batch gradient descent; per-sample (t, eps) are drawn once from
// `seed` and held fixed, so the objective is a fixed quadratic in the
// aligner. Only w_up / w_proj change. Aborts on non-finite loss.
TrainResult train_toy_aligner(const std::vector<TrainSample>& pairs,
                              const DiffusionSchedule& sched, std::size_t steps, double lr,
                              const ToyDenoiser& denoiser, const ToyAligner& initial,
                              uint64_t seed, double gamma_snr = 5.0);

}  // namespace xmf
