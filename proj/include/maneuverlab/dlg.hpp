#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "maneuverlab/checkpoint.hpp"
#include "maneuverlab/config.hpp"
#include "maneuverlab/nets.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/signals.hpp"

namespace mlab::dlg {

// ---------------------------------------------------------------- GP priors

enum class Kernel { Rbf, Matern32 };

[[nodiscard]] Kernel parse_kernel(const std::string& name);  // "RBF" | "Matern32"
[[nodiscard]] std::string kernel_name(Kernel k);

inline constexpr double kJitter = 1e-6;

/// Zero-mean GP prior shared by a contiguous block of latent dimensions.
struct GpPrior {
    Kernel kernel = Kernel::Rbf;
    double length_scale = 1.0;
    std::size_t first_dim = 0;  // latent dims [first_dim, first_dim + dims)
    std::size_t dims = 0;
};

/// k(r) with r = |t - t'|. ParameterError for a non-positive length scale.
[[nodiscard]] double kernel_value(Kernel k, double length_scale, double r);

/// n x n Gram matrix over `times`, plus kJitter on the diagonal.
[[nodiscard]] Matrix gp_gram(const GpPrior& prior, std::span<const double> times);

/**
 * One prior per (kernel, scale) pair, kernel-major. Latent dimension j
 * belongs to prior floor(j * P / latent_dims), so each prior owns a
 * contiguous block.
 */
[[nodiscard]] std::vector<GpPrior> make_priors(const std::vector<std::string>& kernels,
                                               const std::vector<double>& scales, std::size_t latent_dims);

/// Inverse and log-determinant of a symmetric positive definite matrix.
struct GramFactor {
    Matrix inverse;
    double logdet = 0.0;
};

/// Cholesky based. NumericalError when the matrix is not positive definite.
[[nodiscard]] GramFactor factor_gram(const Matrix& K);

// ---------------------------------------------------------------- KL terms

/// sum_i 0.5 (sigma_i^2 + mu_i^2 - 1 - log sigma_i^2), differentiable.
[[nodiscard]] nd::Tensor kl_gaussian_diag(const nd::Tensor& mean, const nd::Tensor& logvar);
[[nodiscard]] double kl_gaussian_diag(std::span<const double> mean, std::span<const double> logvar);

/**
 * KL(N(mu_r, diag sigma_r^2) || N(0, K)) summed over the rows r of the
 * d x n inputs:
 *   0.5 [tr(K^-1 S) + mu' K^-1 mu - n + log det K - log det S].
 */
[[nodiscard]] nd::Tensor kl_gaussian_gp(const nd::Tensor& mean, const nd::Tensor& logvar,
                                        const GramFactor& gram);
[[nodiscard]] nd::Tensor kl_gaussian_gp(const nd::Tensor& mean, const nd::Tensor& logvar,
                                        const GpPrior& prior);

/// z = mean + exp(logvar / 2) * eps, eps ~ N(0, 1) from `noise`.
[[nodiscard]] nd::Tensor reparameterize(const nets::Gaussian& q, Rng& noise);

/// log N(z; mean, diag exp(logvar)), differentiable in all arguments.
[[nodiscard]] nd::Tensor gaussian_log_density(const nd::Tensor& z, const nets::Gaussian& q);

// ---------------------------------------------------------------- model

/// Posterior log-variances are clamped to [-kLogVarBound, kLogVarBound].
inline constexpr double kLogVarBound = 8.0;

struct DlgNetworks {
    nets::Encoder enc_local;   // variational, out = M
    nets::Encoder enc_global;  // variational, out = m
    nets::Decoder decoder;
    std::vector<GpPrior> priors;

    void register_params(ParameterSet& params) const;
};

/// A batch of consecutive windows; the GP prior spans their positions.
struct WindowSet {
    std::vector<nd::Tensor> windows;  // F x delta each
    std::vector<nd::Tensor> masks;    // same shapes, 1 = observed
};

struct ElboTerms {
    nd::Tensor total;       // differentiable objective
    double mse = 0.0;       // squared error over observed entries / observed count
    double kl_local = 0.0;  // GP KL of the batch / batch size
    double kl_global = 0.0; // mean diagonal KL of z_g
    double l_reg = 0.0;     // mean counterfactual term
};

/**
 * For each i, j != i is drawn from `pairs`; the decoder rebuilds
 * W* = dec(z_local[i], z_global[j]) and the global encoder scores it:
 *   r_i = log q(z_global[i] | W*) - log q(z_global[j] | W*)
 * and contributes l_i = log((1 + exp(r_i)) / 2), a bounded monotone
 * transform of the likelihood ratio (0 when the codes coincide, never
 * below -log 2). Returns the batch mean. ParameterError for fewer than two elements.
 */
[[nodiscard]] nd::Tensor counterfactual_reg(std::span<const nd::Tensor> z_local,
                                            std::span<const nd::Tensor> z_global, const nets::Encoder& enc_global,
                                            const nets::Decoder& dec, Rng& pairs);

/**
 * total = (1 - B) mse + B (kl_local + kl_global) + lambda l_reg.
 * The counterfactual term needs at least two windows and is 0 otherwise.
 * ParameterError on an empty batch.
 */
[[nodiscard]] ElboTerms elbo_loss(const WindowSet& batch, const DlgNetworks& nets, double kl_weight,
                                  double reg_weight, Rng& noise, Rng& pairs);

struct DlgEpoch {
    std::size_t epoch = 0;
    double total = 0.0;
    double mse = 0.0;
    double kl_local = 0.0;
    double kl_global = 0.0;
    double l_reg = 0.0;
    double heldout_mse = 0.0;  // posterior-mean reconstruction, observed entries
};

struct DlgModel {
    DlgNetworks nets;
    std::vector<double> sigma;  // per-feature residual std on the training portion
    std::vector<DlgEpoch> log;
    bool trained = false;
};

[[nodiscard]] DlgNetworks make_networks(const TrainConfig& cfg, std::size_t features, Rng& init);

/**
 * Adam on the full objective. Training windows (the first train_split in
 * time) are cut into runs of `batch` consecutive windows, visited in a
 * shuffled order every epoch. DataError when the series spans fewer than
 * two windows.
 */
[[nodiscard]] DlgModel train_dlg(const TrainConfig& cfg, const signals::MultivariateSeries& series);

struct Reconstruction {
    Matrix values;              // F x T
    std::vector<double> sigma;  // per feature
};

/// Decodes posterior means window by window. StateError when untrained.
[[nodiscard]] Reconstruction reconstruct(const DlgModel& model, const signals::MultivariateSeries& series);

/// Reconstruction error of posterior means over observed entries of `windows`.
[[nodiscard]] double reconstruction_mse(const DlgNetworks& nets, const signals::WindowBatch& windows);

[[nodiscard]] Checkpoint dlg_checkpoint(const DlgModel& model, const TrainConfig& cfg);
[[nodiscard]] DlgModel load_dlg(const Checkpoint& ckpt);

}  // namespace mlab::dlg
