#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "maneuverlab/checkpoint.hpp"
#include "maneuverlab/config.hpp"
#include "maneuverlab/nets.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/signals.hpp"

namespace mlab::tnc {

/// Inclusive window-index range [lo, hi] around an anchor.
struct Neighborhood {
    std::size_t lo = 0;
    std::size_t hi = 0;

    [[nodiscard]] bool contains(std::size_t w) const noexcept { return w >= lo && w <= hi; }
    [[nodiscard]] std::size_t size() const noexcept { return hi - lo + 1; }
};

/// Window indices of one (anchor, positive, negative) triple.
struct Tuple {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

/**
 * Draws contrastive tuples over the non-overlapping windows of a series.
 *
 * The neighborhood of an anchor grows outward one window at a time while
 * the ADF test on the concatenated region still rejects a unit root for
 * every feature, up to `cap` windows per side. Each step first tries to
 * extend all still-growing sides together; if that fails, each side is
 * retried alone and the sides that fail stop growing. A failed test
 * (degenerate regression) stops growth the same way.
 */
class NeighborhoodSampler {
public:
    NeighborhoodSampler(const Matrix& values, std::size_t window, double adf_threshold, std::size_t cap,
                        std::uint64_t seed);
    NeighborhoodSampler(const signals::MultivariateSeries& series, std::size_t window, double adf_threshold,
                        std::size_t cap, std::uint64_t seed);

    [[nodiscard]] std::size_t window_count() const noexcept { return batch_.size(); }
    [[nodiscard]] const signals::WindowBatch& windows() const noexcept { return batch_; }

    /// Cached per anchor. ParameterError when t is out of range.
    [[nodiscard]] Neighborhood find_neighborhood(std::size_t t);
    /// SamplingError when the neighborhood covers every window.
    [[nodiscard]] Tuple sample_tuple(std::size_t t);

private:
    [[nodiscard]] bool region_stationary(std::size_t lo, std::size_t hi) const;

    Matrix values_;
    signals::WindowBatch batch_;
    double threshold_;
    std::size_t cap_;
    Rng rng_;
    std::vector<std::optional<Neighborhood>> cache_;
};

/// Per-batch decomposition of the contrastive objective.
struct TncLossTerms {
    nd::Tensor loss;        // -(pos_term + neg_term), differentiable
    double pos_term = 0.0;  // mean log D(anchor, positive)
    double neg_term = 0.0;  // mean w log D(anchor, negative) + (1 - w) log(1 - D(anchor, negative))
    std::size_t correct = 0;  // pairs classified correctly at 0.5
    std::size_t pairs = 0;
};

/// Probabilities are clamped to [kClamp, 1 - kClamp] before the log.
inline constexpr double kClamp = 1e-7;

/// Windows of one tuple, as encoder inputs.
struct WindowTriple {
    nd::Tensor anchor;
    nd::Tensor positive;
    nd::Tensor negative;
};

/**
 * L = -mean_b [log D(z_t, z_l) + w log D(z_t, z_k) + (1 - w) log(1 - D(z_t, z_k))].
 * ParameterError on an empty batch.
 */
[[nodiscard]] TncLossTerms tnc_loss(const nets::Encoder& enc, const nets::Discriminator& disc,
                                    std::span<const WindowTriple> batch, double pu_weight);

/// Same objective from raw discriminator probabilities (no networks).
[[nodiscard]] double tnc_loss_value(std::span<const double> d_pos, std::span<const double> d_neg,
                                    double pu_weight);

struct TncEpoch {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double heldout_loss = 0.0;
    double disc_accuracy = 0.0;  // held-out, positives and negatives pooled
};

struct TncModel {
    nets::Encoder encoder;
    nets::Discriminator discriminator;
    std::vector<TncEpoch> log;
};

[[nodiscard]] nets::EncoderSpec tnc_encoder_spec(const TrainConfig& cfg, std::size_t features);

/**
 * Trains encoder and discriminator with Adam. The first `train_split` of
 * windows (in time order) provide training anchors; the rest are held out
 * and scored with a fixed tuple draw every epoch. DataError when the
 * series has fewer than two windows or either split is too small to
 * sample a negative.
 */
[[nodiscard]] TncModel train_tnc(const TrainConfig& cfg, const signals::MultivariateSeries& series);

[[nodiscard]] Checkpoint tnc_checkpoint(const TncModel& model, const TrainConfig& cfg);
/// Rebuilds the encoder stored in a TNC checkpoint.
[[nodiscard]] nets::Encoder load_tnc_encoder(const Checkpoint& ckpt);

}  // namespace mlab::tnc
