#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maneuverlab/matrix.hpp"

namespace mlab::signals {

/// Feature names in column order (F = 2).
inline const std::vector<std::string> kFeatureNames{"a_lat", "a_lon"};
inline constexpr std::size_t kLat = 0;
inline constexpr std::size_t kLon = 1;

/// Maneuver states derived from per-feature stationarity.
enum class State : int {
    BothStationary = 0,
    OnlyLonStationary = 1,
    OnlyLatStationary = 2,
    NeitherStationary = 3,
};
inline constexpr int kStateCount = 4;

/// F x T multivariate signal. Masks hold 1.0 (observed) / 0.0 (missing).
struct MultivariateSeries {
    Matrix values;                     // F x T
    std::optional<Matrix> mask;        // F x T, 1 = observed
    std::optional<std::vector<int>> labels;  // length T, in [0, 4)
    std::optional<double> sample_rate_hint;

    [[nodiscard]] std::size_t features() const noexcept { return values.rows; }
    [[nodiscard]] std::size_t length() const noexcept { return values.cols; }
    /// Mask if present, all-ones otherwise.
    [[nodiscard]] Matrix observed_mask() const;
    /// Throws DimensionError when mask or labels disagree with values.
    void validate() const;
};

/// Non-overlapping windows tiling a series; the last one may be padded.
struct WindowBatch {
    std::vector<Matrix> windows;       // each F x window_size
    std::vector<Matrix> masks;         // same shapes; padding is 0
    std::vector<std::size_t> start_indices;
    std::vector<std::size_t> valid_lengths;  // unpadded columns per window
    std::size_t window_size = 0;

    [[nodiscard]] std::size_t size() const noexcept { return windows.size(); }
};

/// Reads a CSV with header. Required columns a_lat, a_lon; optional
/// mask_a_lat, mask_a_lon (0/1) and state. NaN or empty cells become
/// masked-out zeros.
[[nodiscard]] MultivariateSeries load_csv(const std::filesystem::path& path);

/// Writes a_lat, a_lon, mask columns (when a mask exists) and state (when
/// labels exist) with round-trip precision.
void write_csv(const std::filesystem::path& path, const MultivariateSeries& s);

/// Per-feature division by max |x|. Zeros stay zero; idempotent.
[[nodiscard]] MultivariateSeries normalize(const MultivariateSeries& s);

[[nodiscard]] WindowBatch make_windows(const MultivariateSeries& s, std::size_t window);

/// Drops padding and concatenates windows back into an F x T matrix.
[[nodiscard]] Matrix reassemble(const WindowBatch& batch);

/// Majority state per window (ties resolve to the smaller state id).
[[nodiscard]] std::vector<int> window_labels(const std::vector<int>& labels, const WindowBatch& batch);

// ---------------------------------------------------------------- synthesis

enum class Regime {
    Ar1,            // x_t = phi x_{t-1} + noise
    RandomWalk,     // x_t = x_{t-1} + noise
    DriftingSine,   // sinusoid with random-walk phase drift plus noise
};

[[nodiscard]] Regime parse_regime(const std::string& name);
[[nodiscard]] std::string regime_name(Regime r);
[[nodiscard]] bool is_stationary(Regime r);

struct SegmentSpec {
    std::size_t length = 0;
    Regime lat = Regime::Ar1;
    Regime lon = Regime::Ar1;
};

struct SynthConfig {
    std::vector<SegmentSpec> segments;
    double phi = 0.3;            // AR(1) coefficient, |phi| < 1
    double noise_scale = 1.0;
    double walk_step = 1.0;      // random-walk innovation, relative to noise_scale
    double missing_rate = 0.0;   // in [0, 1)
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t length() const;
    void validate() const;
};

/// Sixteen 125-step segments cycling states 0,1,2,3 (T = 2000). Walks use
/// small steps, so stationary and non-stationary windows differ sharply in
/// local volatility.
[[nodiscard]] SynthConfig four_state_preset(std::uint64_t seed);
/// Alternating stationary / non-stationary segments for both features.
[[nodiscard]] SynthConfig two_state_preset(std::uint64_t seed);
/// Looks up a preset by name ("four-state", "two-state").
[[nodiscard]] SynthConfig preset(const std::string& name, std::uint64_t seed);

/// Generates, normalizes and attaches the planted state labels.
[[nodiscard]] MultivariateSeries synthesize(const SynthConfig& cfg);

// ---------------------------------------------------------------- labeling

/// How an ADF p-value maps to "stationary".
enum class StationarityConvention {
    RejectUnitRoot,  // stationary iff p <= threshold (standard)
    PValueAbove,     // stationary iff p > threshold (literal reading)
};

/**
 * Labels every timestep by the stationarity of each feature inside
 * non-overlapping blocks of `window` samples (a trailing remainder shorter
 * than `window` joins the last full block). State 0: both stationary,
 * 1: only a_lon, 2: only a_lat, 3: neither.
 */
[[nodiscard]] MultivariateSeries label_states(
    const MultivariateSeries& s, std::size_t window = 250, double p_thresh = 0.01,
    StationarityConvention convention = StationarityConvention::RejectUnitRoot);

[[nodiscard]] int state_from_stationarity(bool lat_stationary, bool lon_stationary);

}  // namespace mlab::signals
