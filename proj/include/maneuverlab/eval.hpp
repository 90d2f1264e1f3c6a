#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maneuverlab/matrix.hpp"
#include "maneuverlab/signals.hpp"

namespace mlab::eval {

/// Per-window representations of one series.
struct RepresentationSet {
    Matrix Z;                         // N x M local representations
    std::optional<Matrix> z_global;   // N x m
    std::vector<std::size_t> starts;  // window start indices
    std::string source;               // "tnc" | "dlg"
    std::size_t window = 0;

    /// DimensionError on inconsistent sizes, DataError on non-finite entries.
    void validate() const;
};

// ---------------------------------------------------------------- classification

struct ProbeOptions {
    double split = 0.8;
    std::size_t epochs = 200;
    std::size_t batch = 5;
    double lr = 0.001;
    double dropout = 0.5;
    std::size_t classes = 4;
    std::uint64_t seed = 0;
};

struct ProbeResult {
    double accuracy = 0.0;  // fraction, held-out
    double auprc = 0.0;     // macro one-vs-rest, over classes present in the held-out part
    double majority_baseline = 0.0;  // largest held-out class share
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

/**
 * Trains a dropout + linear head with softmax cross-entropy on the first
 * `split` of rows (time order) and scores the rest. Inputs are
 * standardized with training statistics. DegenerateTaskError when the
 * training part holds fewer than two classes.
 */
[[nodiscard]] ProbeResult linear_probe(const Matrix& X, const std::vector<int>& labels, const ProbeOptions& opts);

/// Step-integrated area under the precision-recall curve; ties in score
/// form a single threshold. DegenerateTaskError when there are no positives.
[[nodiscard]] double average_precision(std::span<const double> scores, std::span<const bool> positive);

/// Mean of per-class average precision over classes present in `labels`.
[[nodiscard]] double macro_auprc(const Matrix& scores, std::span<const int> labels);

// ---------------------------------------------------------------- clustering

struct KMeansResult {
    std::vector<int> assignments;
    Matrix centroids;                 // k x M
    std::vector<double> wcss_history; // after every assignment step
    std::size_t iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until the assignment is a
/// fixpoint or `max_iter`. ParameterError when N < k or k == 0.
[[nodiscard]] KMeansResult kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300);

/// Mean silhouette (Euclidean). Points in singleton clusters score 0, as
/// do points with a = b = 0. DegenerateTaskError with fewer than two
/// clusters or when every cluster is a singleton.
[[nodiscard]] double silhouette(const Matrix& X, std::span<const int> assignments);

/// Davies-Bouldin index. Coincident centroids yield +infinity and a warning.
/// DegenerateTaskError with fewer than two clusters.
[[nodiscard]] double davies_bouldin(const Matrix& X, std::span<const int> assignments);

// ---------------------------------------------------------------- turning points

/// Sum of squared differences between consecutive turning-point values of
/// one signal. Plateaus count once; extrema are strict and interior.
[[nodiscard]] double turning_point_score(std::span<const double> x);

/// Per window: turning_point_score of each feature over the unpadded
/// columns, summed across features.
[[nodiscard]] std::vector<double> turning_point_summary(const signals::WindowBatch& windows);
[[nodiscard]] std::vector<double> turning_point_summary(const signals::MultivariateSeries& s, std::size_t window);

// ---------------------------------------------------------------- regression

struct RegressionResult {
    double r2_train = 0.0;
    double r2 = 0.0;    // held-out
    double loss = 0.0;  // held-out mean squared error
    bool ridge = false; // least squares was rank deficient
};

inline constexpr double kRidgeLambda = 1e-6;

/**
 * Least squares of y on [X, 1] over the first `split` rows, scored on the
 * rest. Falls back to ridge (kRidgeLambda) with a warning when the design
 * is rank deficient. ParameterError for N < 10; DegenerateTaskError when
 * the target (or its held-out part) has zero variance.
 */
[[nodiscard]] RegressionResult linear_regression_probe(const Matrix& X, std::span<const double> y,
                                                       double split = 0.7);

// ---------------------------------------------------------------- report

struct ReportRow {
    std::string model;
    std::size_t window = 0;
    std::optional<double> auprc;
    std::optional<double> accuracy;  // percent
    std::optional<double> silhouette;
    std::optional<double> dbi;
    std::optional<double> r2;
    std::optional<double> loss;
};

struct Report {
    std::vector<ReportRow> rows;

    [[nodiscard]] static const std::vector<std::string>& columns();
    /// Header plus one line per row; missing cells print NA.
    [[nodiscard]] std::string csv() const;
    /// Aligned plain-text table.
    [[nodiscard]] std::string table() const;
};

struct EvalOptions {
    ProbeOptions probe;
    std::size_t clusters = 4;
    double regression_split = 0.7;
    std::uint64_t seed = 0;
};

/**
 * One row per representation source. A DLG set with z_global adds
 * "dlg-global" (z_g as probe input) and "dlg-zg-labels" (Z_l probed
 * against k-means clusters of z_g). `labels` are per timestep. Cells
 * whose metric fails print NA.
 */
[[nodiscard]] Report evaluate_all(const std::vector<RepresentationSet>& reps,
                                  const signals::MultivariateSeries& series, const std::vector<int>& labels,
                                  const EvalOptions& opts);

}  // namespace mlab::eval
