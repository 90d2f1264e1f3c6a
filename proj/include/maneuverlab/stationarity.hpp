#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "maneuverlab/matrix.hpp"

namespace mlab::stationarity {

/// Ordinary least squares fit.
struct OlsResult {
    std::vector<double> coefficients;
    std::vector<double> std_errors;
    double rss = 0.0;
    double sigma2 = 0.0;  // RSS / (n - k)
    double aic = 0.0;     // -2 llf + 2k, Gaussian log-likelihood with sigma^2 = RSS/n
    std::size_t n = 0;
    std::size_t k = 0;
};

/**
 * Least squares via Householder QR of the n x k design.
 *
 * Standard errors come from diag(sigma2 * (X'X)^-1) with
 * (X'X)^-1 = R^-1 R^-T. Throws SingularityError when X is rank deficient
 * (a pivot of R falls below 1e-10 times the largest column norm) and
 * DimensionError unless n > k.
 */
[[nodiscard]] OlsResult ols(const Matrix& X, std::span<const double> y);

/// Augmented Dickey-Fuller result (constant, no trend).
struct AdfResult {
    double statistic = 0.0;   // t-ratio of the lagged level
    double p_value = 1.0;
    std::size_t lags_used = 0;
    std::size_t n_obs = 0;    // rows in the final regression
    std::array<double, 3> critical_values{};  // 1%, 5%, 10%
};

/**
 * ADF unit-root test with a constant term.
 *
 * Regression: dx_t = c + g*x_{t-1} + sum_{i=1..p} phi_i dx_{t-i} + e_t.
 *
 * When `lags` is given it is used directly. Otherwise p is chosen by AIC
 * over 0..max_lags on a common sample trimmed by max_lags; max_lags
 * defaults to ceil(12 (n/100)^(1/4)) capped so the regression stays
 * estimable. The final regression is re-fit on the full sample for the
 * chosen p.
 *
 * Throws SampleSizeError for n < 15 and DegenerateRegressionError for a
 * constant series or a singular design.
 */
[[nodiscard]] AdfResult adf_test(std::span<const double> x,
                                 std::optional<std::size_t> max_lags = std::nullopt,
                                 std::optional<std::size_t> lags = std::nullopt);

/// MacKinnon (1994) approximate p-value for the constant-only ADF t-statistic.
[[nodiscard]] double mackinnon_pvalue(double statistic);

/// MacKinnon (2010) finite-sample critical values (1%, 5%, 10%), constant case.
[[nodiscard]] std::array<double, 3> mackinnon_critical_values(std::size_t n_obs);

/// Standard normal CDF.
[[nodiscard]] double normal_cdf(double x);

}  // namespace mlab::stationarity
