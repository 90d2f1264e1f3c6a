#include "maneuverlab/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "maneuverlab/error.hpp"

namespace mlab::stationarity {

namespace {

// MacKinnon (1994), "Approximate asymptotic distribution functions for
// unit-root and cointegration tests", JBES 12(2). Constant-only case, one
// unit root. p = Phi(poly(stat)) with ascending-order coefficients; the
// small-p branch applies at or below tau_star.
constexpr double kTauMax = 2.74;
constexpr double kTauMin = -18.83;
constexpr double kTauStar = -1.61;
constexpr std::array<double, 3> kSmallP{2.1659, 1.4412, 3.8269e-2};
constexpr std::array<double, 4> kLargeP{1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2};

// MacKinnon (2010), "Critical values for cointegration tests", Queen's
// Economics Department WP 1227, table 2, constant case, N = 1.
constexpr std::array<std::array<double, 4>, 3> kTau2010{{
    {-3.43035, -6.5393, -16.786, -79.433},
    {-2.86154, -2.8903, -4.234, -40.040},
    {-2.56677, -1.5384, -2.809, 0.0},
}};

template <std::size_t N>
double polyval_ascending(const std::array<double, N>& c, double x) {
    double r = 0.0;
    for (std::size_t i = N; i-- > 0;) {
        r = r * x + c[i];
    }
    return r;
}

// Design for the constant-only ADF regression with p lagged differences,
// using rows whose dependent index runs over [first, n-2] of dx.
// Columns: level, dx lags 1..p, constant.
struct AdfDesign {
    Matrix X;
    std::vector<double> y;
};

AdfDesign build_design(std::span<const double> x, const std::vector<double>& dx, std::size_t p,
                       std::size_t first) {
    const std::size_t rows = dx.size() - first;
    AdfDesign d{Matrix(rows, p + 2), std::vector<double>(rows)};
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t i = first + r;
        d.y[r] = dx[i];
        d.X(r, 0) = x[i];
        for (std::size_t j = 1; j <= p; ++j) {
            d.X(r, j) = dx[i - j];
        }
        d.X(r, p + 1) = 1.0;
    }
    return d;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// ---------------------------------------------------------------- OLS

OlsResult ols(const Matrix& X, std::span<const double> y) {
    const std::size_t n = X.rows, k = X.cols;
    if (y.size() != n) {
        throw DimensionError("ols: response length differs from design rows");
    }
    if (k == 0 || n <= k) {
        throw DimensionError("ols: need n > k >= 1");
    }

    std::vector<double> col_norm(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            col_norm[j] += X(i, j) * X(i, j);
        }
        col_norm[j] = std::sqrt(col_norm[j]);
    }

    // Householder QR in place; qty accumulates Q^T y.
    Matrix A = X;
    std::vector<double> qty(y.begin(), y.end());
    std::vector<double> v(n);
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) {
            norm += A(i, j) * A(i, j);
        }
        norm = std::sqrt(norm);
        if (norm <= 1e-10 * col_norm[j] || col_norm[j] == 0.0) {
            throw SingularityError("ols: design matrix is rank deficient (column " +
                                   std::to_string(j) + ")");
        }
        const double alpha = A(j, j) > 0 ? -norm : norm;
        for (std::size_t i = j; i < n; ++i) {
            v[i] = A(i, j);
        }
        v[j] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = j; i < n; ++i) {
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 > 0.0) {
            for (std::size_t c = j; c < k; ++c) {
                double dot = 0.0;
                for (std::size_t i = j; i < n; ++i) {
                    dot += v[i] * A(i, c);
                }
                const double f = 2.0 * dot / vnorm2;
                for (std::size_t i = j; i < n; ++i) {
                    A(i, c) -= f * v[i];
                }
            }
            double dot = 0.0;
            for (std::size_t i = j; i < n; ++i) {
                dot += v[i] * qty[i];
            }
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = j; i < n; ++i) {
                qty[i] -= f * v[i];
            }
        }
        if (std::abs(A(j, j)) <= 1e-10 * col_norm[j]) {
            throw SingularityError("ols: design matrix is rank deficient (column " +
                                   std::to_string(j) + ")");
        }
    }

    OlsResult res;
    res.n = n;
    res.k = k;
    res.coefficients.assign(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
        double s = qty[i];
        for (std::size_t j = i + 1; j < k; ++j) {
            s -= A(i, j) * res.coefficients[j];
        }
        res.coefficients[i] = s / A(i, i);
    }

    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            fit += X(i, j) * res.coefficients[j];
        }
        const double r = y[i] - fit;
        res.rss += r * r;
    }
    res.sigma2 = res.rss / static_cast<double>(n - k);
    const double nd = static_cast<double>(n);
    const double llf = -nd / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(res.rss / nd) + 1.0);
    res.aic = -2.0 * llf + 2.0 * static_cast<double>(k);

    // R^-1 (upper triangular), then diag(R^-1 R^-T).
    Matrix Rinv(k, k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        Rinv(c, c) = 1.0 / A(c, c);
        for (std::size_t i = c; i-- > 0;) {
            double s = 0.0;
            for (std::size_t j = i + 1; j <= c; ++j) {
                s += A(i, j) * Rinv(j, c);
            }
            Rinv(i, c) = -s / A(i, i);
        }
    }
    res.std_errors.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double d = 0.0;
        for (std::size_t j = i; j < k; ++j) {
            d += Rinv(i, j) * Rinv(i, j);
        }
        res.std_errors[i] = std::sqrt(res.sigma2 * d);
    }
    return res;
}

// ---------------------------------------------------------------- ADF

double mackinnon_pvalue(double statistic) {
    if (statistic > kTauMax) {
        return 1.0;
    }
    if (statistic < kTauMin) {
        return 0.0;
    }
    const double z = statistic <= kTauStar ? polyval_ascending(kSmallP, statistic)
                                           : polyval_ascending(kLargeP, statistic);
    return normal_cdf(z);
}

std::array<double, 3> mackinnon_critical_values(std::size_t n_obs) {
    std::array<double, 3> out{};
    const double inv = 1.0 / static_cast<double>(n_obs);
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = polyval_ascending(kTau2010[i], inv);
    }
    return out;
}

AdfResult adf_test(std::span<const double> x, std::optional<std::size_t> max_lags,
                   std::optional<std::size_t> lags) {
    const std::size_t n = x.size();
    if (n < 15) {
        throw SampleSizeError("adf_test: need at least 15 observations, got " + std::to_string(n));
    }
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mn == *mx) {
        throw DegenerateRegressionError("adf_test: series is constant");
    }

    std::vector<double> dx(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dx[i] = x[i + 1] - x[i];
    }

    // Largest lag keeping the regression estimable (constant case).
    const long cap_signed = static_cast<long>((n - 1) / 2) - 1 - 1;
    const std::size_t cap = cap_signed > 0 ? static_cast<std::size_t>(cap_signed) : 0;

    std::size_t p = 0;
    if (lags) {
        p = *lags;
        if (p > cap) {
            throw SampleSizeError("adf_test: too many lags for sample size");
        }
    } else {
        std::size_t ml = 0;
        if (max_lags) {
            ml = std::min(*max_lags, cap);
        } else {
            ml = static_cast<std::size_t>(std::ceil(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
            ml = std::min(ml, cap);
        }
        // AIC over a common sample trimmed by ml.
        const auto full = build_design(x, dx, ml, ml);
        const double nobs = static_cast<double>(full.y.size());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t lag = 0; lag <= ml; ++lag) {
            Matrix Xl(full.X.rows, lag + 2);
            for (std::size_t r = 0; r < full.X.rows; ++r) {
                for (std::size_t c = 0; c <= lag; ++c) {
                    Xl(r, c) = full.X(r, c);
                }
                Xl(r, lag + 1) = 1.0;
            }
            OlsResult fit;
            try {
                fit = ols(Xl, full.y);
            } catch (const SingularityError& e) {
                throw DegenerateRegressionError(std::string("adf_test: ") + e.what());
            }
            const double sigma2 = fit.rss / nobs;
            const double llf = -nobs / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(sigma2) + 1.0);
            const double crit = -2.0 * llf + 2.0 * static_cast<double>(lag);
            if (crit < best) {
                best = crit;
                p = lag;
            }
        }
    }

    const auto design = build_design(x, dx, p, p);
    OlsResult fit;
    try {
        fit = ols(design.X, design.y);
    } catch (const SingularityError& e) {
        throw DegenerateRegressionError(std::string("adf_test: ") + e.what());
    }
    if (!(fit.std_errors[0] > 0.0)) {
        throw DegenerateRegressionError("adf_test: zero standard error (perfect fit)");
    }

    AdfResult res;
    res.statistic = fit.coefficients[0] / fit.std_errors[0];
    res.p_value = mackinnon_pvalue(res.statistic);
    res.lags_used = p;
    res.n_obs = design.y.size();
    res.critical_values = mackinnon_critical_values(res.n_obs);
    return res;
}

}  // namespace mlab::stationarity
