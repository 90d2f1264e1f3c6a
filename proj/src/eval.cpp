#include "maneuverlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "maneuverlab/error.hpp"
#include "maneuverlab/log.hpp"
#include "maneuverlab/nets.hpp"
#include "maneuverlab/optim.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/stationarity.hpp"

namespace mlab::eval {

namespace {

std::size_t split_point(std::size_t n, double split) {
    const auto k = static_cast<std::size_t>(std::floor(split * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n - 1);
}

double sq_dist(const Matrix& A, std::size_t i, const Matrix& B, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < A.cols; ++c) {
        const double d = A(i, c) - B(j, c);
        s += d * d;
    }
    return s;
}

double dist(const Matrix& A, std::size_t i, const Matrix& B, std::size_t j) { return std::sqrt(sq_dist(A, i, B, j)); }

// Maps arbitrary cluster ids to 0..K-1 in ascending id order.
std::vector<std::size_t> compact_labels(std::span<const int> a, std::size_t& K) {
    std::map<int, std::size_t> ids;
    for (int v : a) {
        ids.emplace(v, 0);
    }
    std::size_t next = 0;
    for (auto& [_, idx] : ids) {
        idx = next++;
    }
    K = next;
    std::vector<std::size_t> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = ids[a[i]];
    }
    return out;
}

Matrix rows_of(const Matrix& X, std::size_t begin, std::size_t end) {
    Matrix out(end - begin, X.cols);
    std::copy(X.data.begin() + static_cast<std::ptrdiff_t>(begin * X.cols),
              X.data.begin() + static_cast<std::ptrdiff_t>(end * X.cols), out.data.begin());
    return out;
}

}  // namespace

void RepresentationSet::validate() const {
    if (!starts.empty() && starts.size() != Z.rows) {
        throw DimensionError("RepresentationSet: start indices do not match row count");
    }
    if (z_global && z_global->rows != Z.rows) {
        throw DimensionError("RepresentationSet: z_global row count differs from Z");
    }
    for (double v : Z.data) {
        if (!std::isfinite(v)) {
            throw DataError("RepresentationSet: non-finite entry in Z");
        }
    }
    if (z_global) {
        for (double v : z_global->data) {
            if (!std::isfinite(v)) {
                throw DataError("RepresentationSet: non-finite entry in z_global");
            }
        }
    }
}

// ---------------------------------------------------------------- classification

double average_precision(std::span<const double> scores, std::span<const bool> positive) {
    if (scores.size() != positive.size()) {
        throw DimensionError("average_precision: scores and labels differ in length");
    }
    const auto total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
    if (total_pos == 0.0) {
        throw DegenerateTaskError("average_precision: no positive examples");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0, tp = 0.0, seen = 0.0, prev_recall = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            tp += positive[idx[j]] ? 1.0 : 0.0;
            seen += 1.0;
            ++j;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
        i = j;
    }
    return ap;
}

double macro_auprc(const Matrix& scores, std::span<const int> labels) {
    if (scores.rows != labels.size()) {
        throw DimensionError("macro_auprc: one label per score row required");
    }
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < scores.cols; ++c) {
        std::vector<double> s(scores.rows);
        std::unique_ptr<bool[]> pos(new bool[scores.rows]);
        bool any = false;
        for (std::size_t i = 0; i < scores.rows; ++i) {
            s[i] = scores(i, c);
            pos[i] = labels[i] == static_cast<int>(c);
            any = any || pos[i];
        }
        if (!any) {
            continue;
        }
        sum += average_precision(s, std::span<const bool>(pos.get(), scores.rows));
        ++used;
    }
    if (used == 0) {
        throw DegenerateTaskError("macro_auprc: no class has positive examples");
    }
    return sum / static_cast<double>(used);
}

ProbeResult linear_probe(const Matrix& X, const std::vector<int>& labels, const ProbeOptions& opts) {
    const std::size_t N = X.rows, M = X.cols;
    if (labels.size() != N) {
        throw DimensionError("linear_probe: one label per row required");
    }
    if (N < 2 || M == 0) {
        throw DegenerateTaskError("linear_probe: need at least two rows and one column");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= opts.classes) {
            throw ParameterError("linear_probe: label " + std::to_string(y) + " outside [0, " +
                                 std::to_string(opts.classes) + ")");
        }
    }
    const std::size_t n_train = split_point(N, opts.split);
    if (std::set<int>(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_train)).size() < 2) {
        throw DegenerateTaskError("linear_probe: training split holds a single class");
    }

    std::vector<double> mu(M, 0.0), sd(M, 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t c = 0; c < M; ++c) {
            mu[c] += X(i, c);
        }
    }
    for (auto& m : mu) {
        m /= static_cast<double>(n_train);
    }
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t c = 0; c < M; ++c) {
            sd[c] += (X(i, c) - mu[c]) * (X(i, c) - mu[c]);
        }
    }
    for (auto& s : sd) {
        s = std::sqrt(s / static_cast<double>(n_train));
        if (!(s > 0.0)) {
            s = 1.0;
        }
    }
    std::vector<nd::Tensor> inputs(N);
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> v(M);
        for (std::size_t c = 0; c < M; ++c) {
            v[c] = (X(i, c) - mu[c]) / sd[c];
        }
        inputs[i] = nd::Tensor::from({M}, std::move(v));
    }

    Rng init(opts.seed, "probe.init");
    Rng order_rng(opts.seed, "probe.order");
    Rng drop(opts.seed, "probe.dropout");
    nets::ClassifierHead head(M, opts.classes, opts.dropout, init);
    ParameterSet params;
    head.register_params(params, "probe");
    Adam opt(params, AdamOptions{.lr = opts.lr});

    auto cross_entropy = [](const nd::Tensor& logits, int y) {
        const auto d = logits.data();
        const double m = *std::max_element(d.begin(), d.end());
        const auto shifted = nd::add_scalar(logits, -m);
        const auto lse = nd::log(nd::sum(nd::exp(shifted)));
        return nd::sub(lse, nd::reshape(nd::slice(shifted, static_cast<std::size_t>(y), 1), {}));
    };

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, opts.batch);
    for (std::size_t e = 0; e < opts.epochs; ++e) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[order_rng.index(i)]);
        }
        for (std::size_t b = 0; b < order.size(); b += batch) {
            const std::size_t end = std::min(order.size(), b + batch);
            std::vector<nd::Tensor> losses;
            for (std::size_t i = b; i < end; ++i) {
                losses.push_back(nd::reshape(cross_entropy(head(inputs[order[i]], &drop), labels[order[i]]), {1}));
            }
            const auto loss = nd::mean(nd::concat(losses));
            opt.zero_grad();
            loss.backward();
            opt.step();
        }
    }

    ProbeResult res;
    res.n_train = n_train;
    res.n_test = N - n_train;
    Matrix probs(res.n_test, opts.classes);
    std::vector<int> test_labels(labels.begin() + static_cast<std::ptrdiff_t>(n_train), labels.end());
    std::size_t correct = 0;
    std::vector<std::size_t> counts(opts.classes, 0);
    for (std::size_t i = n_train; i < N; ++i) {
        const auto out = head(inputs[i]);
        const auto logits = out.data();
        const double m = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double l : logits) {
            z += std::exp(l - m);
        }
        std::size_t best = 0;
        for (std::size_t c = 0; c < opts.classes; ++c) {
            probs(i - n_train, c) = std::exp(logits[c] - m) / z;
            if (logits[c] > logits[best]) {
                best = c;
            }
        }
        correct += static_cast<int>(best) == labels[i];
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(res.n_test);
    res.majority_baseline =
        static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(res.n_test);
    res.auprc = macro_auprc(probs, test_labels);
    return res;
}

// ---------------------------------------------------------------- clustering

KMeansResult kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
    const std::size_t N = X.rows;
    if (k == 0 || N < k) {
        throw ParameterError("kmeans: need 1 <= k <= N (k = " + std::to_string(k) + ", N = " + std::to_string(N) +
                             ")");
    }
    Rng rng(seed, "kmeans");
    KMeansResult res;
    res.centroids = Matrix(k, X.cols);
    auto set_centroid = [&](std::size_t c, std::size_t row) {
        for (std::size_t j = 0; j < X.cols; ++j) {
            res.centroids(c, j) = X(row, j);
        }
    };

    set_centroid(0, rng.index(N));
    std::vector<double> d2(N, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            d2[i] = std::min(d2[i], sq_dist(X, i, res.centroids, c - 1));
            total += d2[i];
        }
        std::size_t pick = N - 1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            while (d2[pick] == 0.0) {  // rounding pushed the target past the end
                --pick;
            }
        } else {
            pick = rng.index(N);
        }
        set_centroid(c, pick);
    }

    res.assignments.assign(N, -1);
    for (std::size_t it = 0; it < max_iter; ++it) {
        bool changed = false;
        double wcss = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            std::size_t best = 0;
            double bd = sq_dist(X, i, res.centroids, 0);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(X, i, res.centroids, c);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            wcss += bd;
            if (res.assignments[i] != static_cast<int>(best)) {
                res.assignments[i] = static_cast<int>(best);
                changed = true;
            }
        }
        res.wcss_history.push_back(wcss);
        res.iterations = it + 1;
        if (!changed) {
            break;
        }
        Matrix sums(k, X.cols, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < N; ++i) {
            const auto c = static_cast<std::size_t>(res.assignments[i]);
            ++counts[c];
            for (std::size_t j = 0; j < X.cols; ++j) {
                sums(c, j) += X(i, j);
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;  // empty cluster keeps its centroid
            }
            for (std::size_t j = 0; j < X.cols; ++j) {
                res.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
            }
        }
    }
    return res;
}

double silhouette(const Matrix& X, std::span<const int> assignments) {
    const std::size_t N = X.rows;
    if (assignments.size() != N) {
        throw DimensionError("silhouette: one assignment per row required");
    }
    std::size_t K = 0;
    const auto lab = compact_labels(assignments, K);
    if (K < 2) {
        throw DegenerateTaskError("silhouette: need at least two clusters");
    }
    std::vector<std::size_t> size(K, 0);
    for (auto l : lab) {
        ++size[l];
    }
    if (K == N) {
        throw DegenerateTaskError("silhouette: every cluster is a singleton");
    }
    double total = 0.0;
    std::vector<double> sums(K);
    for (std::size_t i = 0; i < N; ++i) {
        if (size[lab[i]] == 1) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            if (j != i) {
                sums[lab[j]] += dist(X, i, X, j);
            }
        }
        const double a = sums[lab[i]] / static_cast<double>(size[lab[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < K; ++c) {
            if (c != lab[i]) {
                b = std::min(b, sums[c] / static_cast<double>(size[c]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(N);
}

double davies_bouldin(const Matrix& X, std::span<const int> assignments) {
    const std::size_t N = X.rows;
    if (assignments.size() != N) {
        throw DimensionError("davies_bouldin: one assignment per row required");
    }
    std::size_t K = 0;
    const auto lab = compact_labels(assignments, K);
    if (K < 2) {
        throw DegenerateTaskError("davies_bouldin: need at least two clusters");
    }
    Matrix cent(K, X.cols, 0.0);
    std::vector<std::size_t> size(K, 0);
    for (std::size_t i = 0; i < N; ++i) {
        ++size[lab[i]];
        for (std::size_t j = 0; j < X.cols; ++j) {
            cent(lab[i], j) += X(i, j);
        }
    }
    for (std::size_t c = 0; c < K; ++c) {
        for (std::size_t j = 0; j < X.cols; ++j) {
            cent(c, j) /= static_cast<double>(size[c]);
        }
    }
    std::vector<double> s(K, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        s[lab[i]] += dist(X, i, cent, lab[i]);
    }
    for (std::size_t c = 0; c < K; ++c) {
        s[c] /= static_cast<double>(size[c]);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < K; ++a) {
        double worst = 0.0;
        for (std::size_t b = 0; b < K; ++b) {
            if (a == b) {
                continue;
            }
            const double d = dist(cent, a, cent, b);
            if (d == 0.0) {
                warn("davies_bouldin: clusters " + std::to_string(a) + " and " + std::to_string(b) +
                     " share a centroid; index is infinite");
                return std::numeric_limits<double>::infinity();
            }
            worst = std::max(worst, (s[a] + s[b]) / d);
        }
        total += worst;
    }
    return total / static_cast<double>(K);
}

// ---------------------------------------------------------------- turning points

double turning_point_score(std::span<const double> x) {
    std::vector<double> v;
    for (double e : x) {
        if (v.empty() || e != v.back()) {
            v.push_back(e);
        }
    }
    std::vector<double> extrema;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const bool peak = v[i - 1] < v[i] && v[i] > v[i + 1];
        const bool valley = v[i - 1] > v[i] && v[i] < v[i + 1];
        if (peak || valley) {
            extrema.push_back(v[i]);
        }
    }
    double s = 0.0;
    for (std::size_t i = 1; i < extrema.size(); ++i) {
        const double d = extrema[i] - extrema[i - 1];
        s += d * d;
    }
    return s;
}

std::vector<double> turning_point_summary(const signals::WindowBatch& windows) {
    std::vector<double> out(windows.size(), 0.0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const Matrix& m = windows.windows[w];
        for (std::size_t f = 0; f < m.rows; ++f) {
            out[w] += turning_point_score(std::span<const double>(m.data.data() + f * m.cols, windows.valid_lengths[w]));
        }
    }
    return out;
}

std::vector<double> turning_point_summary(const signals::MultivariateSeries& s, std::size_t window) {
    return turning_point_summary(signals::make_windows(s, window));
}

// ---------------------------------------------------------------- regression

namespace {

std::vector<double> ridge_solve(const Matrix& X, std::span<const double> y, double lambda) {
    const std::size_t k = X.cols;
    Matrix A(k, k, 0.0);
    std::vector<double> b(k, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            b[p] += X(i, p) * y[i];
            for (std::size_t q = 0; q < k; ++q) {
                A(p, q) += X(i, p) * X(i, q);
            }
        }
    }
    for (std::size_t p = 0; p < k; ++p) {
        A(p, p) += lambda;
    }
    // Cholesky solve of the (positive definite) normal equations.
    Matrix L(k, k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double d = A(j, j);
        for (std::size_t q = 0; q < j; ++q) {
            d -= L(j, q) * L(j, q);
        }
        if (!(d > 0.0)) {
            throw NumericalError("ridge: normal equations not positive definite");
        }
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < k; ++i) {
            double s = A(i, j);
            for (std::size_t q = 0; q < j; ++q) {
                s -= L(i, q) * L(j, q);
            }
            L(i, j) = s / L(j, j);
        }
    }
    std::vector<double> z(k), beta(k);
    for (std::size_t i = 0; i < k; ++i) {
        double s = b[i];
        for (std::size_t q = 0; q < i; ++q) {
            s -= L(i, q) * z[q];
        }
        z[i] = s / L(i, i);
    }
    for (std::size_t i = k; i-- > 0;) {
        double s = z[i];
        for (std::size_t q = i + 1; q < k; ++q) {
            s -= L(q, i) * beta[q];
        }
        beta[i] = s / L(i, i);
    }
    return beta;
}

double r_squared(const Matrix& X, std::span<const double> y, const std::vector<double>& beta, double* mse) {
    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean /= static_cast<double>(y.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) {
            fit += X(i, j) * beta[j];
        }
        sse += (y[i] - fit) * (y[i] - fit);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    if (mse) {
        *mse = sse / static_cast<double>(y.size());
    }
    if (!(sst > 0.0)) {
        throw DegenerateTaskError("regression: target has zero variance on the scored rows");
    }
    return 1.0 - sse / sst;
}

}  // namespace

RegressionResult linear_regression_probe(const Matrix& X, std::span<const double> y, double split) {
    const std::size_t N = X.rows;
    if (y.size() != N) {
        throw DimensionError("linear_regression_probe: one target per row required");
    }
    if (N < 10) {
        throw ParameterError("linear_regression_probe: need at least 10 rows");
    }
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (*lo == *hi) {
        throw DegenerateTaskError("linear_regression_probe: target has zero variance");
    }
    Matrix D(N, X.cols + 1);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) {
            D(i, j) = X(i, j);
        }
        D(i, X.cols) = 1.0;
    }
    const std::size_t n_train = split_point(N, split);
    const Matrix Dtr = rows_of(D, 0, n_train), Dte = rows_of(D, n_train, N);
    const auto ytr = y.subspan(0, n_train), yte = y.subspan(n_train);

    RegressionResult res;
    std::vector<double> beta;
    try {
        beta = stationarity::ols(Dtr, ytr).coefficients;
    } catch (const SingularityError&) {
        res.ridge = true;
    } catch (const DimensionError&) {
        res.ridge = true;
    }
    if (res.ridge) {
        warn("linear_regression_probe: design is rank deficient; using ridge with lambda = 1e-6");
        beta = ridge_solve(Dtr, ytr, kRidgeLambda);
    }
    res.r2_train = r_squared(Dtr, ytr, beta, nullptr);
    res.r2 = r_squared(Dte, yte, beta, &res.loss);
    return res;
}

// ---------------------------------------------------------------- report

const std::vector<std::string>& Report::columns() {
    static const std::vector<std::string> cols{"Model", "W_t", "AUPRC", "Accuracy", "Silhouette", "DBI", "R2", "Loss"};
    return cols;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) {
        return "NA";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

std::vector<std::string> row_cells(const ReportRow& r) {
    return {r.model, std::to_string(r.window), cell(r.auprc), cell(r.accuracy), cell(r.silhouette),
            cell(r.dbi), cell(r.r2),           cell(r.loss)};
}

template <typename F>
std::optional<double> attempt(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        warn(what + ": " + e.what());
        return std::nullopt;
    }
}

void fill_probe(ReportRow& row, const Matrix& X, const std::vector<int>& labels, const ProbeOptions& po) {
    std::optional<ProbeResult> pr;
    try {
        pr = linear_probe(X, labels, po);
    } catch (const Error& e) {
        warn(row.model + " classification: " + e.what());
    }
    if (pr) {
        row.auprc = pr->auprc;
        row.accuracy = 100.0 * pr->accuracy;
    }
}

void fill_geometry(ReportRow& row, const Matrix& X, const std::vector<double>& x_man, const EvalOptions& opts) {
    std::optional<KMeansResult> km;
    try {
        km = kmeans(X, opts.clusters, opts.seed);
    } catch (const Error& e) {
        warn(row.model + " clustering: " + e.what());
    }
    if (km) {
        row.silhouette = attempt(row.model + " silhouette", [&] { return silhouette(X, km->assignments); });
        row.dbi = attempt(row.model + " DBI", [&] { return davies_bouldin(X, km->assignments); });
    }
    try {
        const auto rr = linear_regression_probe(X, x_man, opts.regression_split);
        row.r2 = rr.r2;
        row.loss = rr.loss;
    } catch (const Error& e) {
        warn(row.model + " regression: " + e.what());
    }
}

}  // namespace

std::string Report::csv() const {
    std::ostringstream os;
    const auto& cols = columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        os << (i ? "," : "") << cols[i];
    }
    os << '\n';
    for (const auto& r : rows) {
        const auto cells = row_cells(r);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            os << (i ? "," : "") << cells[i];
        }
        os << '\n';
    }
    return os.str();
}

std::string Report::table() const {
    std::vector<std::vector<std::string>> grid{columns()};
    for (const auto& r : rows) {
        grid.push_back(row_cells(r));
    }
    std::vector<std::size_t> width(columns().size(), 0);
    for (const auto& g : grid) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            width[i] = std::max(width[i], g[i].size());
        }
    }
    std::ostringstream os;
    for (const auto& g : grid) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            os << (i ? "  " : "") << g[i] << std::string(width[i] - g[i].size(), ' ');
        }
        os << '\n';
    }
    return os.str();
}

Report evaluate_all(const std::vector<RepresentationSet>& reps, const signals::MultivariateSeries& series,
                    const std::vector<int>& labels, const EvalOptions& opts) {
    Report report;
    for (const auto& rep : reps) {
        rep.validate();
        if (rep.window == 0) {
            throw ParameterError("evaluate_all: representation set has no window size");
        }
        const auto batch = signals::make_windows(series, rep.window);
        if (batch.size() != rep.Z.rows) {
            throw DimensionError("evaluate_all: " + rep.source + " has " + std::to_string(rep.Z.rows) +
                                 " rows but the series has " + std::to_string(batch.size()) + " windows");
        }
        const auto win_labels = signals::window_labels(labels, batch);
        const auto x_man = turning_point_summary(batch);

        ReportRow main{rep.source, rep.window, {}, {}, {}, {}, {}, {}};
        fill_probe(main, rep.Z, win_labels, opts.probe);
        fill_geometry(main, rep.Z, x_man, opts);
        report.rows.push_back(main);

        if (rep.z_global) {
            ReportRow global{rep.source + "-global", rep.window, {}, {}, {}, {}, {}, {}};
            fill_probe(global, *rep.z_global, win_labels, opts.probe);
            fill_geometry(global, *rep.z_global, x_man, opts);
            report.rows.push_back(global);

            ReportRow by_code{rep.source + "-zg-labels", rep.window, {}, {}, {}, {}, {}, {}};
            try {
                const auto km = kmeans(*rep.z_global, opts.clusters, opts.seed);
                ProbeOptions po = opts.probe;
                po.classes = opts.clusters;
                fill_probe(by_code, rep.Z, km.assignments, po);
            } catch (const Error& e) {
                warn(by_code.model + " clustering of z_g: " + e.what());
            }
            report.rows.push_back(by_code);
        }
    }
    return report;
}

}  // namespace mlab::eval
