#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <vector>

#include "maneuverlab/error.hpp"
#include "maneuverlab/eval.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/signals.hpp"

using namespace mlab;
using namespace mlab::eval;

namespace {

double dist(const Matrix& X, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < X.cols; ++c) s += (X(i, c) - X(j, c)) * (X(i, c) - X(j, c));
    return std::sqrt(s);
}

double naive_silhouette(const Matrix& X, const std::vector<int>& a) {
    const int k = *std::max_element(a.begin(), a.end()) + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        std::vector<double> sum(k, 0.0);
        std::vector<int> cnt(k, 0);
        for (std::size_t j = 0; j < X.rows; ++j) {
            if (j == i) continue;
            sum[a[j]] += dist(X, i, j);
            ++cnt[a[j]];
        }
        if (cnt[a[i]] == 0) continue;  // singleton scores 0
        const double in = sum[a[i]] / cnt[a[i]];
        double out = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c != a[i] && cnt[c] > 0) out = std::min(out, sum[c] / cnt[c]);
        }
        const double m = std::max(in, out);
        total += m > 0.0 ? (out - in) / m : 0.0;
    }
    return total / static_cast<double>(X.rows);
}

double naive_dbi(const Matrix& X, const std::vector<int>& a) {
    const int k = *std::max_element(a.begin(), a.end()) + 1;
    Matrix c(k, X.cols);
    std::vector<double> n(k, 0.0), s(k, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        n[a[i]] += 1.0;
        for (std::size_t d = 0; d < X.cols; ++d) c(a[i], d) += X(i, d);
    }
    for (int j = 0; j < k; ++j)
        for (std::size_t d = 0; d < X.cols; ++d) c(j, d) /= n[j];
    for (std::size_t i = 0; i < X.rows; ++i) {
        double e = 0.0;
        for (std::size_t d = 0; d < X.cols; ++d) e += (X(i, d) - c(a[i], d)) * (X(i, d) - c(a[i], d));
        s[a[i]] += std::sqrt(e) / n[a[i]];
    }
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        double worst = 0.0;
        for (int j = 0; j < k; ++j) {
            if (j != i) worst = std::max(worst, (s[i] + s[j]) / dist(c, i, j));
        }
        total += worst;
    }
    return total / k;
}

// n points around each of `centers`, with labels by blob.
Matrix blobs(Rng& rng, const std::vector<std::vector<double>>& centers, std::size_t n, double spread,
             std::vector<int>& labels) {
    Matrix X(centers.size() * n, centers[0].size());
    labels.clear();
    for (std::size_t b = 0; b < centers.size(); ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < X.cols; ++d) X(b * n + i, d) = centers[b][d] + spread * rng.normal();
            labels.push_back(static_cast<int>(b));
        }
    }
    return X;
}

}  // namespace

TEST_CASE("average precision oracles") {
    const std::vector<double> perfect{0.9, 0.8, 0.2, 0.1};
    const bool pos[] = {true, true, false, false};
    CHECK(average_precision(perfect, pos) == doctest::Approx(1.0));
    // Ranking pos, neg, pos: precision 1 at recall 1/2, 2/3 at recall 1.
    const std::vector<double> mixed{0.9, 0.5, 0.4};
    const bool mpos[] = {true, false, true};
    CHECK(average_precision(mixed, mpos) == doctest::Approx(0.5 * 1.0 + 0.5 * 2.0 / 3.0));
    // A constant scorer is one threshold: precision equals prevalence.
    const std::vector<double> flat(10, 0.3);
    bool fpos[10] = {true, false, false, true, false, false, false, false, true, false};
    CHECK(average_precision(flat, fpos) == doctest::Approx(0.3));
    const bool none[] = {false, false, false};
    CHECK_THROWS_AS((void)average_precision(mixed, none), DegenerateTaskError);
}

TEST_CASE("average precision of a random scorer is near prevalence") {
    Rng rng(1, "ap");
    double mean = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> s(2000);
        const auto p = std::make_unique<bool[]>(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = rng.uniform();
            p[i] = rng.uniform() < 0.2;
        }
        mean += average_precision(s, std::span<const bool>(p.get(), s.size()));
    }
    CHECK(mean / reps == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("macro AUPRC averages over present classes") {
    Matrix scores(4, 3, std::vector<double>{0.9, 0.1, 0.0, 0.1, 0.8, 0.1, 0.2, 0.7, 0.1, 0.7, 0.2, 0.1});
    const std::vector<int> labels{0, 1, 1, 0};
    // Class 2 is absent and skipped; classes 0 and 1 are ranked perfectly.
    CHECK(macro_auprc(scores, labels) == doctest::Approx(1.0));
}

TEST_CASE("linear probe on one-hot representations is perfect") {
    Rng rng(2, "probe");
    std::vector<int> labels(200);
    for (auto& l : labels) l = static_cast<int>(rng.index(4));
    Matrix X(200, 4);
    for (std::size_t i = 0; i < 200; ++i) X(i, labels[i]) = 1.0;
    const auto r = linear_probe(X, labels, ProbeOptions{.epochs = 60, .lr = 0.01});
    CHECK(r.accuracy == 1.0);
    CHECK(r.auprc == doctest::Approx(1.0));
    CHECK(r.n_train == 160);
    CHECK(r.n_test == 40);
}

TEST_CASE("linear probe on label-independent representations is near chance") {
    double acc = 0.0, ap = 0.0;
    const int reps = 5;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(static_cast<std::uint64_t>(rep), "probe-random");
        std::vector<int> labels(400);
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
        Matrix X(400, 6);
        for (auto& v : X.data) v = rng.normal();
        const auto r = linear_probe(X, labels, ProbeOptions{.epochs = 20, .seed = static_cast<std::uint64_t>(rep)});
        acc += r.accuracy;
        ap += r.auprc;
        CHECK(r.majority_baseline == doctest::Approx(0.25));
    }
    CHECK(std::abs(acc / reps - 0.25) < 0.1);
    CHECK(std::abs(ap / reps - 0.25) < 0.1);
}

TEST_CASE("linear probe errors and determinism") {
    Matrix X(50, 2);
    Rng rng(3, "x");
    for (auto& v : X.data) v = rng.normal();
    CHECK_THROWS_AS((void)linear_probe(X, std::vector<int>(50, 1), {}), DegenerateTaskError);
    std::vector<int> labels(50);
    for (std::size_t i = 0; i < 50; ++i) labels[i] = X(i, 0) > 0 ? 1 : 0;
    const auto a = linear_probe(X, labels, ProbeOptions{.epochs = 10, .seed = 4});
    const auto b = linear_probe(X, labels, ProbeOptions{.epochs = 10, .seed = 4});
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.auprc == b.auprc);
}

TEST_CASE("kmeans recovers well-separated blobs") {
    Rng rng(5, "km");
    std::vector<int> truth;
    const auto X = blobs(rng, {{0, 0}, {20, 0}, {0, 20}, {20, 20}}, 25, 0.5, truth);
    const auto r = kmeans(X, 4, 7);
    std::map<int, int> mapping;
    bool consistent = true;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto [it, inserted] = mapping.emplace(truth[i], r.assignments[i]);
        consistent = consistent && it->second == r.assignments[i];
    }
    CHECK(consistent);
    std::set<int> distinct;
    for (const auto& [t, c] : mapping) distinct.insert(c);
    CHECK(distinct.size() == 4);

    for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
        CHECK(r.wcss_history[i] <= r.wcss_history[i - 1] + 1e-9);
    }
    const auto again = kmeans(X, 4, 7);
    CHECK(again.assignments == r.assignments);
}

TEST_CASE("kmeans objective never increases on overlapping data") {
    Rng rng(6, "km2");
    Matrix X(150, 3);
    for (auto& v : X.data) v = rng.normal();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = kmeans(X, 5, seed);
        for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
            CHECK(r.wcss_history[i] <= r.wcss_history[i - 1] + 1e-9);
        }
    }
}

TEST_CASE("kmeans edge cases") {
    Matrix X(5, 1, std::vector<double>{1, 2, 3, 4, 5});
    const auto one = kmeans(X, 1, 1);
    CHECK(std::all_of(one.assignments.begin(), one.assignments.end(), [](int a) { return a == 0; }));
    Matrix dup(6, 1, std::vector<double>{1, 1, 1, 5, 5, 5});
    const auto d = kmeans(dup, 3, 2);
    CHECK(d.assignments[0] == d.assignments[1]);
    CHECK(d.assignments[1] == d.assignments[2]);
    CHECK(d.assignments[3] == d.assignments[4]);
    CHECK(d.assignments[4] == d.assignments[5]);
    CHECK_THROWS_AS((void)kmeans(X, 6, 1), ParameterError);
    CHECK_THROWS_AS((void)kmeans(X, 0, 1), ParameterError);
}

TEST_CASE("silhouette and DBI match naive references") {
    Rng rng(7, "clust");
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 20 + 36 * static_cast<std::size_t>(rep);
        Matrix X(n, 3);
        for (auto& v : X.data) v = rng.normal();
        std::vector<int> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<int>(i % 3);
        CHECK(std::abs(silhouette(X, a) - naive_silhouette(X, a)) < 1e-12);
        CHECK(std::abs(davies_bouldin(X, a) - naive_dbi(X, a)) < 1e-12);
    }
}

TEST_CASE("cluster quality on separated blobs") {
    Rng rng(8, "clust2");
    std::vector<int> labels;
    const auto X = blobs(rng, {{0, 0}, {50, 0}}, 10, 1.0, labels);
    CHECK(silhouette(X, labels) > 0.9);
    CHECK(davies_bouldin(X, labels) < 0.2);
    Matrix scaled = X;
    for (auto& v : scaled.data) v *= 7.5;
    CHECK(davies_bouldin(scaled, labels) == doctest::Approx(davies_bouldin(X, labels)).epsilon(1e-12));
}

TEST_CASE("cluster score degenerate cases") {
    Matrix same(4, 2, 1.0);
    const std::vector<int> two{0, 0, 1, 1};
    CHECK(silhouette(same, two) == 0.0);
    CHECK(std::isinf(davies_bouldin(same, two)));
    const std::vector<int> single{0, 0, 0, 0};
    CHECK_THROWS_AS((void)silhouette(same, single), DegenerateTaskError);
    CHECK_THROWS_AS((void)davies_bouldin(same, single), DegenerateTaskError);
    Matrix pts(2, 1, std::vector<double>{0, 1});
    CHECK_THROWS_AS((void)silhouette(pts, std::vector<int>{0, 1}), DegenerateTaskError);
}

TEST_CASE("turning point scores") {
    CHECK(turning_point_score(std::vector<double>{0, 1, 0, 2, 0}) == 5.0);
    CHECK(turning_point_score(std::vector<double>{1, 2, 3, 4}) == 0.0);
    CHECK(turning_point_score(std::vector<double>{2, 2, 2}) == 0.0);
    // Plateau peak counts once: extrema 3 and 1.
    CHECK(turning_point_score(std::vector<double>{0, 3, 3, 1, 2}) == 4.0);
    Rng rng(9, "tp");
    std::vector<double> x(50);
    for (auto& v : x) v = rng.normal();
    std::vector<double> shifted(x);
    for (auto& v : shifted) v += 3.25;
    CHECK(turning_point_score(shifted) == doctest::Approx(turning_point_score(x)).epsilon(1e-12));
}

TEST_CASE("turning point summary sums features per window") {
    signals::MultivariateSeries s;
    s.values = Matrix(2, 7, std::vector<double>{0, 1, 0, 2, 0, 5, 5, 0, 0, 1, 0, 0, 0, 0});
    const auto v = turning_point_summary(s, 5);
    REQUIRE(v.size() == 2);
    // Window 0: lat [0,1,0,2,0] -> 5; lon [0,0,1,0,0] -> single extremum -> 0.
    CHECK(v[0] == 5.0);
    CHECK(v[1] == 0.0);
}

TEST_CASE("regression probe") {
    Rng rng(10, "reg");
    Matrix X(100, 3);
    for (auto& v : X.data) v = rng.normal();
    std::vector<double> y(100), noise(100);
    for (std::size_t i = 0; i < 100; ++i) y[i] = 1.5 * X(i, 0) - 2.0 * X(i, 2) + 0.7;
    const auto exact = linear_regression_probe(X, y);
    CHECK(exact.r2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(exact.r2_train == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(exact.loss < 1e-20);
    CHECK(!exact.ridge);

    int nonpositive = 0;
    for (int rep = 0; rep < 20; ++rep) {
        for (auto& v : noise) v = rng.normal();
        nonpositive += linear_regression_probe(X, noise).r2 <= 0.0 ? 1 : 0;
    }
    CHECK(nonpositive >= 14);

    Matrix dup(100, 2);
    for (std::size_t i = 0; i < 100; ++i) dup(i, 0) = dup(i, 1) = X(i, 0);
    CHECK(linear_regression_probe(dup, y).ridge);
    CHECK_THROWS_AS((void)linear_regression_probe(X, std::vector<double>(100, 2.0)), DegenerateTaskError);
    CHECK_THROWS_AS((void)linear_regression_probe(Matrix(9, 1, 1.0), std::vector<double>(9, 1.0)), ParameterError);
}

TEST_CASE("report schema and determinism") {
    CHECK(Report::columns() == std::vector<std::string>{"Model", "W_t", "AUPRC", "Accuracy", "Silhouette", "DBI",
                                                        "R2", "Loss"});
    const auto series = signals::synthesize(signals::four_state_preset(2));
    const auto batch = signals::make_windows(series, 19);
    Rng rng(11, "reps");
    RepresentationSet tnc{Matrix(batch.size(), 4), std::nullopt, batch.start_indices, "tnc", 19};
    RepresentationSet dlg{Matrix(batch.size(), 4), Matrix(batch.size(), 2), batch.start_indices, "dlg", 19};
    for (auto& v : tnc.Z.data) v = rng.normal();
    for (auto& v : dlg.Z.data) v = rng.normal();
    for (auto& v : dlg.z_global->data) v = rng.normal();
    EvalOptions opts;
    opts.probe.epochs = 5;
    const auto a = evaluate_all({tnc, dlg}, series, *series.labels, opts);
    const auto b = evaluate_all({tnc, dlg}, series, *series.labels, opts);
    CHECK(a.csv() == b.csv());
    std::vector<std::string> models;
    for (const auto& row : a.rows) models.push_back(row.model);
    CHECK(std::find(models.begin(), models.end(), "tnc") != models.end());
    CHECK(std::find(models.begin(), models.end(), "dlg") != models.end());
    std::istringstream lines(a.csv());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "Model,W_t,AUPRC,Accuracy,Silhouette,DBI,R2,Loss");

    Report r;
    r.rows.push_back({"x", 19, std::nullopt, 50.0, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    CHECK(r.csv().find("NA") != std::string::npos);

    RepresentationSet bad = tnc;
    bad.Z(0, 0) = std::nan("");
    CHECK_THROWS_AS(bad.validate(), DataError);
}
