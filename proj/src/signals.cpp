#include "maneuverlab/signals.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "maneuverlab/error.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/stationarity.hpp"

namespace mlab::signals {

Matrix MultivariateSeries::observed_mask() const {
    if (mask) {
        return *mask;
    }
    return Matrix(values.rows, values.cols, 1.0);
}

void MultivariateSeries::validate() const {
    if (mask && (mask->rows != values.rows || mask->cols != values.cols)) {
        throw DimensionError("series: mask shape differs from values shape");
    }
    if (labels && labels->size() != values.cols) {
        throw DimensionError("series: label count differs from series length");
    }
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

// Empty and NaN cells return nullopt.
std::optional<double> parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    if (cell.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("non-numeric value '" + cell + "' in column " + col, row);
    }
    if (std::isnan(v)) {
        return std::nullopt;
    }
    return v;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

MultivariateSeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty CSV file: " + path.string());
    }
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t F = kFeatureNames.size();
    std::vector<std::size_t> value_cols;
    std::vector<std::optional<std::size_t>> mask_cols;
    for (const auto& name : kFeatureNames) {
        auto c = column(name);
        if (!c) {
            throw FormatError("CSV missing required column '" + name + "'");
        }
        value_cols.push_back(*c);
        mask_cols.push_back(column("mask_" + name));
    }
    const auto state_col = column("state");

    std::vector<std::vector<double>> vals(F), masks(F);
    std::vector<int> labels;
    bool any_missing = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             row);
        }
        for (std::size_t f = 0; f < F; ++f) {
            const auto v = parse_cell(cells[value_cols[f]], row, kFeatureNames[f]);
            double observed = v ? 1.0 : 0.0;
            if (mask_cols[f]) {
                const auto m = parse_cell(cells[*mask_cols[f]], row, "mask_" + kFeatureNames[f]);
                if (!m || (*m != 0.0 && *m != 1.0)) {
                    throw ParseError("mask must be 0 or 1", row);
                }
                observed = v ? *m : 0.0;
            }
            any_missing = any_missing || observed == 0.0;
            vals[f].push_back(observed != 0.0 ? *v : 0.0);
            masks[f].push_back(observed);
        }
        if (state_col) {
            const auto v = parse_cell(cells[*state_col], row, "state");
            if (!v || *v != std::floor(*v) || *v < 0 || *v >= kStateCount) {
                throw ParseError("state must be an integer in [0, 3]", row);
            }
            labels.push_back(static_cast<int>(*v));
        }
    }

    const std::size_t T = vals[0].size();
    MultivariateSeries s;
    s.values = Matrix(F, T);
    Matrix mask(F, T);
    for (std::size_t f = 0; f < F; ++f) {
        std::copy(vals[f].begin(), vals[f].end(), s.values.row(f).begin());
        std::copy(masks[f].begin(), masks[f].end(), mask.row(f).begin());
    }
    const bool has_mask_cols = std::any_of(mask_cols.begin(), mask_cols.end(),
                                           [](const auto& c) { return c.has_value(); });
    if (has_mask_cols || any_missing) {
        s.mask = std::move(mask);
    }
    if (state_col) {
        s.labels = std::move(labels);
    }
    return s;
}

void write_csv(const std::filesystem::path& path, const MultivariateSeries& s) {
    s.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    const std::size_t F = s.features();
    for (std::size_t f = 0; f < F; ++f) {
        out << (f ? "," : "") << kFeatureNames.at(f);
    }
    if (s.mask) {
        for (std::size_t f = 0; f < F; ++f) {
            out << ",mask_" << kFeatureNames[f];
        }
    }
    if (s.labels) {
        out << ",state";
    }
    out << '\n';
    for (std::size_t t = 0; t < s.length(); ++t) {
        for (std::size_t f = 0; f < F; ++f) {
            out << (f ? "," : "") << fmt_double(s.values(f, t));
        }
        if (s.mask) {
            for (std::size_t f = 0; f < F; ++f) {
                out << ',' << ((*s.mask)(f, t) != 0.0 ? 1 : 0);
            }
        }
        if (s.labels) {
            out << ',' << (*s.labels)[t];
        }
        out << '\n';
    }
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

// ---------------------------------------------------------------- normalize / windows

MultivariateSeries normalize(const MultivariateSeries& s) {
    s.validate();
    MultivariateSeries out = s;
    for (std::size_t f = 0; f < s.features(); ++f) {
        double xmax = 0.0;
        for (double v : s.values.row(f)) {
            xmax = std::max(xmax, std::abs(v));
        }
        if (xmax == 0.0) {
            throw NormalizationError("feature " + std::to_string(f) + " is all zeros");
        }
        for (double& v : out.values.row(f)) {
            v /= xmax;
        }
    }
    return out;
}

WindowBatch make_windows(const MultivariateSeries& s, std::size_t window) {
    s.validate();
    if (window < 1) {
        throw ParameterError("make_windows: window size must be >= 1");
    }
    const std::size_t T = s.length();
    const std::size_t F = s.features();
    if (window > T) {
        throw ParameterError("make_windows: window size exceeds series length");
    }
    const Matrix mask = s.observed_mask();
    WindowBatch batch;
    batch.window_size = window;
    const std::size_t count = (T + window - 1) / window;
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * window;
        const std::size_t valid = std::min(window, T - start);
        Matrix win(F, window), m(F, window);
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t c = 0; c < valid; ++c) {
                win(f, c) = s.values(f, start + c);
                m(f, c) = mask(f, start + c);
            }
        }
        batch.windows.push_back(std::move(win));
        batch.masks.push_back(std::move(m));
        batch.start_indices.push_back(start);
        batch.valid_lengths.push_back(valid);
    }
    return batch;
}

Matrix reassemble(const WindowBatch& batch) {
    if (batch.windows.empty()) {
        return {};
    }
    const std::size_t F = batch.windows[0].rows;
    std::size_t T = 0;
    for (auto v : batch.valid_lengths) {
        T += v;
    }
    Matrix out(F, T);
    for (std::size_t w = 0; w < batch.size(); ++w) {
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t c = 0; c < batch.valid_lengths[w]; ++c) {
                out(f, batch.start_indices[w] + c) = batch.windows[w](f, c);
            }
        }
    }
    return out;
}

std::vector<int> window_labels(const std::vector<int>& labels, const WindowBatch& batch) {
    std::vector<int> out;
    out.reserve(batch.size());
    for (std::size_t w = 0; w < batch.size(); ++w) {
        std::array<std::size_t, kStateCount> counts{};
        for (std::size_t c = 0; c < batch.valid_lengths[w]; ++c) {
            const int l = labels.at(batch.start_indices[w] + c);
            ++counts.at(static_cast<std::size_t>(l));
        }
        out.push_back(static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
    }
    return out;
}

// ---------------------------------------------------------------- synthesis

Regime parse_regime(const std::string& name) {
    if (name == "ar1") return Regime::Ar1;
    if (name == "random_walk") return Regime::RandomWalk;
    if (name == "drifting_sine") return Regime::DriftingSine;
    throw ConfigError("unknown regime '" + name + "' (expected ar1, random_walk, drifting_sine)");
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Ar1: return "ar1";
        case Regime::RandomWalk: return "random_walk";
        case Regime::DriftingSine: return "drifting_sine";
    }
    return "?";
}

bool is_stationary(Regime r) { return r == Regime::Ar1; }

std::size_t SynthConfig::length() const {
    std::size_t T = 0;
    for (const auto& s : segments) {
        T += s.length;
    }
    return T;
}

void SynthConfig::validate() const {
    if (segments.empty() || length() == 0) {
        throw ConfigError("synth: at least one non-empty segment required");
    }
    if (!(std::abs(phi) < 1.0)) {
        throw ConfigError("synth: AR(1) coefficient must satisfy |phi| < 1");
    }
    if (!(noise_scale > 0.0)) {
        throw ConfigError("synth: noise scale must be positive");
    }
    if (!(walk_step > 0.0)) {
        throw ConfigError("synth: random-walk step must be positive");
    }
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
        throw ConfigError("synth: missing rate must be in [0, 1)");
    }
}

SynthConfig four_state_preset(std::uint64_t seed) {
    const SegmentSpec states[4] = {
        {125, Regime::Ar1, Regime::Ar1},
        {125, Regime::RandomWalk, Regime::Ar1},
        {125, Regime::Ar1, Regime::RandomWalk},
        {125, Regime::RandomWalk, Regime::RandomWalk},
    };
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.walk_step = 0.05;
    for (int rep = 0; rep < 4; ++rep) {
        for (const auto& s : states) {
            cfg.segments.push_back(s);
        }
    }
    return cfg;
}

SynthConfig two_state_preset(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    for (int rep = 0; rep < 4; ++rep) {
        cfg.segments.push_back({250, Regime::Ar1, Regime::Ar1});
        cfg.segments.push_back({250, Regime::RandomWalk, Regime::RandomWalk});
    }
    return cfg;
}

SynthConfig preset(const std::string& name, std::uint64_t seed) {
    if (name == "four-state") return four_state_preset(seed);
    if (name == "two-state") return two_state_preset(seed);
    throw ConfigError("unknown preset '" + name + "' (expected four-state, two-state)");
}

MultivariateSeries synthesize(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t T = cfg.length();
    const std::size_t F = kFeatureNames.size();
    Rng noise(cfg.seed, "synth.noise");
    Rng missing(cfg.seed, "synth.missing");

    MultivariateSeries s;
    s.values = Matrix(F, T);
    std::vector<int> labels(T);
    std::vector<double> level(F, 0.0);
    std::size_t t = 0;
    for (const auto& seg : cfg.segments) {
        const Regime regimes[2] = {seg.lat, seg.lon};
        const int state = state_from_stationarity(is_stationary(seg.lat), is_stationary(seg.lon));
        // Each segment starts from rest so walks do not accumulate across segments.
        std::fill(level.begin(), level.end(), 0.0);
        for (std::size_t i = 0; i < seg.length; ++i, ++t) {
            for (std::size_t f = 0; f < F; ++f) {
                const double e = cfg.noise_scale * noise.normal();
                double& x = level[f];
                switch (regimes[f]) {
                    case Regime::Ar1:
                        x = cfg.phi * x + e;
                        s.values(f, t) = x;
                        break;
                    case Regime::RandomWalk:
                        x += cfg.walk_step * e;
                        s.values(f, t) = x;
                        break;
                    case Regime::DriftingSine: {
                        // level carries the drift; the sinusoid rides on top.
                        x += 0.05 * cfg.noise_scale;
                        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / 50.0;
                        s.values(f, t) = x + 3.0 * cfg.noise_scale * std::sin(phase) + 0.3 * e;
                        break;
                    }
                }
            }
            labels[t] = state;
        }
    }

    s = normalize(s);
    Matrix mask(F, T, 1.0);
    if (cfg.missing_rate > 0.0) {
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t i = 0; i < T; ++i) {
                if (missing.uniform() < cfg.missing_rate) {
                    mask(f, i) = 0.0;
                    s.values(f, i) = 0.0;
                }
            }
        }
    }
    s.mask = std::move(mask);
    s.labels = std::move(labels);
    return s;
}

// ---------------------------------------------------------------- labeling

int state_from_stationarity(bool lat_stationary, bool lon_stationary) {
    if (lat_stationary && lon_stationary) return static_cast<int>(State::BothStationary);
    if (lon_stationary) return static_cast<int>(State::OnlyLonStationary);
    if (lat_stationary) return static_cast<int>(State::OnlyLatStationary);
    return static_cast<int>(State::NeitherStationary);
}

MultivariateSeries label_states(const MultivariateSeries& s, std::size_t window, double p_thresh,
                                StationarityConvention convention) {
    s.validate();
    const std::size_t T = s.length();
    if (window < 1 || T < window) {
        throw ParameterError("label_states: series shorter than labeling window");
    }
    // Block boundaries: full blocks of `window`; a remainder of at least
    // half a window stands alone, a shorter one joins the last block.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    const std::size_t full = T / window;
    for (std::size_t b = 0; b < full; ++b) {
        blocks.emplace_back(b * window, (b + 1) * window);
    }
    const std::size_t rem = T - full * window;
    if (rem > 0) {
        if (2 * rem >= window) {
            blocks.emplace_back(full * window, T);
        } else {
            blocks.back().second = T;
        }
    }

    auto stationary = [&](std::size_t f, std::size_t lo, std::size_t hi) {
        const auto row = s.values.row(f).subspan(lo, hi - lo);
        double p = 1.0;
        try {
            p = stationarity::adf_test(row).p_value;
        } catch (const DegenerateRegressionError&) {
            p = 1.0;  // flat block: no evidence against a unit root
        } catch (const SingularityError&) {
            p = 1.0;
        }
        return convention == StationarityConvention::RejectUnitRoot ? p <= p_thresh : p > p_thresh;
    };

    MultivariateSeries out = s;
    std::vector<int> labels(T);
    for (const auto& [lo, hi] : blocks) {
        const int state = state_from_stationarity(stationary(kLat, lo, hi), stationary(kLon, lo, hi));
        std::fill(labels.begin() + static_cast<std::ptrdiff_t>(lo),
                  labels.begin() + static_cast<std::ptrdiff_t>(hi), state);
    }
    out.labels = std::move(labels);
    return out;
}

}  // namespace mlab::signals
