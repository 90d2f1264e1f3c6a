#include "maneuverlab/tnc.hpp"

#include <algorithm>
#include <cmath>

#include "maneuverlab/error.hpp"
#include "maneuverlab/stationarity.hpp"

namespace mlab::tnc {

namespace {

signals::MultivariateSeries columns(const signals::MultivariateSeries& s, std::size_t begin, std::size_t end) {
    signals::MultivariateSeries out;
    const std::size_t F = s.features();
    out.values = Matrix(F, end - begin);
    const Matrix mask = s.observed_mask();
    out.mask = Matrix(F, end - begin);
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t c = begin; c < end; ++c) {
            out.values(f, c - begin) = s.values(f, c);
            (*out.mask)(f, c - begin) = mask(f, c);
        }
    }
    return out;
}

signals::MultivariateSeries wrap(const Matrix& values) {
    signals::MultivariateSeries s;
    s.values = values;
    return s;
}

WindowTriple triple(const signals::WindowBatch& b, const Tuple& t) {
    return {nets::to_tensor(b.windows[t.anchor]), nets::to_tensor(b.windows[t.positive]),
            nets::to_tensor(b.windows[t.negative])};
}

}  // namespace

// ---------------------------------------------------------------- sampler

NeighborhoodSampler::NeighborhoodSampler(const Matrix& values, std::size_t window, double adf_threshold,
                                         std::size_t cap, std::uint64_t seed)
    : NeighborhoodSampler(wrap(values), window, adf_threshold, cap, seed) {}

NeighborhoodSampler::NeighborhoodSampler(const signals::MultivariateSeries& series, std::size_t window,
                                         double adf_threshold, std::size_t cap, std::uint64_t seed)
    : values_(series.values),
      batch_(signals::make_windows(series, window)),
      threshold_(adf_threshold),
      cap_(cap),
      rng_(seed, "tuples"),
      cache_(batch_.size()) {
    if (!(adf_threshold > 0.0 && adf_threshold < 1.0)) {
        throw ParameterError("NeighborhoodSampler: adf threshold must be in (0, 1)");
    }
}

bool NeighborhoodSampler::region_stationary(std::size_t lo, std::size_t hi) const {
    const std::size_t begin = batch_.start_indices[lo];
    const std::size_t end = batch_.start_indices[hi] + batch_.valid_lengths[hi];
    for (std::size_t f = 0; f < values_.rows; ++f) {
        std::vector<double> x(values_.data.begin() + static_cast<std::ptrdiff_t>(f * values_.cols + begin),
                              values_.data.begin() + static_cast<std::ptrdiff_t>(f * values_.cols + end));
        try {
            if (stationarity::adf_test(x).p_value > threshold_) {
                return false;
            }
        } catch (const Error&) {
            return false;
        }
    }
    return true;
}

Neighborhood NeighborhoodSampler::find_neighborhood(std::size_t t) {
    if (t >= batch_.size()) {
        throw ParameterError("find_neighborhood: anchor " + std::to_string(t) + " out of range [0, " +
                             std::to_string(batch_.size()) + ")");
    }
    if (cache_[t]) {
        return *cache_[t];
    }
    Neighborhood nb{t, t};
    const std::size_t last = batch_.size() - 1;
    bool left = t > 0 && cap_ > 0;
    bool right = t < last && cap_ > 0;
    while (left || right) {
        const std::size_t lo = left ? nb.lo - 1 : nb.lo;
        const std::size_t hi = right ? nb.hi + 1 : nb.hi;
        if (region_stationary(lo, hi)) {
            nb = {lo, hi};
        } else if (left && right) {
            if (region_stationary(nb.lo - 1, nb.hi)) {
                --nb.lo;
            } else {
                left = false;
            }
            if (region_stationary(nb.lo, nb.hi + 1)) {
                ++nb.hi;
            } else {
                right = false;
            }
        } else {
            left = right = false;
        }
        left = left && nb.lo > 0 && t - nb.lo < cap_;
        right = right && nb.hi < last && nb.hi - t < cap_;
    }
    cache_[t] = nb;
    return nb;
}

Tuple NeighborhoodSampler::sample_tuple(std::size_t t) {
    const Neighborhood nb = find_neighborhood(t);
    const std::size_t outside = batch_.size() - nb.size();
    if (outside == 0) {
        throw SamplingError("sample_tuple: neighborhood of window " + std::to_string(t) +
                            " covers the whole series; no negative available");
    }
    Tuple tu{t, t, 0};
    if (nb.size() > 1) {
        std::size_t k = nb.lo + rng_.index(nb.size() - 1);
        tu.positive = k >= t ? k + 1 : k;
    }
    const std::size_t k = rng_.index(outside);
    tu.negative = k < nb.lo ? k : k + nb.size();
    return tu;
}

// ---------------------------------------------------------------- loss

double tnc_loss_value(std::span<const double> d_pos, std::span<const double> d_neg, double pu_weight) {
    if (d_pos.empty() || d_pos.size() != d_neg.size()) {
        throw ParameterError("tnc_loss_value: need equally many, non-zero, positive and negative scores");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < d_pos.size(); ++i) {
        const double p = std::clamp(d_pos[i], kClamp, 1.0 - kClamp);
        const double n = std::clamp(d_neg[i], kClamp, 1.0 - kClamp);
        acc += std::log(p) + pu_weight * std::log(n) + (1.0 - pu_weight) * std::log(1.0 - n);
    }
    return -acc / static_cast<double>(d_pos.size());
}

TncLossTerms tnc_loss(const nets::Encoder& enc, const nets::Discriminator& disc,
                      std::span<const WindowTriple> batch, double pu_weight) {
    if (batch.empty()) {
        throw ParameterError("tnc_loss: empty batch");
    }
    TncLossTerms out;
    std::vector<nd::Tensor> terms;
    terms.reserve(batch.size());
    for (const auto& tr : batch) {
        const auto za = enc.forward(tr.anchor);
        const auto dp = nd::clamp(disc(za, enc.forward(tr.positive)), kClamp, 1.0 - kClamp);
        const auto dn = nd::clamp(disc(za, enc.forward(tr.negative)), kClamp, 1.0 - kClamp);
        const auto pos = nd::log(dp);
        const auto neg = nd::add(nd::scale(nd::log(dn), pu_weight),
                                 nd::scale(nd::log(nd::add_scalar(nd::neg(dn), 1.0)), 1.0 - pu_weight));
        out.pos_term += pos.item();
        out.neg_term += neg.item();
        out.correct += (dp.item() > 0.5) + (dn.item() < 0.5);
        out.pairs += 2;
        terms.push_back(nd::reshape(nd::add(pos, neg), {1}));
    }
    const double b = static_cast<double>(batch.size());
    out.pos_term /= b;
    out.neg_term /= b;
    out.loss = nd::scale(nd::sum(nd::concat(terms)), -1.0 / b);
    return out;
}

// ---------------------------------------------------------------- training

nets::EncoderSpec tnc_encoder_spec(const TrainConfig& cfg, std::size_t features) {
    nets::EncoderSpec spec;
    spec.in_features = features;
    spec.window = cfg.window;
    spec.kernel = cfg.kernel_size;
    spec.widths = cfg.conv_widths;
    spec.out = cfg.repr_size;
    spec.validate();
    return spec;
}

TncModel train_tnc(const TrainConfig& cfg, const signals::MultivariateSeries& series) {
    cfg.validate();
    series.validate();
    const std::size_t T = series.length();
    const std::size_t total = T / cfg.window + (T % cfg.window ? 1 : 0);
    if (T < cfg.window || total < 2) {
        throw DataError("train_tnc: series must span at least two windows of " + std::to_string(cfg.window));
    }
    std::size_t n_train = static_cast<std::size_t>(std::floor(cfg.train_split * static_cast<double>(total)));
    n_train = std::clamp<std::size_t>(n_train, 1, total - 1);
    const std::size_t cut = n_train * cfg.window;

    NeighborhoodSampler train(columns(series, 0, cut), cfg.window, cfg.adf_threshold, cfg.neighborhood_cap,
                              derive_seed(cfg.seed, "tnc.train"));
    NeighborhoodSampler held(columns(series, cut, T), cfg.window, cfg.adf_threshold, cfg.neighborhood_cap,
                             derive_seed(cfg.seed, "tnc.heldout"));

    std::vector<WindowTriple> heldout;
    try {
        for (std::size_t t = 0; t < held.window_count(); ++t) {
            heldout.push_back(triple(held.windows(), held.sample_tuple(t)));
        }
    } catch (const SamplingError& e) {
        throw DataError(std::string("train_tnc: held-out split too small: ") + e.what());
    }

    Rng init(cfg.seed, "init");
    TncModel model{nets::Encoder(tnc_encoder_spec(cfg, series.features()), init),
                   nets::Discriminator({cfg.repr_size, cfg.disc_hidden}, init),
                   {}};
    ParameterSet params;
    model.encoder.register_params(params, "encoder");
    model.discriminator.register_params(params, "disc");
    Adam opt(params, AdamOptions{.lr = cfg.lr});

    Rng order_rng(cfg.seed, "tnc.order");
    std::vector<std::size_t> order(train.window_count());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (std::size_t pass = 0; pass < cfg.tuples_per_anchor; ++pass) {
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[order_rng.index(i)]);
            }
            for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
                std::vector<WindowTriple> batch;
                for (std::size_t i = b; i < std::min(order.size(), b + cfg.batch); ++i) {
                    try {
                        batch.push_back(triple(train.windows(), train.sample_tuple(order[i])));
                    } catch (const SamplingError& e) {
                        throw DataError(std::string("train_tnc: training split too small: ") + e.what());
                    }
                }
                auto terms = tnc_loss(model.encoder, model.discriminator, batch, cfg.pu_weight);
                opt.zero_grad();
                terms.loss.backward();
                opt.step();
                loss_sum += terms.loss.item() * static_cast<double>(batch.size());
            }
        }
        const auto eval = tnc_loss(model.encoder, model.discriminator, heldout, cfg.pu_weight);
        model.log.push_back({epoch, loss_sum / static_cast<double>(order.size() * cfg.tuples_per_anchor), eval.loss.item(),
                             static_cast<double>(eval.correct) / static_cast<double>(eval.pairs)});
    }
    return model;
}

// ---------------------------------------------------------------- checkpoints

Checkpoint tnc_checkpoint(const TncModel& model, const TrainConfig& cfg) {
    Checkpoint ck;
    ck.meta["kind"] = "tnc";
    nets::write_spec(ck.meta, "encoder", model.encoder.spec());
    ck.meta["disc.repr"] = std::to_string(model.discriminator.spec().repr);
    ck.meta["disc.hidden"] = std::to_string(model.discriminator.spec().hidden);
    write_config_meta(ck.meta, cfg);
    model.encoder.register_params(ck.params, "encoder");
    model.discriminator.register_params(ck.params, "disc");
    return ck;
}

nets::Encoder load_tnc_encoder(const Checkpoint& ckpt) {
    auto it = ckpt.meta.find("kind");
    if (it == ckpt.meta.end() || it->second != "tnc") {
        throw FormatError("checkpoint: not a TNC checkpoint");
    }
    Rng scratch(0, "load");
    nets::Encoder enc(nets::read_encoder_spec(ckpt.meta, "encoder"), scratch);
    ParameterSet target;
    enc.register_params(target, "encoder");
    assign_parameters(target, ckpt.params);
    return enc;
}

}  // namespace mlab::tnc
