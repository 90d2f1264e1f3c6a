#include "maneuverlab/dlg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "maneuverlab/error.hpp"

namespace mlab::dlg {

namespace {

nets::Gaussian bounded(nets::Gaussian q) {
    q.logvar = nd::clamp(q.logvar, -kLogVarBound, kLogVarBound);
    return q;
}

nd::Tensor total_of(const std::vector<nd::Tensor>& scalars) {
    std::vector<nd::Tensor> flat;
    flat.reserve(scalars.size());
    for (const auto& s : scalars) {
        flat.push_back(nd::reshape(s, {1}));
    }
    return nd::sum(nd::concat(flat));
}

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double unhex(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw FormatError("checkpoint: bad number '" + s + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(item);
    }
    return out;
}

const std::string& meta_value(const std::map<std::string, std::string>& meta, const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) {
        throw FormatError("checkpoint: missing meta key " + key);
    }
    return it->second;
}

signals::WindowBatch subset(const signals::WindowBatch& b, std::size_t begin, std::size_t end) {
    signals::WindowBatch out;
    out.window_size = b.window_size;
    for (std::size_t i = begin; i < end; ++i) {
        out.windows.push_back(b.windows[i]);
        out.masks.push_back(b.masks[i]);
        out.start_indices.push_back(b.start_indices[i]);
        out.valid_lengths.push_back(b.valid_lengths[i]);
    }
    return out;
}

Matrix decode_mean(const DlgNetworks& nets, const Matrix& window) {
    const auto w = nets::to_tensor(window);
    const auto ql = nets.enc_local.posterior(w);
    const auto qg = nets.enc_global.posterior(w);
    return nets::to_matrix(nets.decoder(ql.mean.detach(), qg.mean.detach()));
}

}  // namespace

void DlgNetworks::register_params(ParameterSet& params) const {
    enc_local.register_params(params, "enc_l");
    enc_global.register_params(params, "enc_g");
    decoder.register_params(params, "dec");
}

// ---------------------------------------------------------------- objective

nd::Tensor counterfactual_reg(std::span<const nd::Tensor> z_local, std::span<const nd::Tensor> z_global,
                              const nets::Encoder& enc_global, const nets::Decoder& dec, Rng& pairs) {
    const std::size_t n = z_local.size();
    if (n < 2 || z_global.size() != n) {
        throw ParameterError("counterfactual_reg: need a batch of at least two matching codes");
    }
    std::vector<nd::Tensor> terms;
    terms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = pairs.index(n - 1);
        const std::size_t j = k >= i ? k + 1 : k;
        const auto swapped = dec(z_local[i], z_global[j]);
        const auto q = bounded(enc_global.posterior(swapped));
        const auto log_ratio = nd::sub(gaussian_log_density(z_global[i], q), gaussian_log_density(z_global[j], q));
        // log((1 + ratio) / 2): zero for equal codes, bounded below by -log 2.
        terms.push_back(nd::add_scalar(nd::softplus(log_ratio), -std::numbers::ln2));
    }
    return nd::scale(total_of(terms), 1.0 / static_cast<double>(n));
}

ElboTerms elbo_loss(const WindowSet& batch, const DlgNetworks& nets, double kl_weight, double reg_weight,
                    Rng& noise, Rng& pairs) {
    const std::size_t n = batch.windows.size();
    if (n == 0) {
        throw ParameterError("elbo_loss: empty batch");
    }
    if (batch.masks.size() != n) {
        throw DimensionError("elbo_loss: one mask per window required");
    }
    std::vector<nd::Tensor> z_local, z_global, sq, kl_g, means, logvars;
    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& w = batch.windows[i];
        const auto ql = bounded(nets.enc_local.posterior(w));
        const auto qg = bounded(nets.enc_global.posterior(w));
        z_local.push_back(reparameterize(ql, noise));
        z_global.push_back(reparameterize(qg, noise));
        const auto recon = nets.decoder(z_local.back(), z_global.back());
        sq.push_back(nd::sum(nd::mul(nd::square(nd::sub(recon, w)), batch.masks[i])));
        for (double m : batch.masks[i].data()) {
            observed += m;
        }
        kl_g.push_back(kl_gaussian_diag(qg.mean, qg.logvar));
        means.push_back(ql.mean);
        logvars.push_back(ql.logvar);
    }

    const auto mean_series = nd::stack_columns(means);   // M x n
    const auto logvar_series = nd::stack_columns(logvars);
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
        times[i] = static_cast<double>(i);
    }
    std::vector<nd::Tensor> kl_l;
    for (const auto& p : nets.priors) {
        const auto gram = factor_gram(gp_gram(p, times));
        kl_l.push_back(kl_gaussian_gp(nd::slice_rows(mean_series, p.first_dim, p.dims),
                                      nd::slice_rows(logvar_series, p.first_dim, p.dims), gram));
    }

    const double nb = static_cast<double>(n);
    const auto mse = nd::scale(total_of(sq), observed > 0.0 ? 1.0 / observed : 0.0);
    const auto kl_local = nd::scale(total_of(kl_l), 1.0 / nb);
    const auto kl_global = nd::scale(total_of(kl_g), 1.0 / nb);
    const auto l_reg = n >= 2 ? counterfactual_reg(z_local, z_global, nets.enc_global, nets.decoder, pairs)
                              : nd::Tensor::scalar(0.0);

    ElboTerms out;
    out.total = nd::add(nd::add(nd::scale(mse, 1.0 - kl_weight), nd::scale(nd::add(kl_local, kl_global), kl_weight)),
                        nd::scale(l_reg, reg_weight));
    out.mse = mse.item();
    out.kl_local = kl_local.item();
    out.kl_global = kl_global.item();
    out.l_reg = l_reg.item();
    return out;
}

// ---------------------------------------------------------------- training

DlgNetworks make_networks(const TrainConfig& cfg, std::size_t features, Rng& init) {
    nets::EncoderSpec local;
    local.in_features = features;
    local.window = cfg.window;
    local.kernel = cfg.kernel_size;
    local.widths = cfg.conv_widths;
    local.out = cfg.repr_size;
    local.variational = true;
    nets::EncoderSpec global = local;
    global.out = cfg.global_size;
    DlgNetworks n{nets::Encoder(local, init), nets::Encoder(global, init),
                  nets::Decoder({cfg.repr_size, cfg.global_size, cfg.decoder_hidden, features, cfg.window}, init),
                  make_priors(cfg.priors, cfg.prior_scales, cfg.repr_size)};
    return n;
}

double reconstruction_mse(const DlgNetworks& nets, const signals::WindowBatch& windows) {
    double sse = 0.0, count = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const Matrix r = decode_mean(nets, windows.windows[i]);
        for (std::size_t k = 0; k < r.data.size(); ++k) {
            const double m = windows.masks[i].data[k];
            const double e = r.data[k] - windows.windows[i].data[k];
            sse += m * e * e;
            count += m;
        }
    }
    return count > 0.0 ? sse / count : 0.0;
}

DlgModel train_dlg(const TrainConfig& cfg, const signals::MultivariateSeries& series) {
    cfg.validate();
    series.validate();
    if (series.length() < 2 * cfg.window) {
        throw DataError("train_dlg: series must span at least two windows of " + std::to_string(cfg.window));
    }
    const auto all = signals::make_windows(series, cfg.window);
    const std::size_t total = all.size();
    std::size_t n_train = static_cast<std::size_t>(std::floor(cfg.train_split * static_cast<double>(total)));
    n_train = std::clamp<std::size_t>(n_train, 1, total - 1);
    const auto train = subset(all, 0, n_train);
    const auto held = subset(all, n_train, total);

    std::vector<std::pair<std::size_t, std::size_t>> runs;  // [begin, end)
    if (n_train >= cfg.batch) {
        for (std::size_t s = 0; s + cfg.batch <= n_train; s += cfg.batch) {
            runs.emplace_back(s, s + cfg.batch);
        }
        if (n_train % cfg.batch != 0) {
            runs.emplace_back(n_train - cfg.batch, n_train);
        }
    } else {
        runs.emplace_back(0, n_train);
    }

    std::vector<nd::Tensor> win_t, mask_t;
    for (std::size_t i = 0; i < n_train; ++i) {
        win_t.push_back(nets::to_tensor(train.windows[i]));
        mask_t.push_back(nets::to_tensor(train.masks[i]));
    }

    Rng init(cfg.seed, "init");
    Rng noise(cfg.seed, "reparam");
    Rng pairs(cfg.seed, "pairs");
    Rng order_rng(cfg.seed, "dlg.order");

    DlgModel model{make_networks(cfg, series.features(), init), {}, {}, false};
    ParameterSet params;
    model.nets.register_params(params);
    Adam opt(params, AdamOptions{.lr = cfg.lr});

    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[order_rng.index(i)]);
        }
        DlgEpoch row{epoch, 0, 0, 0, 0, 0, 0};
        for (std::size_t r : order) {
            WindowSet batch;
            for (std::size_t i = runs[r].first; i < runs[r].second; ++i) {
                batch.windows.push_back(win_t[i]);
                batch.masks.push_back(mask_t[i]);
            }
            auto terms = elbo_loss(batch, model.nets, cfg.kl_weight, cfg.reg_weight, noise, pairs);
            opt.zero_grad();
            terms.total.backward();
            opt.step();
            row.total += terms.total.item();
            row.mse += terms.mse;
            row.kl_local += terms.kl_local;
            row.kl_global += terms.kl_global;
            row.l_reg += terms.l_reg;
        }
        const double nr = static_cast<double>(runs.size());
        row.total /= nr;
        row.mse /= nr;
        row.kl_local /= nr;
        row.kl_global /= nr;
        row.l_reg /= nr;
        row.heldout_mse = reconstruction_mse(model.nets, held);
        model.log.push_back(row);
    }

    // Residual spread on the training portion sets the reconstruction band.
    const std::size_t F = series.features();
    std::vector<double> sum(F, 0.0), sum2(F, 0.0), count(F, 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
        const Matrix r = decode_mean(model.nets, train.windows[i]);
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t c = 0; c < train.valid_lengths[i]; ++c) {
                const double m = train.masks[i](f, c);
                const double e = r(f, c) - train.windows[i](f, c);
                sum[f] += m * e;
                sum2[f] += m * e * e;
                count[f] += m;
            }
        }
    }
    model.sigma.assign(F, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
        if (count[f] > 0.0) {
            const double mu = sum[f] / count[f];
            model.sigma[f] = std::sqrt(std::max(0.0, sum2[f] / count[f] - mu * mu));
        }
    }
    model.trained = true;
    return model;
}

Reconstruction reconstruct(const DlgModel& model, const signals::MultivariateSeries& series) {
    if (!model.trained) {
        throw StateError("reconstruct: model has no trained weights");
    }
    const std::size_t window = model.nets.enc_local.spec().window;
    const auto batch = signals::make_windows(series, window);
    Reconstruction out{Matrix(series.features(), series.length()), model.sigma};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Matrix r = decode_mean(model.nets, batch.windows[i]);
        for (std::size_t f = 0; f < r.rows; ++f) {
            for (std::size_t c = 0; c < batch.valid_lengths[i]; ++c) {
                out.values(f, batch.start_indices[i] + c) = r(f, c);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- checkpoints

Checkpoint dlg_checkpoint(const DlgModel& model, const TrainConfig& cfg) {
    if (!model.trained) {
        throw StateError("dlg_checkpoint: model has no trained weights");
    }
    Checkpoint ck;
    ck.meta["kind"] = "dlg";
    nets::write_spec(ck.meta, "enc_l", model.nets.enc_local.spec());
    nets::write_spec(ck.meta, "enc_g", model.nets.enc_global.spec());
    const auto& ds = model.nets.decoder.spec();
    ck.meta["dec.local"] = std::to_string(ds.local);
    ck.meta["dec.global"] = std::to_string(ds.global);
    ck.meta["dec.hidden"] = std::to_string(ds.hidden);
    ck.meta["dec.features"] = std::to_string(ds.features);
    ck.meta["dec.steps"] = std::to_string(ds.steps);
    std::string priors;
    for (const auto& p : model.nets.priors) {
        priors += (priors.empty() ? "" : ";") + kernel_name(p.kernel) + ":" + hex(p.length_scale) + ":" +
                  std::to_string(p.first_dim) + ":" + std::to_string(p.dims);
    }
    ck.meta["priors"] = priors;
    std::string sigma;
    for (double s : model.sigma) {
        sigma += (sigma.empty() ? "" : ",") + hex(s);
    }
    ck.meta["sigma"] = sigma;
    write_config_meta(ck.meta, cfg);
    model.nets.register_params(ck.params);
    return ck;
}

DlgModel load_dlg(const Checkpoint& ckpt) {
    if (meta_value(ckpt.meta, "kind") != "dlg") {
        throw FormatError("checkpoint: not a DLG checkpoint");
    }
    auto num = [&](const std::string& key) {
        try {
            return static_cast<std::size_t>(std::stoull(meta_value(ckpt.meta, key)));
        } catch (const std::logic_error&) {
            throw FormatError("checkpoint: bad value for " + key);
        }
    };
    Rng scratch(0, "load");
    DlgModel model{{nets::Encoder(nets::read_encoder_spec(ckpt.meta, "enc_l"), scratch),
                    nets::Encoder(nets::read_encoder_spec(ckpt.meta, "enc_g"), scratch),
                    nets::Decoder({num("dec.local"), num("dec.global"), num("dec.hidden"), num("dec.features"),
                                   num("dec.steps")},
                                  scratch),
                    {}},
                   {},
                   {},
                   true};
    for (const auto& item : split(meta_value(ckpt.meta, "priors"), ';')) {
        const auto parts = split(item, ':');
        if (parts.size() != 4) {
            throw FormatError("checkpoint: bad prior record '" + item + "'");
        }
        model.nets.priors.push_back({parse_kernel(parts[0]), unhex(parts[1]),
                                     static_cast<std::size_t>(std::stoull(parts[2])),
                                     static_cast<std::size_t>(std::stoull(parts[3]))});
    }
    for (const auto& s : split(meta_value(ckpt.meta, "sigma"), ',')) {
        model.sigma.push_back(unhex(s));
    }
    ParameterSet target;
    model.nets.register_params(target);
    assign_parameters(target, ckpt.params);
    return model;
}

}  // namespace mlab::dlg
