#include "maneuverlab/nets.hpp"

#include <cmath>
#include <cstdio>

#include "maneuverlab/error.hpp"

namespace mlab::nets {

namespace {

nd::Tensor uniform_tensor(nd::Shape shape, double bound, Rng& rng) {
    std::vector<double> v(nd::shape_numel(shape));
    for (auto& x : v) {
        x = rng.uniform(-bound, bound);
    }
    return nd::Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

nd::Tensor to_tensor(const Matrix& m) { return nd::Tensor::from({m.rows, m.cols}, m.data); }

Matrix to_matrix(const nd::Tensor& t) {
    if (t.rank() != 2) {
        throw DimensionError("to_matrix: expects a 2-D tensor");
    }
    return Matrix(t.dim(0), t.dim(1), std::vector<double>(t.data().begin(), t.data().end()));
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::size_t in, std::size_t out, Rng& init, bool bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = uniform_tensor({out, in}, bound, init);
    if (bias) {
        bias_ = uniform_tensor({out}, bound, init);
    }
}

nd::Tensor Linear::operator()(const nd::Tensor& x) const {
    if (x.rank() != 1 || x.numel() != in_features()) {
        throw DimensionError("Linear: expected input of length " + std::to_string(in_features()) +
                             ", got " + std::to_string(x.numel()));
    }
    auto y = nd::reshape(nd::matmul(weight_, nd::reshape(x, {x.numel(), 1})), {out_features()});
    return bias_.defined() ? nd::add(y, bias_) : y;
}

void Linear::register_params(ParameterSet& params, const std::string& prefix) const {
    params.add(prefix + ".weight", weight_);
    if (bias_.defined()) {
        params.add(prefix + ".bias", bias_);
    }
}

// ---------------------------------------------------------------- Encoder

std::size_t EncoderSpec::receptive_field() const {
    std::size_t span = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        span += dilation(i);
    }
    return 1 + (kernel - 1) * span;
}

void EncoderSpec::validate() const {
    if (in_features == 0 || window == 0 || kernel == 0 || out == 0) {
        throw ParameterError("EncoderSpec: sizes must be positive");
    }
    for (auto w : widths) {
        if (w == 0) {
            throw ParameterError("EncoderSpec: channel widths must be positive");
        }
    }
    if (receptive_field() > window) {
        throw ParameterError("EncoderSpec: receptive field " + std::to_string(receptive_field()) +
                             " exceeds window " + std::to_string(window));
    }
}

Encoder::Encoder(EncoderSpec spec, Rng& init) : spec_(spec) {
    spec_.validate();
    std::size_t in = spec_.in_features;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t out = spec_.widths[i];
        // He-uniform: keeps activation scale through the ReLU stack.
        const double bound = std::sqrt(6.0 / static_cast<double>(in * spec_.kernel));
        conv_w_[i] = uniform_tensor({out, in, spec_.kernel}, bound, init);
        if (i > 0 || spec_.first_layer_bias) {
            // Zero start keeps the conv stack responsive to low-amplitude input.
            conv_b_[i] = nd::Tensor::zeros({out}, true);
        }
        in = out;
    }
    head_ = Linear(spec_.widths[2], spec_.output_size(), init);
}

nd::Tensor Encoder::features(const nd::Tensor& window) const {
    if (window.rank() != 2 || window.dim(0) != spec_.in_features || window.dim(1) != spec_.window) {
        throw DimensionError("Encoder: window must be " + std::to_string(spec_.in_features) + "x" +
                             std::to_string(spec_.window));
    }
    nd::Tensor h = window;
    for (std::size_t i = 0; i < 3; ++i) {
        h = nd::conv1d_dilated(h, conv_w_[i], EncoderSpec::dilation(i));
        if (conv_b_[i].defined()) {
            h = nd::add_row_bias(h, conv_b_[i]);
        }
        h = nd::relu(h);
    }
    return h;
}

nd::Tensor Encoder::forward(const nd::Tensor& window) const {
    return head_(nd::global_max_pool(features(window)));
}

Gaussian Encoder::posterior(const nd::Tensor& window) const {
    if (!spec_.variational) {
        throw ContractError("Encoder::posterior called on a deterministic encoder");
    }
    const auto out = forward(window);
    return {nd::slice(out, 0, spec_.out), nd::slice(out, spec_.out, spec_.out)};
}

void Encoder::register_params(ParameterSet& params, const std::string& prefix) const {
    for (std::size_t i = 0; i < 3; ++i) {
        params.add(prefix + ".conv" + std::to_string(i) + ".weight", conv_w_[i]);
        if (conv_b_[i].defined()) {
            params.add(prefix + ".conv" + std::to_string(i) + ".bias", conv_b_[i]);
        }
    }
    head_.register_params(params, prefix + ".head");
}

// ---------------------------------------------------------------- Discriminator

Discriminator::Discriminator(DiscriminatorSpec spec, Rng& init)
    : spec_(spec), hidden_(2 * spec.repr, spec.hidden, init), out_(spec.hidden, 1, init) {}

nd::Tensor Discriminator::logit(const nd::Tensor& za, const nd::Tensor& zb) const {
    if (za.numel() != spec_.repr || zb.numel() != spec_.repr) {
        throw DimensionError("Discriminator: representations must have length " +
                             std::to_string(spec_.repr));
    }
    return nd::reshape(out_(nd::relu(hidden_(nd::concat({za, zb})))), {});
}

nd::Tensor Discriminator::operator()(const nd::Tensor& za, const nd::Tensor& zb) const {
    return nd::sigmoid(logit(za, zb));
}

void Discriminator::register_params(ParameterSet& params, const std::string& prefix) const {
    hidden_.register_params(params, prefix + ".hidden");
    out_.register_params(params, prefix + ".out");
}

// ---------------------------------------------------------------- Decoder

Decoder::Decoder(DecoderSpec spec, Rng& init)
    : spec_(spec),
      input_(spec.local + spec.global, spec.hidden, init),
      recurrent_(spec.hidden, spec.hidden, init, false),
      readout_(spec.hidden, spec.features, init) {
    if (spec.steps == 0 || spec.features == 0 || spec.hidden == 0) {
        throw ParameterError("DecoderSpec: sizes must be positive");
    }
}

nd::Tensor Decoder::operator()(const nd::Tensor& z_local, const nd::Tensor& z_global) const {
    if (z_local.numel() != spec_.local || z_global.numel() != spec_.global) {
        throw DimensionError("Decoder: expected z_l of length " + std::to_string(spec_.local) +
                             " and z_g of length " + std::to_string(spec_.global));
    }
    const auto drive = input_(nd::concat({z_local, z_global}));
    nd::Tensor h = nd::tanh(drive);
    std::vector<nd::Tensor> outputs;
    outputs.reserve(spec_.steps);
    outputs.push_back(readout_(h));
    for (std::size_t t = 1; t < spec_.steps; ++t) {
        h = nd::tanh(nd::add(drive, recurrent_(h)));
        outputs.push_back(readout_(h));
    }
    return nd::stack_columns(outputs);
}

void Decoder::register_params(ParameterSet& params, const std::string& prefix) const {
    input_.register_params(params, prefix + ".input");
    recurrent_.register_params(params, prefix + ".recurrent");
    readout_.register_params(params, prefix + ".readout");
}

// ---------------------------------------------------------------- ClassifierHead

ClassifierHead::ClassifierHead(std::size_t in, std::size_t classes, double dropout_rate, Rng& init)
    : linear_(in, classes, init), rate_(dropout_rate) {
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ParameterError("ClassifierHead: dropout rate must be in [0, 1)");
    }
}

nd::Tensor ClassifierHead::operator()(const nd::Tensor& z, Rng* dropout_rng) const {
    if (z.numel() != linear_.in_features()) {
        throw DimensionError("ClassifierHead: input length mismatch");
    }
    nd::Tensor x = z;
    if (dropout_rng && rate_ > 0.0) {
        std::vector<double> mask(z.numel());
        for (auto& m : mask) {
            m = dropout_rng->uniform() < rate_ ? 0.0 : 1.0 / (1.0 - rate_);
        }
        x = nd::dropout(z, mask);
    }
    return linear_(x);
}

void ClassifierHead::register_params(ParameterSet& params, const std::string& prefix) const {
    linear_.register_params(params, prefix + ".linear");
}

// ---------------------------------------------------------------- helpers

Matrix encode_windows(const Encoder& enc, const std::vector<Matrix>& windows) {
    const std::size_t width = enc.spec().out;
    Matrix out(windows.size(), width);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto z = enc.forward(to_tensor(windows[i]));
        for (std::size_t j = 0; j < width; ++j) {
            out(i, j) = z[j];
        }
    }
    return out;
}

void write_spec(std::map<std::string, std::string>& meta, const std::string& prefix, const EncoderSpec& spec) {
    meta[prefix + ".in_features"] = std::to_string(spec.in_features);
    meta[prefix + ".window"] = std::to_string(spec.window);
    meta[prefix + ".kernel"] = std::to_string(spec.kernel);
    meta[prefix + ".widths"] = std::to_string(spec.widths[0]) + "," + std::to_string(spec.widths[1]) + "," +
                               std::to_string(spec.widths[2]);
    meta[prefix + ".out"] = std::to_string(spec.out);
    meta[prefix + ".variational"] = spec.variational ? "1" : "0";
    meta[prefix + ".first_layer_bias"] = spec.first_layer_bias ? "1" : "0";
}

EncoderSpec read_encoder_spec(const std::map<std::string, std::string>& meta, const std::string& prefix) {
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = meta.find(prefix + "." + key);
        if (it == meta.end()) {
            throw FormatError("checkpoint: missing meta key " + prefix + "." + key);
        }
        return it->second;
    };
    auto num = [&](const std::string& key) {
        try {
            return static_cast<std::size_t>(std::stoull(get(key)));
        } catch (const std::logic_error&) {
            throw FormatError("checkpoint: bad value for " + prefix + "." + key);
        }
    };
    EncoderSpec spec;
    spec.in_features = num("in_features");
    spec.window = num("window");
    spec.kernel = num("kernel");
    spec.out = num("out");
    spec.variational = get("variational") == "1";
    spec.first_layer_bias = get("first_layer_bias") == "1";
    const auto& w = get("widths");
    if (std::sscanf(w.c_str(), "%zu,%zu,%zu", &spec.widths[0], &spec.widths[1], &spec.widths[2]) != 3) {
        throw FormatError("checkpoint: bad value for " + prefix + ".widths");
    }
    spec.validate();
    return spec;
}

}  // namespace mlab::nets
