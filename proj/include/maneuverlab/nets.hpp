#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "maneuverlab/matrix.hpp"
#include "maneuverlab/optim.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/tensor.hpp"

namespace mlab::nets {

/// Dense layer y = W x + b over 1-D inputs.
class Linear {
public:
    Linear() = default;
    Linear(std::size_t in, std::size_t out, Rng& init, bool bias = true);

    [[nodiscard]] nd::Tensor operator()(const nd::Tensor& x) const;
    void register_params(ParameterSet& params, const std::string& prefix) const;

    [[nodiscard]] std::size_t in_features() const { return weight_.dim(1); }
    [[nodiscard]] std::size_t out_features() const { return weight_.dim(0); }
    [[nodiscard]] const nd::Tensor& weight() const { return weight_; }
    [[nodiscard]] const nd::Tensor& bias() const { return bias_; }

private:
    nd::Tensor weight_;  // out x in
    nd::Tensor bias_;    // out, undefined when bias-free
};

/// Architecture of a dilated causal CNN encoder.
struct EncoderSpec {
    std::size_t in_features = 2;
    std::size_t window = 19;
    std::size_t kernel = 3;
    std::array<std::size_t, 3> widths{8, 16, 16};
    std::size_t out = 16;
    bool variational = false;       // emit (mean, log-variance) of size `out` each
    bool first_layer_bias = true;

    /// Layer i uses dilation 2^i.
    [[nodiscard]] static std::size_t dilation(std::size_t layer) { return std::size_t{1} << layer; }
    /// 1 + (k - 1)(1 + 2 + 4).
    [[nodiscard]] std::size_t receptive_field() const;
    [[nodiscard]] std::size_t output_size() const { return variational ? 2 * out : out; }
    /// Throws ParameterError on zero sizes or a receptive field wider than the window.
    void validate() const;
};

/// Diagonal Gaussian parameters produced by a variational encoder.
struct Gaussian {
    nd::Tensor mean;
    nd::Tensor logvar;
};

/**
 * Three causal dilated convolutions (dilations 1, 2, 4) with ReLU, global
 * max pooling over time, then a linear projection.
 */
class Encoder {
public:
    Encoder() = default;
    Encoder(EncoderSpec spec, Rng& init);

    /// Representation (size out, or 2*out when variational).
    [[nodiscard]] nd::Tensor forward(const nd::Tensor& window) const;
    /// Post-activation feature maps of the last conv layer (C x window).
    [[nodiscard]] nd::Tensor features(const nd::Tensor& window) const;
    /// Splits a variational output into mean and log-variance.
    [[nodiscard]] Gaussian posterior(const nd::Tensor& window) const;

    void register_params(ParameterSet& params, const std::string& prefix) const;
    [[nodiscard]] const EncoderSpec& spec() const noexcept { return spec_; }

private:
    EncoderSpec spec_;
    std::array<nd::Tensor, 3> conv_w_;
    std::array<nd::Tensor, 3> conv_b_;  // conv_b_[0] undefined when bias-free
    Linear head_;
};

struct DiscriminatorSpec {
    std::size_t repr = 16;   // M; input is the concatenation (2M)
    std::size_t hidden = 32;
};

/// MLP on concat(z_a, z_b) with a sigmoid output. Not symmetric in its arguments.
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(DiscriminatorSpec spec, Rng& init);

    /// Pre-sigmoid score.
    [[nodiscard]] nd::Tensor logit(const nd::Tensor& za, const nd::Tensor& zb) const;
    /// Probability in (0, 1).
    [[nodiscard]] nd::Tensor operator()(const nd::Tensor& za, const nd::Tensor& zb) const;

    void register_params(ParameterSet& params, const std::string& prefix) const;
    [[nodiscard]] const DiscriminatorSpec& spec() const noexcept { return spec_; }

private:
    DiscriminatorSpec spec_;
    Linear hidden_;
    Linear out_;
};

struct DecoderSpec {
    std::size_t local = 16;   // M
    std::size_t global = 2;   // m
    std::size_t hidden = 32;  // H
    std::size_t features = 2; // F
    std::size_t steps = 19;   // window length
};

/**
 * Vanilla tanh RNN unrolled for `steps` steps. Every step receives
 * concat(z_l, z_g); a linear readout maps the hidden state to F values.
 * Output is F x steps.
 */
class Decoder {
public:
    Decoder() = default;
    Decoder(DecoderSpec spec, Rng& init);

    [[nodiscard]] nd::Tensor operator()(const nd::Tensor& z_local, const nd::Tensor& z_global) const;

    void register_params(ParameterSet& params, const std::string& prefix) const;
    [[nodiscard]] const DecoderSpec& spec() const noexcept { return spec_; }

private:
    DecoderSpec spec_;
    Linear input_;    // (M + m) -> H
    Linear recurrent_;  // H -> H, no bias
    Linear readout_;  // H -> F
};

/// Dropout followed by a linear map to class scores.
class ClassifierHead {
public:
    ClassifierHead() = default;
    ClassifierHead(std::size_t in, std::size_t classes, double dropout_rate, Rng& init);

    /// `dropout_rng` non-null means training mode.
    [[nodiscard]] nd::Tensor operator()(const nd::Tensor& z, Rng* dropout_rng = nullptr) const;

    void register_params(ParameterSet& params, const std::string& prefix) const;
    [[nodiscard]] std::size_t classes() const { return linear_.out_features(); }
    [[nodiscard]] double dropout_rate() const noexcept { return rate_; }

private:
    Linear linear_;
    double rate_ = 0.5;
};

/// Encodes every window of a batch (no graph). Returns N x output_size.
/// Variational encoders contribute only their means.
[[nodiscard]] Matrix encode_windows(const Encoder& enc, const std::vector<Matrix>& windows);

/// Records an encoder architecture under `prefix.*` checkpoint meta keys.
void write_spec(std::map<std::string, std::string>& meta, const std::string& prefix, const EncoderSpec& spec);
[[nodiscard]] EncoderSpec read_encoder_spec(const std::map<std::string, std::string>& meta,
                                            const std::string& prefix);

/// F x T matrix as a constant tensor.
[[nodiscard]] nd::Tensor to_tensor(const Matrix& m);
[[nodiscard]] Matrix to_matrix(const nd::Tensor& t);

}  // namespace mlab::nets
