#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maneuverlab/tensor.hpp"

namespace mlab {

/// Ordered, named collection of trainable tensors. Handles alias the
/// owning model's weights.
class ParameterSet {
public:
    void add(std::string name, nd::Tensor t);
    void append(const ParameterSet& other);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const std::vector<std::pair<std::string, nd::Tensor>>& entries() const noexcept {
        return entries_;
    }
    [[nodiscard]] nd::Tensor find(const std::string& name) const;
    [[nodiscard]] std::vector<nd::Tensor> tensors() const;
    [[nodiscard]] std::size_t scalar_count() const;

    void zero_grad();

private:
    std::vector<std::pair<std::string, nd::Tensor>> entries_;
};

struct AdamOptions {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers per parameter plus the shared step count.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

/**
 * One Adam update over explicit parameter and gradient buffers.
 *
 * params[i] and grads[i] must have equal length (DimensionError
 * otherwise). State buffers are created on first use.
 */
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamOptions& opts);

/// Adam bound to a ParameterSet; missing gradients count as zero.
class Adam {
public:
    Adam(ParameterSet params, AdamOptions opts);

    void step();
    void zero_grad() { params_.zero_grad(); }

    [[nodiscard]] const AdamState& state() const noexcept { return state_; }
    [[nodiscard]] const AdamOptions& options() const noexcept { return opts_; }

private:
    ParameterSet params_;
    AdamOptions opts_;
    AdamState state_;
};

}  // namespace mlab
