#include "maneuverlab/optim.hpp"

#include <cmath>

#include "maneuverlab/error.hpp"

namespace mlab {

void ParameterSet::add(std::string name, nd::Tensor t) {
    for (const auto& [n, _] : entries_) {
        if (n == name) {
            throw ContractError("ParameterSet: duplicate parameter name '" + name + "'");
        }
    }
    entries_.emplace_back(std::move(name), std::move(t));
}

void ParameterSet::append(const ParameterSet& other) {
    for (const auto& [n, t] : other.entries_) {
        add(n, t);
    }
}

nd::Tensor ParameterSet::find(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) {
            return t;
        }
    }
    throw ContractError("ParameterSet: no parameter named '" + name + "'");
}

std::vector<nd::Tensor> ParameterSet::tensors() const {
    std::vector<nd::Tensor> out;
    out.reserve(entries_.size());
    for (const auto& [_, t] : entries_) {
        out.push_back(t);
    }
    return out;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) {
        n += t.numel();
    }
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& [_, t] : entries_) {
        t.zero_grad();
    }
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamOptions& opts) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: parameter and gradient counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) {
            throw DimensionError("adam_step: parameter " + std::to_string(i) +
                                 " and its gradient differ in size");
        }
    }
    if (state.m.size() != params.size()) {
        state.m.clear();
        state.v.clear();
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(opts.beta1, t);
    const double bc2 = 1.0 - std::pow(opts.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < params[i].size(); ++j) {
            const double g = grads[i][j];
            m[j] = opts.beta1 * m[j] + (1.0 - opts.beta1) * g;
            v[j] = opts.beta2 * v[j] + (1.0 - opts.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            params[i][j] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
        }
    }
}

Adam::Adam(ParameterSet params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {}

void Adam::step() {
    std::vector<std::span<double>> p;
    std::vector<std::span<const double>> g;
    std::vector<std::vector<double>> zeros;
    zeros.reserve(params_.size());
    for (auto t : params_.tensors()) {
        p.push_back(t.mutable_data());
        if (t.has_grad()) {
            g.push_back(t.grad());
        } else {
            zeros.emplace_back(t.numel(), 0.0);
            g.emplace_back(zeros.back());
        }
    }
    adam_step(p, g, state_, opts_);
}

}  // namespace mlab
