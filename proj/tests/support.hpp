#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "maneuverlab/optim.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/tensor.hpp"

namespace testing {

struct GradReport {
    double rel_error = 0.0;  // ||analytic - numeric|| / (||analytic|| + ||numeric||)
    double max_abs = 0.0;
    std::size_t checked = 0;
};

/**
 * Compares reverse-mode gradients of `loss` (rebuilt on each call) against
 * central finite differences for every scalar of `params`.
 */
inline GradReport grad_check(const std::vector<mlab::nd::Tensor>& params,
                             const std::function<mlab::nd::Tensor()>& loss, double h = 1e-6) {
    for (auto p : params) {
        p.zero_grad();
    }
    loss().backward();
    GradReport r;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (auto p : params) {
        std::vector<double> analytic(p.numel(), 0.0);
        if (p.has_grad()) {
            const auto g = p.grad();
            analytic.assign(g.begin(), g.end());
        }
        auto data = p.mutable_data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double keep = data[i];
            data[i] = keep + h;
            const double up = loss().item();
            data[i] = keep - h;
            const double down = loss().item();
            data[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
            a2 += analytic[i] * analytic[i];
            n2 += numeric * numeric;
            r.max_abs = std::max(r.max_abs, std::abs(analytic[i] - numeric));
            ++r.checked;
        }
    }
    const double denom = std::sqrt(a2) + std::sqrt(n2);
    r.rel_error = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
    return r;
}

inline mlab::nd::Tensor random_tensor(mlab::nd::Shape shape, mlab::Rng& rng, bool requires_grad = true,
                                      double scale = 1.0) {
    std::vector<double> v(mlab::nd::shape_numel(shape));
    for (auto& x : v) {
        x = scale * rng.normal();
    }
    return mlab::nd::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace testing
