#include <cmath>
#include <numbers>

#include "maneuverlab/dlg.hpp"
#include "maneuverlab/error.hpp"

namespace mlab::dlg {

Kernel parse_kernel(const std::string& name) {
    if (name == "RBF") {
        return Kernel::Rbf;
    }
    if (name == "Matern32") {
        return Kernel::Matern32;
    }
    throw ParameterError("unknown kernel '" + name + "' (expected RBF or Matern32)");
}

std::string kernel_name(Kernel k) { return k == Kernel::Rbf ? "RBF" : "Matern32"; }

double kernel_value(Kernel k, double length_scale, double r) {
    if (!(length_scale > 0.0)) {
        throw ParameterError("kernel: length scale must be positive");
    }
    r = std::abs(r);
    if (k == Kernel::Rbf) {
        return std::exp(-r * r / (2.0 * length_scale * length_scale));
    }
    const double a = std::numbers::sqrt3 * r / length_scale;
    return (1.0 + a) * std::exp(-a);
}

Matrix gp_gram(const GpPrior& prior, std::span<const double> times) {
    const std::size_t n = times.size();
    if (n == 0) {
        throw ParameterError("gp_gram: empty time grid");
    }
    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            K(i, j) = kernel_value(prior.kernel, prior.length_scale, times[i] - times[j]);
        }
        K(i, i) += kJitter;
    }
    return K;
}

std::vector<GpPrior> make_priors(const std::vector<std::string>& kernels, const std::vector<double>& scales,
                                 std::size_t latent_dims) {
    const std::size_t P = kernels.size() * scales.size();
    if (P == 0 || latent_dims < P) {
        throw ParameterError("make_priors: need at least one latent dimension per prior");
    }
    std::vector<GpPrior> priors;
    for (const auto& k : kernels) {
        for (double s : scales) {
            if (!(s > 0.0)) {
                throw ParameterError("make_priors: length scales must be positive");
            }
            priors.push_back({parse_kernel(k), s, 0, 0});
        }
    }
    for (std::size_t j = 0; j < latent_dims; ++j) {
        auto& p = priors[j * P / latent_dims];
        if (p.dims == 0) {
            p.first_dim = j;
        }
        ++p.dims;
    }
    return priors;
}

GramFactor factor_gram(const Matrix& K) {
    const std::size_t n = K.rows;
    if (K.cols != n || n == 0) {
        throw DimensionError("factor_gram: matrix must be square and non-empty");
    }
    Matrix L(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = K(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            d -= L(j, k) * L(j, k);
        }
        if (!(d > 0.0)) {
            throw NumericalError("factor_gram: matrix is not positive definite");
        }
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = K(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= L(i, k) * L(j, k);
            }
            L(i, j) = s / L(j, j);
        }
    }
    // L^-1 by forward substitution, then K^-1 = L^-T L^-1.
    Matrix Li(n, n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = c; i < n; ++i) {
            double s = i == c ? 1.0 : 0.0;
            for (std::size_t k = c; k < i; ++k) {
                s -= L(i, k) * Li(k, c);
            }
            Li(i, c) = s / L(i, i);
        }
    }
    GramFactor f{Matrix(n, n, 0.0), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        f.logdet += 2.0 * std::log(L(i, i));
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = std::max(i, j); k < n; ++k) {
                s += Li(k, i) * Li(k, j);
            }
            f.inverse(i, j) = s;
        }
    }
    return f;
}

nd::Tensor kl_gaussian_diag(const nd::Tensor& mean, const nd::Tensor& logvar) {
    if (mean.shape() != logvar.shape()) {
        throw DimensionError("kl_gaussian_diag: mean and log-variance shapes differ");
    }
    const auto inner = nd::sub(nd::add(nd::exp(logvar), nd::square(mean)), logvar);
    return nd::add_scalar(nd::scale(nd::sum(inner), 0.5), -0.5 * static_cast<double>(mean.numel()));
}

double kl_gaussian_diag(std::span<const double> mean, std::span<const double> logvar) {
    if (mean.size() != logvar.size()) {
        throw DimensionError("kl_gaussian_diag: mean and log-variance sizes differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        s += std::exp(logvar[i]) + mean[i] * mean[i] - logvar[i];
    }
    return 0.5 * s - 0.5 * static_cast<double>(mean.size());
}

nd::Tensor kl_gaussian_gp(const nd::Tensor& mean, const nd::Tensor& logvar, const GramFactor& gram) {
    if (mean.rank() != 2 || mean.shape() != logvar.shape()) {
        throw DimensionError("kl_gaussian_gp: mean and log-variance must be matching d x n matrices");
    }
    const std::size_t d = mean.dim(0), n = mean.dim(1);
    if (gram.inverse.rows != n) {
        throw DimensionError("kl_gaussian_gp: Gram size differs from the series length");
    }
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = gram.inverse(i, i);
    }
    const auto kinv = nets::to_tensor(gram.inverse);
    const auto trace = nd::sum(nd::matmul(nd::exp(logvar), nd::Tensor::from({n, 1}, std::move(diag))));
    const auto quad = nd::sum(nd::mul(nd::matmul(mean, kinv), mean));
    const auto inner = nd::sub(nd::add(trace, quad), nd::sum(logvar));
    const double constant = static_cast<double>(d) * (gram.logdet - static_cast<double>(n));
    return nd::scale(nd::add_scalar(inner, constant), 0.5);
}

nd::Tensor kl_gaussian_gp(const nd::Tensor& mean, const nd::Tensor& logvar, const GpPrior& prior) {
    const std::size_t n = mean.rank() == 2 ? mean.dim(1) : 0;
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
        times[i] = static_cast<double>(i);
    }
    return kl_gaussian_gp(mean, logvar, factor_gram(gp_gram(prior, times)));
}

nd::Tensor reparameterize(const nets::Gaussian& q, Rng& noise) {
    std::vector<double> eps(q.mean.numel());
    for (auto& e : eps) {
        e = noise.normal();
    }
    const auto sd = nd::exp(nd::scale(q.logvar, 0.5));
    return nd::add(q.mean, nd::mul(sd, nd::Tensor::from(q.mean.shape(), std::move(eps))));
}

nd::Tensor gaussian_log_density(const nd::Tensor& z, const nets::Gaussian& q) {
    if (z.shape() != q.mean.shape() || z.shape() != q.logvar.shape()) {
        throw DimensionError("gaussian_log_density: shape mismatch");
    }
    const auto dev = nd::square(nd::sub(z, q.mean));
    const auto scaled = nd::mul(dev, nd::exp(nd::neg(q.logvar)));
    const auto inner = nd::add(nd::sum(scaled), nd::sum(q.logvar));
    const double constant = static_cast<double>(z.numel()) * std::log(2.0 * std::numbers::pi);
    return nd::scale(nd::add_scalar(inner, constant), -0.5);
}

}  // namespace mlab::dlg
