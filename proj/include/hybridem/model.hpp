#pragma once

// Problem definition dz = f(z, alpha) dt + g(z, alpha) dB, the shipped test
// models, and probes for the Lipschitz and linear-growth assumptions.
//
// Coefficient functions must be pure and reentrant: solvers evaluate them
// concurrently from many threads.

#include <hybridem/ctmc.hpp>
#include <hybridem/error.hpp>
#include <hybridem/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hybridem {

template <class M>
concept HybridCoefficients = requires(const M& m, const Eigen::VectorXd& z, Regime i) {
    { m.state_dim() } -> std::convertible_to<std::size_t>;
    { m.noise_dim() } -> std::convertible_to<std::size_t>;
    { m.regime_count() } -> std::convertible_to<std::size_t>;
    { m.drift(z, i) } -> std::convertible_to<Eigen::VectorXd>;
    { m.diffusion(z, i) } -> std::convertible_to<Eigen::MatrixXd>;
    { m.initial_value() } -> std::convertible_to<Eigen::VectorXd>;
    { m.initial_regime() } -> std::convertible_to<Regime>;
};

/// Type-erased model over user-supplied coefficient functions.
class HybridModel {
public:
    using Drift = std::function<Eigen::VectorXd(const Eigen::VectorXd&, Regime)>;
    using Diffusion = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, Regime)>;

    HybridModel(std::size_t state_dim, std::size_t noise_dim, std::size_t regime_count, Drift drift,
                Diffusion diffusion, Eigen::VectorXd initial_value, Regime initial_regime = 0)
        : state_dim_(state_dim),
          noise_dim_(noise_dim),
          regime_count_(regime_count),
          drift_(std::move(drift)),
          diffusion_(std::move(diffusion)),
          initial_value_(std::move(initial_value)),
          initial_regime_(initial_regime) {
        if (state_dim_ == 0 || noise_dim_ == 0 || regime_count_ == 0) {
            throw Error(ErrorKind::InvalidArgument, "model dimensions must be positive");
        }
        if (static_cast<std::size_t>(initial_value_.size()) != state_dim_) {
            throw Error(ErrorKind::DimensionMismatch, "initial value has wrong dimension");
        }
        if (initial_regime_ >= regime_count_) {
            throw Error(ErrorKind::RegimeOutOfRange, "initial regime " + std::to_string(initial_regime_ + 1));
        }
    }

    std::size_t state_dim() const noexcept { return state_dim_; }
    std::size_t noise_dim() const noexcept { return noise_dim_; }
    std::size_t regime_count() const noexcept { return regime_count_; }
    Eigen::VectorXd drift(const Eigen::VectorXd& z, Regime i) const { return drift_(z, i); }
    Eigen::MatrixXd diffusion(const Eigen::VectorXd& z, Regime i) const { return diffusion_(z, i); }
    const Eigen::VectorXd& initial_value() const noexcept { return initial_value_; }
    Regime initial_regime() const noexcept { return initial_regime_; }

private:
    std::size_t state_dim_;
    std::size_t noise_dim_;
    std::size_t regime_count_;
    Drift drift_;
    Diffusion diffusion_;
    Eigen::VectorXd initial_value_;
    Regime initial_regime_;
};

/// Scalar linear model f(z,i) = a(i) z, g(z,i) = b(i) z. Has a closed-form
/// solution conditional on the chain path.
struct LinearHybridModel {
    std::vector<double> a;
    std::vector<double> b;
    double z0 = 1.0;
    Regime i0 = 0;

    std::size_t state_dim() const noexcept { return 1; }
    std::size_t noise_dim() const noexcept { return 1; }
    std::size_t regime_count() const noexcept { return a.size(); }
    Eigen::VectorXd drift(const Eigen::VectorXd& z, Regime i) const { return a.at(i) * z; }
    Eigen::MatrixXd diffusion(const Eigen::VectorXd& z, Regime i) const {
        return Eigen::MatrixXd::Constant(1, 1, b.at(i) * z(0));
    }
    Eigen::VectorXd initial_value() const { return Eigen::VectorXd::Constant(1, z0); }
    Regime initial_regime() const noexcept { return i0; }

    /// Lipschitz constant of the family, max_i (|a(i)| v |b(i)|).
    double lipschitz_constant() const {
        double l = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) l = std::max({l, std::abs(a[i]), std::abs(b[i])});
        return l;
    }
};

/// Globally Lipschitz nonlinear model f(z,i) = a(i) sin z + c(i), g(z,i) = b(i) cos z.
struct TrigHybridModel {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    double z0 = 1.0;
    Regime i0 = 0;

    std::size_t state_dim() const noexcept { return 1; }
    std::size_t noise_dim() const noexcept { return 1; }
    std::size_t regime_count() const noexcept { return a.size(); }
    Eigen::VectorXd drift(const Eigen::VectorXd& z, Regime i) const {
        return Eigen::VectorXd::Constant(1, a.at(i) * std::sin(z(0)) + c.at(i));
    }
    Eigen::MatrixXd diffusion(const Eigen::VectorXd& z, Regime i) const {
        return Eigen::MatrixXd::Constant(1, 1, b.at(i) * std::cos(z(0)));
    }
    Eigen::VectorXd initial_value() const { return Eigen::VectorXd::Constant(1, z0); }
    Regime initial_regime() const noexcept { return i0; }

    /// With a = b = 0 the drift is constant per regime and the solution is
    /// piecewise linear in t.
    bool is_constant_drift() const {
        auto zero = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
        };
        return zero(a) && zero(b);
    }
};

namespace detail {

template <HybridCoefficients M>
void check_regime(const M& model, Regime i) {
    if (i >= model.regime_count()) {
        throw Error(ErrorKind::RegimeOutOfRange,
                    "regime " + std::to_string(i + 1) + " of " + std::to_string(model.regime_count()));
    }
}

}  // namespace detail

template <HybridCoefficients M>
Eigen::VectorXd drift_eval(const M& model, const Eigen::VectorXd& z, Regime i) {
    detail::check_regime(model, i);
    if (static_cast<std::size_t>(z.size()) != model.state_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "state vector has wrong dimension");
    }
    Eigen::VectorXd f = model.drift(z, i);
    if (static_cast<std::size_t>(f.size()) != model.state_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "drift returned " + std::to_string(f.size()) + " entries, expected " +
                                                      std::to_string(model.state_dim()));
    }
    if (!f.allFinite()) throw Error(ErrorKind::NonFinite, "drift at regime " + std::to_string(i + 1));
    return f;
}

template <HybridCoefficients M>
Eigen::MatrixXd diffusion_eval(const M& model, const Eigen::VectorXd& z, Regime i) {
    detail::check_regime(model, i);
    if (static_cast<std::size_t>(z.size()) != model.state_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "state vector has wrong dimension");
    }
    Eigen::MatrixXd g = model.diffusion(z, i);
    if (static_cast<std::size_t>(g.rows()) != model.state_dim() ||
        static_cast<std::size_t>(g.cols()) != model.noise_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "diffusion returned " + std::to_string(g.rows()) + "x" +
                                                      std::to_string(g.cols()) + ", expected " +
                                                      std::to_string(model.state_dim()) + "x" +
                                                      std::to_string(model.noise_dim()));
    }
    if (!g.allFinite()) throw Error(ErrorKind::NonFinite, "diffusion at regime " + std::to_string(i + 1));
    return g;
}

/// Axis-aligned box [lower, upper]^n for probing.
struct ProbeBox {
    double lower = -10.0;
    double upper = 10.0;
};

namespace detail {

inline Eigen::VectorXd sample_in_box(std::size_t n, const ProbeBox& box, RandomStream& rng) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = box.lower + (box.upper - box.lower) * rng.uniform();
    return z;
}

}  // namespace detail

/// Running max of (|f(z)-f(w)| v |g(z)-g(w)|) / |z-w| over sampled pairs and
/// all regimes. A lower bound on any valid Lipschitz constant.
template <HybridCoefficients M>
double lipschitz_probe(const M& model, const ProbeBox& box, std::size_t samples, RandomStream& rng) {
    if (samples < 2) throw Error(ErrorKind::InvalidArgument, "lipschitz_probe needs at least 2 samples");
    double best = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const Eigen::VectorXd z = detail::sample_in_box(model.state_dim(), box, rng);
        const Eigen::VectorXd w = detail::sample_in_box(model.state_dim(), box, rng);
        const double dz = (z - w).norm();
        // Near-coincident pairs measure cancellation error, not the slope.
        if (dz <= 1e-8 * (1.0 + z.norm() + w.norm())) continue;
        for (Regime i = 0; i < model.regime_count(); ++i) {
            const double df = (drift_eval(model, z, i) - drift_eval(model, w, i)).norm();
            const double dg = (diffusion_eval(model, z, i) - diffusion_eval(model, w, i)).norm();
            best = std::max(best, std::max(df, dg) / dz);
        }
    }
    return best;
}

/// Running max of (|f(z)| v |g(z)|) / (1 + |z|).
template <HybridCoefficients M>
double growth_probe(const M& model, const ProbeBox& box, std::size_t samples, RandomStream& rng) {
    double best = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const Eigen::VectorXd z = detail::sample_in_box(model.state_dim(), box, rng);
        for (Regime i = 0; i < model.regime_count(); ++i) {
            const double f = drift_eval(model, z, i).norm();
            const double g = diffusion_eval(model, z, i).norm();
            best = std::max(best, std::max(f, g) / (1.0 + z.norm()));
        }
    }
    return best;
}

/// True when the growth estimate stays within `threshold`.
template <HybridCoefficients M>
bool within_growth_bound(const M& model, double threshold, const ProbeBox& box, std::size_t samples,
                         RandomStream& rng) {
    return growth_probe(model, box, samples, rng) <= threshold;
}

}  // namespace hybridem
