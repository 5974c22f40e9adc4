#pragma once

// Monte Carlo strong-error estimation for the switching EM schemes.
//
// Every sample index m owns the stream derive_stream_seed(seed, m). From it
// the sample draws one chain path and then one Brownian path on the union of
// all grids any scheme, step size or reference will need. Every solver reads
// that single realization, so errors measure discretization only. Per-sample
// results land in an indexed buffer and are reduced sequentially, so reports
// do not depend on the thread count.

#include <hybridem/brownian.hpp>
#include <hybridem/ctmc.hpp>
#include <hybridem/error.hpp>
#include <hybridem/model.hpp>
#include <hybridem/random.hpp>
#include <hybridem/solvers.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace hybridem {

using ModelSpec = std::variant<LinearHybridModel, TrigHybridModel>;

enum class Scheme { JumpAdapted, Classical };

constexpr std::string_view scheme_name(Scheme s) noexcept {
    return s == Scheme::JumpAdapted ? "jump_adapted" : "classical";
}

enum class ReferenceMode { ClosedForm, FineEM };
enum class StderrMethod { Delta, Bootstrap };

inline const GeneratorMatrix& absorbing_generator() {
    static const GeneratorMatrix gen = validate_generator(Eigen::MatrixXd::Zero(1, 1));
    return gen;
}

/// T * 2^-m for m = first..last.
inline std::vector<double> dyadic_ladder(double horizon, int first, int last) {
    std::vector<double> out;
    for (int m = first; m <= last; ++m) out.push_back(std::ldexp(horizon, -m));
    return out;
}

struct ExperimentConfig {
    ModelSpec model = LinearHybridModel{{1.0, 2.0}, {2.0, 1.0}, 1.0, 0};
    GeneratorMatrix generator = validate_generator((Eigen::MatrixXd(2, 2) << -1.0, 1.0, 2.0, -2.0).finished());
    double horizon = 1.0;
    std::vector<double> p_list{2.0};
    std::vector<double> deltas = dyadic_ladder(1.0, 4, 9);  // descending
    std::size_t samples = 1000;
    std::uint64_t seed = 20240601;
    ReferenceMode reference = ReferenceMode::ClosedForm;
    int reference_refinement = 6;  // fine-EM reference step = min delta / 2^r
    std::vector<Scheme> schemes{Scheme::JumpAdapted, Scheme::Classical};
    std::size_t threads = 1;
    StderrMethod stderr_method = StderrMethod::Delta;
    std::size_t bootstrap_resamples = 200;
    double moment_growth_factor = 2.0;
    SimulationLimits limits{};
};

inline Regime initial_regime(const ModelSpec& model) {
    return std::visit([](const auto& m) { return m.initial_regime(); }, model);
}

inline std::size_t regime_count(const ModelSpec& model) {
    return std::visit([](const auto& m) { return m.regime_count(); }, model);
}

inline bool has_closed_form(const ModelSpec& model) {
    if (std::holds_alternative<LinearHybridModel>(model)) return true;
    return std::get<TrigHybridModel>(model).is_constant_drift();
}

/// True when every step is step_min * 2^k for an integer k >= 0.
inline bool is_dyadic_ladder(std::span<const double> deltas) {
    if (deltas.empty()) return false;
    const double smallest = *std::min_element(deltas.begin(), deltas.end());
    if (!(smallest > 0.0)) return false;
    for (double d : deltas) {
        const double ratio = std::log2(d / smallest);
        if (std::abs(ratio - std::round(ratio)) > 1e-9) return false;
    }
    return true;
}

inline void validate_config(const ExperimentConfig& config) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) fail("horizon must be positive");
    if (config.samples < 2) fail("sample count M must be >= 2");
    if (config.p_list.empty()) fail("p list is empty");
    for (double p : config.p_list)
        if (!(p >= 2.0) || !std::isfinite(p)) fail("every moment order p must be >= 2");
    if (config.deltas.empty()) fail("step ladder is empty");
    for (std::size_t i = 0; i < config.deltas.size(); ++i) {
        const double d = config.deltas[i];
        if (!(d > 0.0) || d > config.horizon * (1.0 + 1e-14)) fail("every step must lie in (0, T]");
        if (i > 0 && !(d < config.deltas[i - 1])) fail("step ladder must be strictly descending");
    }
    if (!is_dyadic_ladder(config.deltas)) fail("step ladder must be dyadic: each step = smallest step * 2^k");
    if (config.schemes.empty()) fail("scheme set is empty");
    const auto& model = config.model;
    if (regime_count(model) != config.generator.n_states()) {
        fail("model has " + std::to_string(regime_count(model)) + " regimes but the generator has " +
             std::to_string(config.generator.n_states()) + " states");
    }
    if (initial_regime(model) >= config.generator.n_states()) fail("initial regime out of range");
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            const std::size_t n = m.a.size();
            if (m.b.size() != n) fail("coefficient vectors a and b differ in length");
            if constexpr (std::is_same_v<T, TrigHybridModel>) {
                if (m.c.size() != n) fail("coefficient vector c has the wrong length");
            }
        },
        model);
    if (config.reference == ReferenceMode::ClosedForm && !has_closed_form(model)) {
        fail("closed-form reference requested but the model has no closed-form solution");
    }
    if (config.reference_refinement < 0 || config.reference_refinement > 20) fail("reference refinement out of range");
    if (config.threads == 0) fail("thread count must be >= 1");
    if (!(config.moment_growth_factor >= 1.0)) fail("moment growth factor must be >= 1");
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers, static striding.
/// The first exception (lowest worker id) is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// One (chain, Brownian) realization shared by all schemes of a sample.
struct CoupledSample {
    ChainPath chain;
    BrownianPath bm;
};

/// Union of the uniform grids for every step in `steps` and the interior
/// switching times of `chain`.
inline TimeGrid union_grid(const ChainPath& chain, std::span<const double> steps) {
    TimeGrid grid = TimeGrid::uniform(chain.horizon, steps.front());
    for (std::size_t i = 1; i < steps.size(); ++i) grid = merge_grids(grid, TimeGrid::uniform(chain.horizon, steps[i]));
    if (chain.switch_count() > 0) {
        std::vector<double> pts = grid.points();
        pts.insert(pts.end(), chain.switch_times.begin() + 1, chain.switch_times.end());
        grid = TimeGrid(std::move(pts));
    }
    return grid;
}

/// Draws sample `index`: first the chain path, then Brownian increments on
/// the union grid, both from the sample's own stream.
inline CoupledSample draw_coupled_sample(const ExperimentConfig& config, std::size_t index,
                                         std::span<const double> grid_steps) {
    RandomStream rng(derive_stream_seed(config.seed, index));
    ChainPath chain = simulate_exact_path(config.generator, initial_regime(config.model), config.horizon, rng,
                                          config.limits);
    const TimeGrid grid = union_grid(chain, grid_steps);
    const std::size_t d = std::visit([](const auto& m) { return m.noise_dim(); }, config.model);
    BrownianPath bm = generate_increments(grid, d, rng);
    return {std::move(chain), std::move(bm)};
}

/// Continuous-time scheme output at every point of the sample's union grid.
template <HybridCoefficients M>
SolutionPath solve_on_union(const M& model, Scheme scheme, const CoupledSample& sample, double step) {
    if (scheme == Scheme::JumpAdapted) {
        const RefinedGrid refined = build_refined_grid(sample.chain, step);
        return interpolate_on_grid(em_jump_adapted(model, refined, sample.bm), model, sample.bm);
    }
    const auto skeleton = skeleton_from_path(sample.chain, step);
    return interpolate_on_grid(em_classical(model, skeleton, step, sample.bm), model, sample.bm);
}

inline SolutionPath reference_on_union(const ExperimentConfig& config, const CoupledSample& sample) {
    if (config.reference == ReferenceMode::ClosedForm) {
        if (const auto* lin = std::get_if<LinearHybridModel>(&config.model)) {
            return exact_linear_solution(*lin, sample.chain, sample.bm);
        }
        return exact_constant_drift_solution(std::get<TrigHybridModel>(config.model), sample.chain, sample.bm);
    }
    const double ref_step = std::ldexp(config.deltas.back(), -config.reference_refinement);
    return std::visit(
        [&](const auto& m) {
            SolutionPath ref = solve_on_union(m, Scheme::JumpAdapted, sample, ref_step);
            ref.scheme = "reference";
            return ref;
        },
        config.model);
}

/// Step sizes whose uniform grids the union grid must contain.
inline std::vector<double> union_steps(const ExperimentConfig& config) {
    std::vector<double> steps = config.deltas;
    if (config.reference == ReferenceMode::FineEM) {
        steps.push_back(std::ldexp(config.deltas.back(), -config.reference_refinement));
    }
    return steps;
}

inline double sup_distance(const SolutionPath& x, const SolutionPath& y) {
    double sup = 0.0;
    for (std::size_t j = 0; j < x.values.size(); ++j) sup = std::max(sup, (x.values[j] - y.values[j]).norm());
    return sup;
}

inline double sup_norm(const SolutionPath& x) {
    double sup = 0.0;
    for (const auto& v : x.values) sup = std::max(sup, v.norm());
    return sup;
}

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares of log2(eps) = slope * log2(delta) + intercept.
inline OrderFit estimate_order(std::span<const std::pair<double, double>> errors) {
    if (errors.size() < 2) throw Error(ErrorKind::DegenerateFit, "need at least two (delta, eps) points");
    std::vector<double> x, y;
    for (const auto& [delta, eps] : errors) {
        if (!(eps > 0.0)) throw Error(ErrorKind::NonPositiveError, "eps=" + std::to_string(eps));
        if (!(delta > 0.0)) throw Error(ErrorKind::DegenerateFit, "delta must be positive");
        x.push_back(std::log2(delta));
        y.push_back(std::log2(eps));
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw Error(ErrorKind::DegenerateFit, "all step sizes are equal");
    OrderFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    // Flat data fits perfectly.
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

struct ErrorRow {
    Scheme scheme;
    double p;
    double delta;
    double eps;
    double stderr_;
    std::size_t samples;
};

struct FitRow {
    Scheme scheme;
    double p;
    std::optional<OrderFit> fit;  // empty when some eps <= 0
};

struct ErrorReport {
    std::vector<ErrorRow> errors;
    std::vector<FitRow> fits;

    const FitRow* find_fit(Scheme s, double p) const {
        for (const auto& f : fits)
            if (f.scheme == s && f.p == p) return &f;
        return nullptr;
    }
    std::vector<ErrorRow> rows(Scheme s, double p) const {
        std::vector<ErrorRow> out;
        for (const auto& e : errors)
            if (e.scheme == s && e.p == p) out.push_back(e);
        return out;
    }
};

namespace detail {

struct MomentEstimate {
    double root_moment;  // (mean x^p)^(1/p)
    double stderr_;
};

inline double mean_power(std::span<const double> sups, double p) {
    double sum = 0.0;
    for (double s : sups) sum += std::pow(s, p);
    return sum / static_cast<double>(sups.size());
}

inline MomentEstimate root_moment_delta(std::span<const double> sups, double p) {
    const auto m = static_cast<double>(sups.size());
    const double mean = mean_power(sups, p);
    double var = 0.0;
    for (double s : sups) {
        const double d = std::pow(s, p) - mean;
        var += d * d;
    }
    var /= (m - 1.0);
    const double eps = std::pow(mean, 1.0 / p);
    const double se = eps > 0.0 ? std::pow(eps, 1.0 - p) * std::sqrt(var) / (p * std::sqrt(m)) : 0.0;
    return {eps, se};
}

inline double root_moment_bootstrap_se(std::span<const double> sups, double p, std::size_t resamples,
                                       std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<double> draws;
    draws.reserve(resamples);
    std::vector<double> resample(sups.size());
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& r : resample) {
            auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(sups.size()));
            r = sups[std::min(k, sups.size() - 1)];
        }
        draws.push_back(std::pow(mean_power(resample, p), 1.0 / p));
    }
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= static_cast<double>(draws.size());
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    return std::sqrt(var / static_cast<double>(draws.size() - 1));
}

}  // namespace detail

/// Root-L^p sup-error eps(delta) = (E sup_t |z(t) - Z(t)|^p)^(1/p) for every
/// scheme, p and step, with a fitted order per (scheme, p).
inline ErrorReport run_strong_error(const ExperimentConfig& config) {
    validate_config(config);
    const std::size_t n_schemes = config.schemes.size();
    const std::size_t n_deltas = config.deltas.size();
    const std::vector<double> steps = union_steps(config);

    // sups[(m * n_schemes + s) * n_deltas + d]
    std::vector<double> sups(config.samples * n_schemes * n_deltas, 0.0);
    parallel_for(config.samples, config.threads, [&](std::size_t m) {
        const CoupledSample sample = draw_coupled_sample(config, m, steps);
        const SolutionPath ref = reference_on_union(config, sample);
        std::visit(
            [&](const auto& model) {
                for (std::size_t s = 0; s < n_schemes; ++s)
                    for (std::size_t d = 0; d < n_deltas; ++d)
                        sups[(m * n_schemes + s) * n_deltas + d] =
                            sup_distance(ref, solve_on_union(model, config.schemes[s], sample, config.deltas[d]));
            },
            config.model);
    });

    ErrorReport report;
    std::vector<double> column(config.samples);
    for (std::size_t s = 0; s < n_schemes; ++s) {
        for (std::size_t pi = 0; pi < config.p_list.size(); ++pi) {
            const double p = config.p_list[pi];
            std::vector<std::pair<double, double>> points;
            bool positive = true;
            for (std::size_t d = 0; d < n_deltas; ++d) {
                for (std::size_t m = 0; m < config.samples; ++m) column[m] = sups[(m * n_schemes + s) * n_deltas + d];
                auto est = detail::root_moment_delta(column, p);
                if (config.stderr_method == StderrMethod::Bootstrap) {
                    const std::uint64_t bseed =
                        derive_stream_seed(config.seed ^ 0xB007'57A9'0000'0000ULL, (s * 64 + pi) * 1024 + d);
                    est.stderr_ = detail::root_moment_bootstrap_se(column, p, config.bootstrap_resamples, bseed);
                }
                report.errors.push_back({config.schemes[s], p, config.deltas[d], est.root_moment, est.stderr_,
                                         config.samples});
                points.emplace_back(config.deltas[d], est.root_moment);
                positive = positive && est.root_moment > 0.0;
            }
            FitRow fit{config.schemes[s], p, std::nullopt};
            if (positive && points.size() >= 2) fit.fit = estimate_order(points);
            report.fits.push_back(fit);
        }
    }
    return report;
}

struct MomentRow {
    Scheme scheme;
    double p;
    double delta;
    double moment;  // E sup_t |Z(t)|^p
    bool finite;
};

struct MomentTable {
    std::vector<MomentRow> rows;
    /// Per (scheme, p): max/min of the moment across the step ladder.
    std::vector<std::pair<std::pair<Scheme, double>, double>> spread;
    bool all_finite = true;
    bool stable = true;  // every spread <= config.moment_growth_factor
};

/// Empirical E sup_t |Z(t)|^p along the step ladder.
inline MomentTable moment_check(const ExperimentConfig& config) {
    auto probe = config;
    probe.reference = ReferenceMode::FineEM;  // closed form not needed here
    validate_config(probe);
    const std::size_t n_schemes = config.schemes.size();
    const std::size_t n_deltas = config.deltas.size();
    std::vector<double> sups(config.samples * n_schemes * n_deltas, 0.0);
    parallel_for(config.samples, config.threads, [&](std::size_t m) {
        const CoupledSample sample = draw_coupled_sample(config, m, config.deltas);
        std::visit(
            [&](const auto& model) {
                for (std::size_t s = 0; s < n_schemes; ++s)
                    for (std::size_t d = 0; d < n_deltas; ++d)
                        sups[(m * n_schemes + s) * n_deltas + d] =
                            sup_norm(solve_on_union(model, config.schemes[s], sample, config.deltas[d]));
            },
            config.model);
    });

    MomentTable table;
    std::vector<double> column(config.samples);
    for (std::size_t s = 0; s < n_schemes; ++s) {
        for (double p : config.p_list) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = 0.0;
            for (std::size_t d = 0; d < n_deltas; ++d) {
                for (std::size_t m = 0; m < config.samples; ++m) column[m] = sups[(m * n_schemes + s) * n_deltas + d];
                const double moment = detail::mean_power(column, p);
                const bool finite = std::isfinite(moment);
                table.rows.push_back({config.schemes[s], p, config.deltas[d], moment, finite});
                table.all_finite = table.all_finite && finite;
                lo = std::min(lo, moment);
                hi = std::max(hi, moment);
            }
            const double spread = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
            table.spread.push_back({{config.schemes[s], p}, spread});
            table.stable = table.stable && std::isfinite(spread) && spread <= config.moment_growth_factor;
        }
    }
    return table;
}

struct LocalErrorRow {
    double p;
    double delta;
    double max_moment;  // max over midpoints of E|Z(t_mid) - Z_k|^p
};

struct LocalErrorReport {
    std::vector<LocalErrorRow> rows;
    std::vector<std::pair<double, OrderFit>> fits;  // per p, slope expected ~ p/2
};

/// Jump-adapted scheme: E|Z(t) - Zbar(t)|^p at the midpoint of every uniform
/// interval, averaged over samples, then maximized over midpoints.
inline LocalErrorReport local_error_check(const ExperimentConfig& config) {
    auto probe = config;
    probe.reference = ReferenceMode::FineEM;
    validate_config(probe);
    std::vector<double> steps = config.deltas;
    steps.push_back(config.deltas.back() / 2.0);
    const std::size_t n_deltas = config.deltas.size();
    const std::size_t n_p = config.p_list.size();

    // Midpoint counts per step, and per-sample offsets into a flat buffer.
    std::vector<std::size_t> mid_count(n_deltas), offset(n_deltas + 1, 0);
    for (std::size_t d = 0; d < n_deltas; ++d) {
        mid_count[d] = TimeGrid::uniform(config.horizon, config.deltas[d]).interval_count();
        offset[d + 1] = offset[d] + mid_count[d];
    }
    const std::size_t per_sample = offset.back();
    std::vector<double> gaps(config.samples * per_sample, 0.0);  // |Z(mid) - Z_k|

    parallel_for(config.samples, config.threads, [&](std::size_t m) {
        const CoupledSample sample = draw_coupled_sample(config, m, steps);
        std::visit(
            [&](const auto& model) {
                for (std::size_t d = 0; d < n_deltas; ++d) {
                    const double step = config.deltas[d];
                    const SolutionPath disc = em_jump_adapted(model, build_refined_grid(sample.chain, step), sample.bm);
                    const TimeGrid uniform = TimeGrid::uniform(config.horizon, step);
                    const auto gridpoints = disc.gridpoint_indices();
                    for (std::size_t k = 0; k < uniform.interval_count(); ++k) {
                        const std::size_t event = gridpoints[k];
                        const double mid = 0.5 * (uniform[k] + uniform[k + 1]);
                        const Eigen::VectorXd z_mid = interpolant_eval(disc, model, sample.bm, mid);
                        gaps[m * per_sample + offset[d] + k] = (z_mid - disc.values[event]).norm();
                    }
                }
            },
            config.model);
    });

    LocalErrorReport report;
    for (std::size_t pi = 0; pi < n_p; ++pi) {
        const double p = config.p_list[pi];
        std::vector<std::pair<double, double>> points;
        for (std::size_t d = 0; d < n_deltas; ++d) {
            double worst = 0.0;
            for (std::size_t k = 0; k < mid_count[d]; ++k) {
                double sum = 0.0;
                for (std::size_t m = 0; m < config.samples; ++m) sum += std::pow(gaps[m * per_sample + offset[d] + k], p);
                worst = std::max(worst, sum / static_cast<double>(config.samples));
            }
            report.rows.push_back({p, config.deltas[d], worst});
            points.emplace_back(config.deltas[d], worst);
        }
        bool positive = std::all_of(points.begin(), points.end(), [](const auto& e) { return e.second > 0.0; });
        if (positive && points.size() >= 2) report.fits.emplace_back(p, estimate_order(points));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Chain validation

struct ChainCheck {
    std::string check;  // transition | holding_ks | occupancy
    std::size_t from = 0;
    std::size_t to = 0;
    double observed = 0.0;
    double expected = 0.0;
    double bound = 0.0;  // 3-sigma half-width, or KS p-value
    std::size_t count = 0;
    bool passed = true;
};

struct ChainValidationReport {
    std::vector<ChainCheck> checks;
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const ChainCheck& c) { return c.passed; });
    }
};

struct ChainValidationOptions {
    Regime initial = 0;
    double ks_significance = 0.01;
    std::size_t occupancy_batches = 50;
    double uniform_skew = 1.0;  // test hook, see RandomStream::skew_uniforms
    SimulationLimits limits{1'000'000};
};

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_tail(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1) ? term : -term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test against Exp(rate). Returns (D, p-value) using the
/// Stephens small-sample correction of the Kolmogorov tail.
inline std::pair<double, double> ks_exponential(std::vector<double> sample, double rate) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

/// (a) skeleton transition frequencies vs exp(Gamma step), 3-sigma binomial
/// bounds; (b) KS of holding times per state vs Exp(-gamma_ii);
/// (c) time occupancy vs the stationary law, 3 batch-means standard errors.
/// One exact path of horizon samples * step supplies all three.
inline ChainValidationReport validate_chain_statistics(const GeneratorMatrix& gen, double step, std::size_t samples,
                                                       std::uint64_t seed, const ChainValidationOptions& opts = {}) {
    if (samples < 1000) throw Error(ErrorKind::InvalidArgument, "chain validation needs >= 1000 samples");
    if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    const std::size_t n = gen.n_states();
    RandomStream rng(seed);
    rng.skew_uniforms(opts.uniform_skew);
    const double horizon = static_cast<double>(samples) * step;
    const ChainPath path = simulate_exact_path(gen, opts.initial, horizon, rng, opts.limits);

    ChainValidationReport report;

    // (a)
    const auto skeleton = skeleton_from_path(path, step);
    std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(n, 0));
    std::vector<std::size_t> from_totals(n, 0);
    for (std::size_t k = 0; k + 1 < skeleton.size() && k < samples; ++k) {
        ++counts[skeleton[k]][skeleton[k + 1]];
        ++from_totals[skeleton[k]];
    }
    const TransitionMatrix pmat = matrix_exponential(gen, step);
    for (std::size_t i = 0; i < n; ++i) {
        if (from_totals[i] == 0) continue;
        const auto total = static_cast<double>(from_totals[i]);
        for (std::size_t j = 0; j < n; ++j) {
            const double expected = pmat(i, j);
            const double observed = static_cast<double>(counts[i][j]) / total;
            const double bound = 3.0 * std::sqrt(expected * (1.0 - expected) / total);
            report.checks.push_back({"transition", i, j, observed, expected, bound, from_totals[i],
                                     std::abs(observed - expected) <= bound + 1e-12});
        }
    }

    // (b) completed holding times only; the final segment is censored at T.
    std::vector<std::vector<double>> holding(n);
    for (std::size_t k = 0; k + 1 < path.segment_count(); ++k) {
        holding[path.states[k]].push_back(path.switch_times[k + 1] - path.switch_times[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (gen.exit_rate(i) == 0.0 || holding[i].empty()) continue;
        const double mean = [&] {
            double s = 0.0;
            for (double h : holding[i]) s += h;
            return s / static_cast<double>(holding[i].size());
        }();
        const auto [d, pvalue] = ks_exponential(holding[i], gen.exit_rate(i));
        (void)d;
        report.checks.push_back({"holding_ks", i, i, mean, 1.0 / gen.exit_rate(i), pvalue, holding[i].size(),
                                 pvalue >= opts.ks_significance});
    }

    // (c)
    if (closed_class_count(gen) == 1) {
        const Eigen::VectorXd pi = stationary_distribution(gen);
        const std::size_t batches = opts.occupancy_batches;
        const double width = horizon / static_cast<double>(batches);
        std::vector<std::vector<double>> batch_occ(n, std::vector<double>(batches, 0.0));
        for (std::size_t k = 0; k < path.segment_count(); ++k) {
            const double start = path.switch_times[k];
            const double stop = k + 1 < path.segment_count() ? path.switch_times[k + 1] : horizon;
            const auto first = std::min(batches - 1, static_cast<std::size_t>(start / width));
            const auto last = std::min(batches - 1, static_cast<std::size_t>(stop / width));
            for (std::size_t b = first; b <= last; ++b) {
                const double lo = std::max(start, static_cast<double>(b) * width);
                const double hi = std::min(stop, static_cast<double>(b + 1) * width);
                if (hi > lo) batch_occ[path.states[k]][b] += (hi - lo) / width;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double mean = 0.0;
            for (double x : batch_occ[i]) mean += x;
            mean /= static_cast<double>(batches);
            double var = 0.0;
            for (double x : batch_occ[i]) var += (x - mean) * (x - mean);
            var /= static_cast<double>(batches - 1);
            const double se = std::sqrt(var / static_cast<double>(batches));
            report.checks.push_back({"occupancy", i, i, mean, pi(static_cast<Eigen::Index>(i)), 3.0 * se, batches,
                                     std::abs(mean - pi(static_cast<Eigen::Index>(i))) <= 3.0 * se + 1e-12});
        }
    }
    return report;
}

}  // namespace hybridem
