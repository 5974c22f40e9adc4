#pragma once

// Subcommand implementations behind the hybridem CLI. Kept in the library so
// they can be driven in-process by tests.
//
// Exit codes: 0 success, 1 statistical check failed, 2 configuration error,
// 3 runtime budget error.

#include <hybridem/config.hpp>
#include <hybridem/csv.hpp>
#include <hybridem/error.hpp>
#include <hybridem/harness.hpp>
#include <hybridem/solvers.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace hybridem {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitBudget = 3 };

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> generator;  // overrides the config's generator
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<double> horizon;
    std::optional<std::size_t> samples;
    std::filesystem::path out = ".";
    bool smoke = false;
    double uniform_skew = 1.0;  // hidden test hook for `chain validate`
};

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::JumpBudgetExceeded:
    case ErrorKind::NonFinite:
        return kExitBudget;
    default:
        return kExitConfig;
    }
}

namespace detail {

inline RunConfig resolve_config(const CommandOptions& opts) {
    RunConfig rc = opts.config ? load_run_config(*opts.config) : RunConfig{};
    auto& ex = rc.experiment;
    if (opts.generator) ex.generator = load_generator(*opts.generator);
    if (opts.seed) ex.seed = *opts.seed;
    if (opts.threads) ex.threads = *opts.threads;
    if (opts.horizon) ex.horizon = *opts.horizon;
    if (opts.samples) {
        ex.samples = *opts.samples;
        rc.chain_samples = *opts.samples;
    }
    if (opts.smoke) {
        ex.samples = std::min<std::size_t>(ex.samples, 50);
        if (ex.deltas.size() > 3) ex.deltas.resize(3);
        rc.chain_samples = std::min<std::size_t>(rc.chain_samples, 5000);
    }
    return rc;
}

inline void prepare_out_dir(const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out)) {
        throw Error(ErrorKind::Io, "cannot create output directory " + out.string());
    }
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

/// Rows of `sol` at the points of `grid` (which must be a subset of sol.times).
inline SolutionPath restrict_to(const SolutionPath& sol, const TimeGrid& grid) {
    SolutionPath out;
    out.scheme = sol.scheme;
    const auto idx = locate_points(TimeGrid(sol.times), grid.points());
    for (std::size_t i : idx) {
        out.times.push_back(sol.times[i]);
        out.values.push_back(sol.values[i]);
    }
    return out;
}

}  // namespace detail

/// Simulates one chain path and writes <out>/chain.csv.
inline int cmd_chain_simulate(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        const RunConfig rc = detail::resolve_config(opts);
        const auto& ex = rc.experiment;
        if (!(ex.horizon > 0.0)) throw Error(ErrorKind::Config, "horizon must be positive");
        const Regime initial = initial_regime(ex.model);
        if (initial >= ex.generator.n_states()) throw Error(ErrorKind::Config, "initial regime out of range");
        detail::prepare_out_dir(opts.out);
        RandomStream rng(ex.seed);
        const ChainPath path = simulate_exact_path(ex.generator, initial, ex.horizon, rng, ex.limits);
        const auto file = opts.out / "chain.csv";
        write_atomic(file, chain_path_csv(path));
        log << "wrote " << file.string() << " (" << path.switch_count() << " switches)\n";
        return static_cast<int>(kExitOk);
    });
}

/// Runs the chain statistical checks; exit 1 if any fails.
inline int cmd_chain_validate(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        const RunConfig rc = detail::resolve_config(opts);
        const auto& ex = rc.experiment;
        if (rc.chain_samples < 1000) throw Error(ErrorKind::Config, "chain validation needs >= 1000 samples");
        if (!(rc.chain_step > 0.0)) throw Error(ErrorKind::Config, "chain step must be positive");
        detail::prepare_out_dir(opts.out);
        ChainValidationOptions vopts;
        vopts.initial = std::min(initial_regime(ex.model), ex.generator.n_states() - 1);
        vopts.uniform_skew = opts.uniform_skew;
        vopts.limits = ex.limits;
        const auto report = validate_chain_statistics(ex.generator, rc.chain_step, rc.chain_samples, ex.seed, vopts);
        write_atomic(opts.out / "chain_validation.csv", chain_validation_csv(report));
        for (const auto& c : report.checks) {
            log << (c.passed ? "PASS " : "FAIL ") << c.check << " (" << c.from + 1 << "," << c.to + 1
                << ") observed=" << format_double(c.observed) << " expected=" << format_double(c.expected)
                << " bound=" << format_double(c.bound) << '\n';
        }
        return static_cast<int>(report.all_passed() ? kExitOk : kExitCheckFailed);
    });
}

/// One coupled sample: chain, Brownian and per-scheme solution CSVs on the
/// uniform gridpoints of the solve step.
inline int cmd_solve(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        RunConfig rc = detail::resolve_config(opts);
        auto& ex = rc.experiment;
        const double step = rc.solve_step > 0.0 ? rc.solve_step : ex.deltas.back();
        ex.deltas = {step};
        validate_config(ex);
        detail::prepare_out_dir(opts.out);

        const auto steps = union_steps(ex);
        const CoupledSample sample = draw_coupled_sample(ex, 0, steps);
        const TimeGrid uniform = TimeGrid::uniform(ex.horizon, step);

        write_atomic(opts.out / "chain.csv", chain_path_csv(sample.chain));
        write_atomic(opts.out / "brownian.csv", brownian_csv(sample.bm));
        std::visit(
            [&](const auto& model) {
                for (Scheme s : ex.schemes) {
                    const SolutionPath sol = solve_on_union(model, s, sample, step);
                    const auto file = opts.out / ("solution_" + std::string(scheme_name(s)) + ".csv");
                    write_atomic(file, solution_csv(detail::restrict_to(sol, uniform)));
                    log << "wrote " << file.string() << '\n';
                }
            },
            ex.model);
        const SolutionPath ref = reference_on_union(ex, sample);
        const auto ref_file = opts.out / ("solution_" + ref.scheme + ".csv");
        write_atomic(ref_file, solution_csv(detail::restrict_to(ref, uniform)));
        log << "wrote " << ref_file.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

inline std::string converge_summary(const ExperimentConfig& ex, const ErrorReport& report) {
    std::ostringstream os;
    os << "strong error experiment: M=" << ex.samples << " T=" << format_double(ex.horizon)
       << " steps=" << ex.deltas.size() << " seed=" << ex.seed << '\n';
    for (const auto& f : report.fits) {
        os << scheme_name(f.scheme) << " p=" << format_double(f.p);
        if (f.fit) {
            os << " order=" << format_double(f.fit->slope) << " intercept=" << format_double(f.fit->intercept)
               << " r2=" << format_double(f.fit->r2) << '\n';
        } else {
            os << " order=nan (non-positive errors)\n";
        }
    }
    return os.str();
}

/// Strong-error experiment: errors.csv, fit.csv, summary.txt.
inline int cmd_converge(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
    return detail::guarded(err, [&] {
        const RunConfig rc = detail::resolve_config(opts);
        validate_config(rc.experiment);
        detail::prepare_out_dir(opts.out);
        const ErrorReport report = run_strong_error(rc.experiment);
        write_atomic(opts.out / "errors.csv", errors_csv(report));
        write_atomic(opts.out / "fit.csv", fit_csv(report));
        const std::string summary = converge_summary(rc.experiment, report);
        write_atomic(opts.out / "summary.txt", summary);
        log << summary;
        return static_cast<int>(kExitOk);
    });
}

}  // namespace hybridem
