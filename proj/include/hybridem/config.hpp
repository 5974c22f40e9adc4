#pragma once

// JSON experiment configuration. See README.md for the schema.

#include <hybridem/ctmc.hpp>
#include <hybridem/error.hpp>
#include <hybridem/harness.hpp>
#include <hybridem/model.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace hybridem {

inline constexpr int kSchemaVersion = 1;

/// Everything the CLI subcommands read from a config file.
struct RunConfig {
    ExperimentConfig experiment;
    double solve_step = 0.0;  // 0 = smallest step of the ladder
    double chain_step = 0.1;
    std::size_t chain_samples = 100'000;
};

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

/// {"states": N, "rates": [[...], ...]}
inline GeneratorMatrix parse_generator(const nlohmann::json& j) {
    try {
        const auto rows = j.at("rates").get<std::vector<std::vector<double>>>();
        const auto n = j.contains("states") ? j.at("states").get<std::size_t>() : rows.size();
        if (rows.size() != n) {
            throw Error(ErrorKind::NonSquare, "\"states\" is " + std::to_string(n) + " but rates has " +
                                                  std::to_string(rows.size()) + " rows");
        }
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != n) throw Error(ErrorKind::NonSquare, "row " + std::to_string(i + 1) + " has " +
                                                                          std::to_string(rows[i].size()) + " entries");
            for (std::size_t k = 0; k < n; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        return validate_generator(m);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("generator: ") + e.what());
    }
}

inline GeneratorMatrix load_generator(const std::filesystem::path& path) { return parse_generator(read_json_file(path)); }

/// {"model":"linear","a":[...],"b":[...],"z0":...} or
/// {"model":"trig","a":[...],"b":[...],"c":[...],"z0":...}
inline ModelSpec parse_model(const nlohmann::json& j, Regime initial) {
    try {
        const auto kind = j.at("model").get<std::string>();
        const auto a = j.at("a").get<std::vector<double>>();
        const auto b = j.at("b").get<std::vector<double>>();
        const double z0 = j.value("z0", 1.0);
        if (kind == "linear") return LinearHybridModel{a, b, z0, initial};
        if (kind == "trig") return TrigHybridModel{a, b, j.at("c").get<std::vector<double>>(), z0, initial};
        throw Error(ErrorKind::Config, "unknown model \"" + kind + "\" (expected linear or trig)");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("model: ") + e.what());
    }
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "jump_adapted") return Scheme::JumpAdapted;
    if (s == "classical") return Scheme::Classical;
    throw Error(ErrorKind::Config, "unknown scheme \"" + s + "\"");
}

inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    RunConfig rc;
    auto& ex = rc.experiment;
    try {
        const int version = j.value("schema_version", kSchemaVersion);
        if (version != kSchemaVersion) {
            throw Error(ErrorKind::Config, "unsupported schema_version " + std::to_string(version));
        }
        const auto initial_one_based = j.value("initial_regime", std::size_t{1});
        if (initial_one_based < 1) throw Error(ErrorKind::Config, "initial_regime is 1-based");
        const Regime initial = initial_one_based - 1;

        if (j.contains("generator")) {
            const auto& g = j.at("generator");
            ex.generator = g.is_string() ? load_generator(base_dir / g.get<std::string>()) : parse_generator(g);
        }
        if (j.contains("model")) {
            ex.model = parse_model(j.at("model"), initial);
        } else {
            std::visit([&](auto& m) { m.i0 = initial; }, ex.model);
        }
        ex.horizon = j.value("horizon", ex.horizon);
        if (j.contains("p")) ex.p_list = j.at("p").get<std::vector<double>>();
        if (j.contains("deltas")) {
            ex.deltas = j.at("deltas").get<std::vector<double>>();
        } else if (j.contains("levels")) {
            const auto lv = j.at("levels").get<std::vector<int>>();
            if (lv.size() != 2 || lv[0] > lv[1]) throw Error(ErrorKind::Config, "levels must be [first, last]");
            ex.deltas = dyadic_ladder(ex.horizon, lv[0], lv[1]);
        } else {
            ex.deltas = dyadic_ladder(ex.horizon, 4, 9);
        }
        ex.samples = j.value("samples", ex.samples);
        ex.seed = j.value("seed", ex.seed);
        const auto reference = j.value("reference", std::string("closed_form"));
        if (reference == "closed_form") {
            ex.reference = ReferenceMode::ClosedForm;
        } else if (reference == "fine_em") {
            ex.reference = ReferenceMode::FineEM;
        } else {
            throw Error(ErrorKind::Config, "reference must be closed_form or fine_em");
        }
        ex.reference_refinement = j.value("reference_refinement", ex.reference_refinement);
        if (j.contains("schemes")) {
            ex.schemes.clear();
            for (const auto& s : j.at("schemes").get<std::vector<std::string>>()) ex.schemes.push_back(parse_scheme(s));
        }
        const auto se = j.value("stderr", std::string("delta"));
        if (se == "delta") {
            ex.stderr_method = StderrMethod::Delta;
        } else if (se == "bootstrap") {
            ex.stderr_method = StderrMethod::Bootstrap;
        } else {
            throw Error(ErrorKind::Config, "stderr must be delta or bootstrap");
        }
        ex.bootstrap_resamples = j.value("bootstrap_resamples", ex.bootstrap_resamples);
        ex.moment_growth_factor = j.value("moment_growth_factor", ex.moment_growth_factor);
        ex.limits.max_switches = j.value("max_switches", ex.limits.max_switches);
        ex.threads = j.value("threads", ex.threads);
        if (j.contains("solve")) rc.solve_step = j.at("solve").value("delta", 0.0);
        if (j.contains("chain")) {
            rc.chain_step = j.at("chain").value("step", rc.chain_step);
            rc.chain_samples = j.at("chain").value("samples", rc.chain_samples);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_json_file(path), path.parent_path());
}

}  // namespace hybridem
