#include <hybridem/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    using namespace hybridem;

    CLI::App app{"Euler-Maruyama schemes for SDEs with Markovian switching"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::string config_path, generator_path, out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t threads = 0, samples = 0;
    double horizon = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "master seed (overrides config)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker threads (results do not depend on it)");
        cmd->add_flag("--smoke", opts.smoke, "shrink M and the step ladder for quick runs");
    };

    auto* chain = app.add_subcommand("chain", "Markov chain utilities");
    chain->require_subcommand(1);
    auto* simulate = chain->add_subcommand("simulate", "simulate one exact chain path");
    auto* validate = chain->add_subcommand("validate", "statistical checks of the chain samplers");
    for (auto* cmd : {simulate, validate}) {
        add_common(cmd);
        cmd->add_option("--generator", generator_path, "generator JSON {\"states\":N,\"rates\":[[...]]}");
    }
    simulate->add_option("--horizon", horizon, "path horizon T");
    validate->add_option("--samples", samples, "number of skeleton transitions");
    validate->add_option("--skew-uniforms", opts.uniform_skew, "test hook: replace uniforms u by u^x")
        ->group("");

    auto* solve = app.add_subcommand("solve", "solve one coupled sample with every scheme");
    add_common(solve);
    auto* converge = app.add_subcommand("converge", "strong-error convergence experiment");
    add_common(converge);
    converge->add_option("--samples", samples, "Monte Carlo sample count M");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (!config_path.empty()) opts.config = config_path;
    if (!generator_path.empty()) opts.generator = generator_path;
    opts.out = out_dir;
    for (auto* cmd : {simulate, validate, solve, converge}) {
        if (cmd->count("--seed")) opts.seed = seed;
        if (cmd->count("--threads")) opts.threads = threads;
    }
    if (simulate->count("--horizon")) opts.horizon = horizon;
    if (validate->count("--samples") || converge->count("--samples")) opts.samples = samples;

    if (*simulate) return cmd_chain_simulate(opts, std::cout, std::cerr);
    if (*validate) return cmd_chain_validate(opts, std::cout, std::cerr);
    if (*solve) return cmd_solve(opts, std::cout, std::cerr);
    return cmd_converge(opts, std::cout, std::cerr);
}
