#include <catch2/catch_amalgamated.hpp>

#include <hybridem/harness.hpp>
#include <hybridem/solvers.hpp>

#include <cmath>
#include <limits>

using namespace hybridem;
using Catch::Approx;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
    return (Eigen::MatrixXd(2, 2) << a, b, c, d).finished();
}

// Literal recursion: J_0 = 0, J_i = min(next switch after J_{i-1}, next
// gridpoint after J_{i-1}), stopping at T.
std::vector<double> enumerate_events(const ChainPath& path, double step) {
    std::vector<double> events{0.0};
    const double horizon = path.horizon;
    for (;;) {
        const double prev = events.back();
        double next = horizon;
        for (std::size_t k = 1; k < path.switch_times.size(); ++k) {
            if (path.switch_times[k] > prev) {
                next = std::min(next, path.switch_times[k]);
                break;
            }
        }
        for (std::size_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * step;
            if (t > horizon) break;
            if (t > prev) {
                next = std::min(next, t);
                break;
            }
        }
        if (!(next > prev)) break;
        events.push_back(next);
        if (next >= horizon) break;
    }
    return events;
}

const TrigHybridModel kConstantDrift{{0.0, 0.0}, {0.0, 0.0}, {1.0, -1.0}, 0.0, 0};

BrownianPath zero_brownian(const TimeGrid& g) {
    return BrownianPath::from_values(g, Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(g.size())));
}

struct Sample {
    ChainPath chain;
    BrownianPath bm;
};

Sample random_sample(const GeneratorMatrix& gen, double horizon, std::vector<double> steps, RandomStream& rng) {
    ChainPath chain = simulate_exact_path(gen, 0, horizon, rng);
    TimeGrid g = union_grid(chain, steps);
    return {chain, generate_increments(g, 1, rng)};
}

}  // namespace

TEST_CASE("build_refined_grid examples", "[solvers]") {
    const ChainPath constant{1.0, {0.0}, {0}};
    const auto g0 = build_refined_grid(constant, 0.25);
    CHECK(g0.events == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(g0.regimes == std::vector<Regime>(5, 0));

    const ChainPath two{1.0, {0.0, 0.1, 0.6}, {0, 1, 0}};
    const auto g = build_refined_grid(two, 0.25);
    CHECK(g.events == std::vector<double>{0.0, 0.1, 0.25, 0.5, 0.6, 0.75, 1.0});
    CHECK(g.regimes == std::vector<Regime>{0, 1, 1, 1, 0, 0, 0});
    CHECK(g.owner_interval == std::vector<std::size_t>{0, 0, 1, 2, 2, 3, 4});
    CHECK(g.size() == 7);
    CHECK(g.size() <= whole_steps(1.0, 0.25) + two.segment_count() + 1);
    CHECK(g.events == enumerate_events(two, 0.25));

    const ChainPath on_grid{1.0, {0.0, 0.5}, {0, 1}};
    const auto gd = build_refined_grid(on_grid, 0.25);
    CHECK(gd.events == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(gd.regimes[2] == 1);  // post-switch at the coincident event
}

TEST_CASE("build_refined_grid with a partial final interval", "[solvers]") {
    const ChainPath path{1.0, {0.0, 0.95}, {0, 1}};
    const auto g = build_refined_grid(path, 0.3);
    CHECK(g.events.back() == 1.0);
    CHECK(g.events.size() == 6);  // 0, .3, .6, .9, .95, 1
    CHECK(g.size() <= whole_steps(1.0, 0.3) + path.segment_count() + 1);
}

TEST_CASE("refined grid matches the literal recursion and keeps regimes constant", "[solvers][property]") {
    RandomStream rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const double l = 10.0 * rng.uniform(), m = 10.0 * rng.uniform();
        const auto gen = validate_generator(mat2(-l, l, m, -m));
        const auto path = simulate_exact_path(gen, 0, 1.0, rng);
        const double step = std::ldexp(1.0, -static_cast<int>(rng.uniform() * 8));
        const auto g = build_refined_grid(path, step);
        CHECK(g.events == enumerate_events(path, step));
        CHECK(g.size() <= whole_steps(1.0, step) + path.segment_count() + 1);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            CHECK(g.regimes[i] == state_at(path, g.events[i]));
            CHECK(g.regimes[i] == state_at(path, 0.5 * (g.events[i] + g.events[i + 1])));
        }
    }
}

TEST_CASE("jump-adapted vs classical on a deterministic switching example", "[solvers]") {
    const ChainPath path{1.0, {0.0, 0.5}, {0, 1}};
    const auto g = build_refined_grid(path, 1.0);
    const TimeGrid bm_grid({0.0, 0.5, 1.0});
    const auto bm = zero_brownian(bm_grid);

    const auto z = em_jump_adapted(kConstantDrift, g, bm);
    CHECK(z.values.back()(0) == 0.0);  // 1 * 0.5 + (-1) * 0.5

    const auto x = em_classical(kConstantDrift, skeleton_from_path(path, 1.0), 1.0, bm);
    CHECK(x.values.back()(0) == 1.0);  // regime frozen at alpha(0)
}

TEST_CASE("schemes coincide bitwise without switches", "[solvers][property]") {
    RandomStream rng(5);
    const LinearHybridModel model{{1.0, 2.0}, {2.0, 1.0}, 1.0, 0};
    const auto gen = validate_generator(Eigen::MatrixXd::Zero(2, 2));
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_sample(gen, 1.0, {1.0 / 16, 1.0 / 64}, rng);
        for (double step : {1.0 / 16, 1.0 / 64}) {
            const auto z = em_jump_adapted(model, build_refined_grid(s.chain, step), s.bm);
            const auto x = em_classical(model, skeleton_from_path(s.chain, step), step, s.bm);
            REQUIRE(z.times == x.times);
            CHECK(z.values == x.values);
        }
    }
}

TEST_CASE("em_classical degenerate cases", "[solvers]") {
    RandomStream rng(9);
    const TimeGrid g = TimeGrid::uniform(1.0, 0.125);
    const auto bm = generate_increments(g, 1, rng);

    const LinearHybridModel zero{{0.0, 0.0}, {0.0, 0.0}, 2.5, 0};
    const auto x = em_classical(zero, std::vector<Regime>(9, 1), 0.125, bm);
    for (const auto& v : x.values) CHECK(v(0) == 2.5);

    // Single regime: textbook EM on the same increments.
    const LinearHybridModel gbm{{0.3}, {0.7}, 1.0, 0};
    const auto y = em_classical(gbm, std::vector<Regime>(9, 0), 0.125, bm);
    double ref = 1.0;
    for (std::size_t k = 0; k < 8; ++k) {
        ref = ref + 0.3 * ref * (g[k + 1] - g[k]) + 0.7 * ref * bm.difference(k, k + 1)(0);
        CHECK(y.values[k + 1](0) == ref);
    }

    try {
        em_classical(gbm, std::vector<Regime>(5, 0), 0.125, bm);
        FAIL("expected LengthMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LengthMismatch);
    }
}

TEST_CASE("em_jump_adapted requires every event on the Brownian grid", "[solvers]") {
    const ChainPath path{1.0, {0.0, 0.3}, {0, 1}};
    const auto g = build_refined_grid(path, 0.25);
    const auto bm = zero_brownian(TimeGrid::uniform(1.0, 0.25));
    try {
        em_jump_adapted(kConstantDrift, g, bm);
        FAIL("expected GridMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::GridMismatch);
    }
}

TEST_CASE("interpolant reproduces discrete values and is linear for constant drift", "[solvers]") {
    const ChainPath path{1.0, {0.0, 0.3}, {0, 1}};
    const double step = 0.25;
    const auto grid = union_grid(path, std::vector<double>{step, step / 8});
    const auto bm = zero_brownian(grid);
    const auto z = em_jump_adapted(kConstantDrift, build_refined_grid(path, step), bm);

    CHECK(interpolant_eval(z, kConstantDrift, bm, 0.0)(0) == 0.0);
    for (std::size_t i = 0; i < z.times.size(); ++i) CHECK(interpolant_eval(z, kConstantDrift, bm, z.times[i]) == z.values[i]);

    // z(t) = t up to 0.3, then 0.6 - t.
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid[j];
        const double expected = t <= 0.3 ? t : 0.6 - t;
        CHECK(interpolant_eval(z, kConstantDrift, bm, t)(0) == Approx(expected).margin(1e-14));
    }
    try {
        interpolant_eval(z, kConstantDrift, bm, 0.01);
        FAIL("expected TimeNotRealized");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TimeNotRealized);
    }
}

TEST_CASE("interpolate_on_grid agrees with pointwise evaluation", "[solvers][property]") {
    RandomStream rng(14);
    const auto gen = validate_generator(mat2(-3, 3, 4, -4));
    const TrigHybridModel trig{{1.0, -0.5}, {0.8, 0.3}, {0.2, -0.4}, 0.5, 0};
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = random_sample(gen, 1.0, {1.0 / 8, 1.0 / 128}, rng);
        for (Scheme scheme : {Scheme::JumpAdapted, Scheme::Classical}) {
            const auto disc = scheme == Scheme::JumpAdapted
                                  ? em_jump_adapted(trig, build_refined_grid(s.chain, 1.0 / 8), s.bm)
                                  : em_classical(trig, skeleton_from_path(s.chain, 1.0 / 8), 1.0 / 8, s.bm);
            const auto cont = interpolate_on_grid(disc, trig, s.bm);
            for (std::size_t j = 0; j < cont.times.size(); ++j) {
                CHECK(cont.values[j] == interpolant_eval(disc, trig, s.bm, cont.times[j]));
            }
        }
    }
}

TEST_CASE("exact_linear_solution", "[solvers]") {
    const ChainPath path{1.0, {0.0, 0.5}, {0, 1}};
    const auto bm = zero_brownian(TimeGrid({0.0, 0.5, 1.0}));
    const LinearHybridModel drift_only{{1.0, 2.0}, {0.0, 0.0}, 1.0, 0};
    CHECK(exact_linear_solution(drift_only, path, bm).values.back()(0) == Approx(std::exp(1.5)).epsilon(1e-15));

    const LinearHybridModel still{{0.0, 0.0}, {0.0, 0.0}, 3.0, 0};
    for (const auto& v : exact_linear_solution(still, path, bm).values) CHECK(v(0) == 3.0);

    const auto coarse = zero_brownian(TimeGrid({0.0, 1.0}));
    try {
        exact_linear_solution(drift_only, path, coarse);
        FAIL("expected RegimeNotConstant");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RegimeNotConstant);
    }
}

TEST_CASE("geometric Brownian motion: closed form and EM strong rate", "[solvers][statistical]") {
    const LinearHybridModel gbm{{0.0}, {1.0}, 1.0, 0};
    const ChainPath path{1.0, {0.0}, {0}};
    const std::vector<double> steps = dyadic_ladder(1.0, 3, 8);
    const int samples = 500;
    RandomStream rng(606);
    std::vector<double> mse(steps.size(), 0.0);
    for (int m = 0; m < samples; ++m) {
        const auto bm = generate_increments(TimeGrid::uniform(1.0, steps.back()), 1, rng);
        const auto exact = exact_linear_solution(gbm, path, bm);
        CHECK(exact.values.back()(0) == Approx(std::exp(bm.value(bm.grid().size() - 1)(0) - 0.5)).epsilon(1e-13));
        for (std::size_t d = 0; d < steps.size(); ++d) {
            const auto x = em_classical(gbm, skeleton_from_path(path, steps[d]), steps[d], bm);
            const double e = x.values.back()(0) - exact.values.back()(0);
            mse[d] += e * e / samples;
        }
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t d = 0; d < steps.size(); ++d) pts.emplace_back(steps[d], std::sqrt(mse[d]));
    const auto fit = estimate_order(pts);
    CHECK(fit.slope > 0.4);
    CHECK(fit.slope < 0.6);
}

TEST_CASE("jump-adapted is exact for constant-per-regime drift without noise", "[solvers][property]") {
    RandomStream rng(8);
    const auto gen = validate_generator(mat2(-5, 5, 3, -3));
    for (int trial = 0; trial < 200; ++trial) {
        const auto chain = simulate_exact_path(gen, 0, 1.0, rng);
        double exact = 0.0;
        for (std::size_t k = 0; k < chain.segment_count(); ++k) {
            const double stop = k + 1 < chain.segment_count() ? chain.switch_times[k + 1] : 1.0;
            exact += kConstantDrift.c[chain.states[k]] * (stop - chain.switch_times[k]);
        }
        const double step = std::ldexp(1.0, -static_cast<int>(rng.uniform() * 9));
        const auto grid = union_grid(chain, std::vector<double>{step});
        const auto z = em_jump_adapted(kConstantDrift, build_refined_grid(chain, step), zero_brownian(grid));
        CHECK(std::abs(z.values.back()(0) - exact) <= 1e-12);
    }
}

TEST_CASE("multi-dimensional model runs through both schemes", "[solvers]") {
    // dz = A_i z dt + diag(s_i) dB, n = d = 2.
    const HybridModel model(
        2, 2, 2,
        [](const Eigen::VectorXd& z, Regime i) {
            Eigen::Matrix2d a;
            if (i == 0) a << -1.0, 0.5, 0.0, -2.0; else a << 0.2, 0.0, 1.0, -0.3;
            return Eigen::VectorXd(a * z);
        },
        [](const Eigen::VectorXd&, Regime i) {
            return Eigen::MatrixXd((i == 0 ? Eigen::Vector2d(0.3, 0.1) : Eigen::Vector2d(0.05, 0.4)).asDiagonal());
        },
        Eigen::Vector2d(1.0, -1.0));
    RandomStream rng(1);
    const auto gen = validate_generator(mat2(-2, 2, 2, -2));
    const auto chain = simulate_exact_path(gen, 0, 1.0, rng);
    const auto bm = generate_increments(union_grid(chain, std::vector<double>{1.0 / 32}), 2, rng);
    const auto z = em_jump_adapted(model, build_refined_grid(chain, 1.0 / 32), bm);
    const auto x = em_classical(model, skeleton_from_path(chain, 1.0 / 32), 1.0 / 32, bm);
    CHECK(z.values.back().allFinite());
    CHECK(x.values.back().allFinite());
    const auto wrong_dim = generate_increments(TimeGrid::uniform(1.0, 1.0 / 32), 1, rng);
    CHECK_THROWS_AS(em_classical(model, skeleton_from_path(chain, 1.0 / 32), 1.0 / 32, wrong_dim), Error);
}
