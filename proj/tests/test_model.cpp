#include <catch2/catch_amalgamated.hpp>

#include <hybridem/model.hpp>

#include <cmath>
#include <limits>

using namespace hybridem;

namespace {

Eigen::VectorXd scalar(double x) { return Eigen::VectorXd::Constant(1, x); }

const LinearHybridModel kLinear{{1.0, 2.0}, {2.0, 1.0}, 1.0, 0};

}  // namespace

TEST_CASE("drift and diffusion evaluation", "[model]") {
    CHECK(drift_eval(kLinear, scalar(3.0), 1)(0) == 6.0);
    CHECK(diffusion_eval(kLinear, scalar(3.0), 0)(0, 0) == 6.0);
    CHECK(drift_eval(kLinear, scalar(0.0), 0)(0) == 0.0);
    CHECK(diffusion_eval(kLinear, scalar(0.0), 1)(0, 0) == 0.0);
    CHECK_THROWS_AS(drift_eval(kLinear, scalar(1.0), 2), Error);
    CHECK_THROWS_AS(diffusion_eval(kLinear, scalar(1.0), 5), Error);

    const TrigHybridModel trig{{1.0, -1.0}, {0.5, 0.25}, {0.1, 0.2}, 0.0, 0};
    CHECK(drift_eval(trig, scalar(0.0), 1)(0) == 0.2);
    CHECK(diffusion_eval(trig, scalar(0.0), 0)(0, 0) == 0.5);
}

TEST_CASE("evaluation rejects malformed user coefficients", "[model]") {
    const HybridModel wrong_shape(
        2, 1, 1, [](const Eigen::VectorXd& z, Regime) { return Eigen::VectorXd(z); },
        [](const Eigen::VectorXd&, Regime) { return Eigen::MatrixXd::Zero(2, 2); }, Eigen::VectorXd::Zero(2));
    try {
        diffusion_eval(wrong_shape, Eigen::VectorXd::Zero(2), 0);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
    CHECK_THROWS_AS(drift_eval(wrong_shape, scalar(1.0), 0), Error);

    const HybridModel blows_up(
        1, 1, 1, [](const Eigen::VectorXd&, Regime) { return scalar(std::numeric_limits<double>::quiet_NaN()); },
        [](const Eigen::VectorXd&, Regime) { return Eigen::MatrixXd::Zero(1, 1); }, scalar(0.0));
    try {
        drift_eval(blows_up, scalar(1.0), 0);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFinite);
    }

    CHECK_THROWS_AS(HybridModel(
                        1, 1, 2, [](const Eigen::VectorXd& z, Regime) { return Eigen::VectorXd(z); },
                        [](const Eigen::VectorXd&, Regime) { return Eigen::MatrixXd::Zero(1, 1); }, scalar(0.0), 2),
                    Error);
}

TEST_CASE("evaluation is pure", "[model][property]") {
    RandomStream rng(4);
    const TrigHybridModel trig{{1.0, -2.0}, {0.5, 1.5}, {0.3, -0.1}, 1.0, 0};
    for (int k = 0; k < 200; ++k) {
        const auto z = scalar(20.0 * rng.uniform() - 10.0);
        const Regime i = rng.uniform() < 0.5 ? 0 : 1;
        CHECK(drift_eval(trig, z, i) == drift_eval(trig, z, i));
        CHECK(diffusion_eval(trig, z, i) == diffusion_eval(trig, z, i));
    }
}

TEST_CASE("lipschitz_probe on the linear family", "[model]") {
    RandomStream rng(12);
    const double estimate = lipschitz_probe(kLinear, ProbeBox{}, 1000, rng);
    CHECK(estimate <= 2.0);
    CHECK(estimate == Catch::Approx(2.0).margin(1e-12));
    CHECK(kLinear.lipschitz_constant() == 2.0);

    const TrigHybridModel constant{{0.0, 0.0}, {0.0, 0.0}, {1.0, -1.0}, 0.0, 0};
    CHECK(lipschitz_probe(constant, ProbeBox{}, 100, rng) == 0.0);
    CHECK_THROWS_AS(lipschitz_probe(kLinear, ProbeBox{}, 1, rng), Error);
}

TEST_CASE("lipschitz_probe is a running max over a fixed stream", "[model][property]") {
    const TrigHybridModel trig{{1.0, -2.0}, {0.5, 1.5}, {0.3, -0.1}, 1.0, 0};
    double previous = 0.0;
    for (std::size_t samples : {2u, 5u, 20u, 100u, 500u}) {
        RandomStream rng(77);
        const double est = lipschitz_probe(trig, ProbeBox{}, samples, rng);
        CHECK(est >= previous);
        CHECK(est <= 2.0);
        previous = est;
    }
}

TEST_CASE("lipschitz_probe never exceeds the linear-family constant", "[model][property]") {
    RandomStream coeffs(19);
    for (int trial = 0; trial < 50; ++trial) {
        LinearHybridModel m{{0, 0, 0}, {0, 0, 0}, 1.0, 0};
        for (std::size_t i = 0; i < 3; ++i) {
            m.a[i] = std::ldexp(std::round(64.0 * (coeffs.uniform() - 0.5)), -3);
            m.b[i] = std::ldexp(std::round(64.0 * (coeffs.uniform() - 0.5)), -3);
        }
        RandomStream rng(static_cast<std::uint64_t>(trial));
        const double l = m.lipschitz_constant();
        // (f(z) - f(w)) / (z - w) carries relative rounding up to ~eps * |z| / |z - w|.
        CHECK(lipschitz_probe(m, ProbeBox{}, 200, rng) <= l * (1.0 + 1e-9));
    }
}

TEST_CASE("growth_probe", "[model]") {
    RandomStream rng(2);
    CHECK(growth_probe(kLinear, ProbeBox{}, 1000, rng) <= 2.0);

    const LinearHybridModel zero{{0.0}, {0.0}, 1.0, 0};
    CHECK(growth_probe(zero, ProbeBox{}, 100, rng) == 0.0);

    const HybridModel square(
        1, 1, 1, [](const Eigen::VectorXd& z, Regime) { return Eigen::VectorXd(z.array().square()); },
        [](const Eigen::VectorXd&, Regime) { return Eigen::MatrixXd::Zero(1, 1); }, scalar(0.0));
    const ProbeBox large{-1000.0, 1000.0};
    CHECK(growth_probe(square, large, 1000, rng) > 100.0);
    CHECK_FALSE(within_growth_bound(square, 10.0, large, 1000, rng));
    CHECK(within_growth_bound(kLinear, 2.0, ProbeBox{}, 1000, rng));
}
