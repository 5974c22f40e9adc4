#pragma once

// Finite-state continuous-time Markov chains: generator validation,
// transition matrices, exact path simulation and the embedded-chain sampler.
//
// States are 0-based internally. Everything user-facing (CSV files, error
// messages, JSON) uses 1-based states.

#include <hybridem/error.hpp>
#include <hybridem/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace hybridem {

using Regime = std::size_t;

inline constexpr double kRowSumTolerance = 1e-12;

/// Validated CTMC rate matrix: off-diagonals >= 0, rows sum to exactly zero.
class GeneratorMatrix {
public:
    std::size_t n_states() const noexcept { return static_cast<std::size_t>(rates_.rows()); }
    const Eigen::MatrixXd& rates() const noexcept { return rates_; }
    double rate(Regime i, Regime j) const { return rates_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
    /// Total exit rate -gamma_ii.
    double exit_rate(Regime i) const { return -rate(i, i); }

    friend GeneratorMatrix validate_generator(const Eigen::MatrixXd& rates);

private:
    explicit GeneratorMatrix(Eigen::MatrixXd rates) : rates_(std::move(rates)) {}
    Eigen::MatrixXd rates_;
};

inline GeneratorMatrix validate_generator(const Eigen::MatrixXd& rates) {
    if (rates.rows() != rates.cols()) {
        throw Error(ErrorKind::NonSquare, "generator is " + std::to_string(rates.rows()) + "x" +
                                              std::to_string(rates.cols()));
    }
    if (rates.rows() < 1) throw Error(ErrorKind::NonSquare, "generator must have at least one state");
    if (!rates.allFinite()) throw Error(ErrorKind::NonFinite, "generator has non-finite entries");

    Eigen::MatrixXd out = rates;
    const Eigen::Index n = rates.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            if (rates(i, j) < 0.0) {
                throw Error(ErrorKind::NegativeOffDiagonal,
                            "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
            }
            off += rates(i, j);
        }
        if (std::abs(off + rates(i, i)) > kRowSumTolerance) {
            throw Error(ErrorKind::RowSumViolation, "row " + std::to_string(i + 1));
        }
        out(i, i) = -off;
    }
    return GeneratorMatrix(std::move(out));
}

/// P(t) = exp(Gamma t), stochastic rows.
struct TransitionMatrix {
    double step = 0.0;
    Eigen::MatrixXd probs;

    double operator()(Regime i, Regime j) const {
        return probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

namespace detail {

// Scaling and squaring around a diagonal (6,6) Pade approximant.
inline Eigen::MatrixXd expm_pade6(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);

    // c_k = (2q-k)! q! / ((2q)! k! (q-k)!), q = 6
    constexpr double c[7] = {1.0,
                             1.0 / 2.0,
                             5.0 / 44.0,
                             1.0 / 66.0,
                             1.0 / 792.0,
                             1.0 / 15840.0,
                             1.0 / 665280.0};
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd power = id;
    Eigen::MatrixXd num = c[0] * id;
    Eigen::MatrixXd den = c[0] * id;
    for (int k = 1; k <= 6; ++k) {
        power = power * scaled;
        num += c[k] * power;
        den += ((k % 2 == 0) ? c[k] : -c[k]) * power;
    }
    Eigen::MatrixXd result = den.partialPivLu().solve(num);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

}  // namespace detail

inline TransitionMatrix matrix_exponential(const GeneratorMatrix& gen, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw Error(ErrorKind::InvalidArgument, "matrix_exponential needs finite t >= 0");
    }
    const auto n = static_cast<Eigen::Index>(gen.n_states());
    if (t == 0.0) return {t, Eigen::MatrixXd::Identity(n, n)};

    Eigen::MatrixXd p = detail::expm_pade6(gen.rates() * t);
    p = p.cwiseMax(0.0).cwiseMin(1.0);
    for (Eigen::Index i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
    return {t, std::move(p)};
}

namespace detail {

// Reflexive-transitive closure of the "positive rate" relation.
inline std::vector<std::vector<bool>> reachability(const GeneratorMatrix& gen) {
    const std::size_t n = gen.n_states();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        reach[i][i] = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && gen.rate(i, j) > 0.0) reach[i][j] = true;
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    return reach;
}

}  // namespace detail

/// Number of closed communicating classes of the chain.
inline std::size_t closed_class_count(const GeneratorMatrix& gen) {
    const std::size_t n = gen.n_states();
    const auto reach = detail::reachability(gen);
    // A state is in a closed class iff every state it reaches reaches it back.
    std::vector<bool> seen(n, false);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        bool closed = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[i][j] && !reach[j][i]) closed = false;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[i][j] && reach[j][i]) seen[j] = true;
        }
        if (closed) ++count;
    }
    return count;
}

/// Solves the augmented system [Gamma^T; 1^T] pi = [0; 1].
inline Eigen::VectorXd stationary_distribution(const GeneratorMatrix& gen) {
    if (closed_class_count(gen) > 1) {
        throw Error(ErrorKind::Reducible, "generator has more than one closed communicating class");
    }
    const auto n = static_cast<Eigen::Index>(gen.n_states());
    Eigen::MatrixXd system(n + 1, n);
    system.topRows(n) = gen.rates().transpose();
    system.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd pi = system.colPivHouseholderQr().solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return pi;
}

/// One right-continuous sample path of the chain on [0, horizon].
/// switch_times[0] == 0; states[k] holds on [switch_times[k], switch_times[k+1]).
struct ChainPath {
    double horizon = 0.0;
    std::vector<double> switch_times;
    std::vector<Regime> states;

    /// Number of constant segments (switches + 1).
    std::size_t segment_count() const noexcept { return states.size(); }
    std::size_t switch_count() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

struct SimulationLimits {
    std::size_t max_switches = 1'000'000;
};

/// Holding time log(1-zeta)/gamma_ii, zeta ~ U[0,1); next state by the
/// cumulative-threshold rule over j != i with weights gamma_ij / (-gamma_ii).
inline ChainPath simulate_exact_path(const GeneratorMatrix& gen, Regime initial, double horizon,
                                     RandomStream& rng, SimulationLimits limits = {}) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::InvalidArgument, "horizon must be positive and finite");
    }
    if (initial >= gen.n_states()) {
        throw Error(ErrorKind::RegimeOutOfRange, "initial state " + std::to_string(initial + 1));
    }
    const std::size_t n = gen.n_states();
    ChainPath path;
    path.horizon = horizon;
    path.switch_times.push_back(0.0);
    path.states.push_back(initial);

    double now = 0.0;
    Regime current = initial;
    for (;;) {
        const double diag = gen.rate(current, current);
        if (diag == 0.0) break;  // absorbing
        const double zeta = rng.uniform();
        now += std::log(1.0 - zeta) / diag;
        if (!(now < horizon)) break;

        const double exit = -diag;
        const double xi = rng.uniform();
        double cumulative = 0.0;
        Regime next = current;
        for (Regime j = 0; j < n; ++j) {
            if (j == current || gen.rate(current, j) <= 0.0) continue;
            next = j;  // the last admissible state absorbs residual mass
            cumulative += gen.rate(current, j) / exit;
            if (xi < cumulative) break;
        }
        if (path.switch_count() >= limits.max_switches) {
            throw Error(ErrorKind::JumpBudgetExceeded,
                        "more than " + std::to_string(limits.max_switches) + " switches before T");
        }
        path.switch_times.push_back(now);
        path.states.push_back(next);
        current = next;
    }
    return path;
}

/// Right-continuous lookup: a query at a switching instant gets the post-switch state.
inline Regime state_at(const ChainPath& path, double t) {
    if (!(t >= 0.0 && t <= path.horizon)) {
        throw Error(ErrorKind::OutOfHorizon, "t=" + std::to_string(t));
    }
    const auto it = std::upper_bound(path.switch_times.begin(), path.switch_times.end(), t);
    return path.states[static_cast<std::size_t>(it - path.switch_times.begin()) - 1];
}

/// floor(T / step) with a relative tolerance, so T = K * step counts K steps
/// even when the quotient rounds slightly below K.
inline std::size_t whole_steps(double horizon, double step) {
    const double q = horizon / step;
    auto k = static_cast<std::size_t>(std::floor(q));
    if (static_cast<double>(k + 1) * step <= horizon * (1.0 + 1e-14)) ++k;
    return k;
}

/// (alpha(0), alpha(step), ..., alpha(floor(T/step) step)).
inline std::vector<Regime> skeleton_from_path(const ChainPath& path, double step) {
    if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    const std::size_t k_max = whole_steps(path.horizon, step);
    std::vector<Regime> out;
    out.reserve(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) {
        out.push_back(state_at(path, std::min(static_cast<double>(k) * step, path.horizon)));
    }
    return out;
}

/// Cumulative-sum inversion against rows of P; state N takes the residual mass.
inline std::vector<Regime> embedded_chain_sample(const TransitionMatrix& pmat, Regime initial,
                                                 std::size_t steps, RandomStream& rng) {
    const auto n = static_cast<std::size_t>(pmat.probs.rows());
    if (initial >= n) throw Error(ErrorKind::RegimeOutOfRange, "initial state " + std::to_string(initial + 1));
    std::vector<Regime> out;
    out.reserve(steps + 1);
    out.push_back(initial);
    Regime current = initial;
    for (std::size_t k = 0; k < steps; ++k) {
        const double zeta = rng.uniform();
        Regime next = n - 1;
        double cumulative = 0.0;
        for (Regime j = 0; j + 1 < n; ++j) {
            cumulative += pmat(current, j);
            if (zeta < cumulative) {
                next = j;
                break;
            }
        }
        out.push_back(next);
        current = next;
    }
    return out;
}

}  // namespace hybridem
