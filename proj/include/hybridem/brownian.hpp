#pragma once

#include <hybridem/error.hpp>
#include <hybridem/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hybridem {

/// Absolute deduplication tolerance for time points on [0, T].
inline double time_tolerance(double horizon) noexcept { return 1e-14 * std::max(1.0, horizon); }

/// Strictly increasing time points from 0 to T. Points closer than
/// time_tolerance(T) to their predecessor are dropped at construction
/// (the final point T is always kept).
class TimeGrid {
public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> points) {
        std::sort(points.begin(), points.end());
        if (points.size() < 2 || points.front() != 0.0) {
            throw Error(ErrorKind::InvalidArgument, "time grid needs at least {0, T} and must start at 0");
        }
        const double tol = time_tolerance(points.back());
        points_.reserve(points.size());
        for (double t : points) {
            if (!std::isfinite(t)) throw Error(ErrorKind::NonFinite, "time grid point");
            if (points_.empty() || t - points_.back() > tol) points_.push_back(t);
        }
        // The horizon replaces a near-duplicate predecessor.
        if (points_.back() != points.back()) points_.back() = points.back();
        if (points_.size() < 2) throw Error(ErrorKind::InvalidArgument, "time grid has zero length");
    }

    /// {0, step, 2 step, ..., T}; a final partial interval ends at T.
    static TimeGrid uniform(double horizon, double step) {
        if (!(step > 0.0) || !(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "uniform grid");
        std::vector<double> pts;
        const double q = horizon / step;
        auto k_max = static_cast<std::size_t>(std::floor(q)) + 1;
        pts.reserve(k_max + 1);
        for (std::size_t k = 0; k <= k_max; ++k) {
            const double t = static_cast<double>(k) * step;
            if (t >= horizon) break;
            pts.push_back(t);
        }
        pts.push_back(horizon);
        return TimeGrid(std::move(pts));
    }

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    std::size_t interval_count() const noexcept { return points_.size() - 1; }
    double horizon() const noexcept { return points_.back(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double tolerance() const noexcept { return time_tolerance(horizon()); }

    /// Index of point t (within tolerance), or size() when absent.
    std::size_t find(double t) const {
        const double tol = tolerance();
        auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
        if (it != points_.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - points_.begin());
        return points_.size();
    }

    bool operator==(const TimeGrid&) const = default;

private:
    std::vector<double> points_;
};

inline TimeGrid merge_grids(const TimeGrid& a, const TimeGrid& b) {
    if (std::abs(a.horizon() - b.horizon()) > time_tolerance(std::max(a.horizon(), b.horizon()))) {
        throw Error(ErrorKind::HorizonMismatch, std::to_string(a.horizon()) + " vs " + std::to_string(b.horizon()));
    }
    std::vector<double> pts;
    pts.reserve(a.size() + b.size());
    std::merge(a.points().begin(), a.points().end(), b.points().begin(), b.points().end(), std::back_inserter(pts));
    pts.back() = a.horizon();
    return TimeGrid(std::move(pts));
}

/// Brownian motion realized on a grid. The stored quantity is B at every
/// grid point (left-to-right prefix sums of the generated increments, B(0) = 0);
/// increments are differences of stored values, so aggregation onto any
/// sub-grid is subsampling and composes bit-for-bit.
class BrownianPath {
public:
    static BrownianPath from_increments(TimeGrid grid, const Eigen::MatrixXd& increments) {
        if (static_cast<std::size_t>(increments.cols()) != grid.interval_count()) {
            throw Error(ErrorKind::DimensionMismatch, "one increment column per grid interval required");
        }
        Eigen::MatrixXd b(increments.rows(), increments.cols() + 1);
        b.col(0).setZero();
        for (Eigen::Index j = 0; j < increments.cols(); ++j) b.col(j + 1) = b.col(j) + increments.col(j);
        return BrownianPath(std::move(grid), std::move(b));
    }

    static BrownianPath from_values(TimeGrid grid, Eigen::MatrixXd values) {
        if (static_cast<std::size_t>(values.cols()) != grid.size()) {
            throw Error(ErrorKind::DimensionMismatch, "one value column per grid point required");
        }
        return BrownianPath(std::move(grid), std::move(values));
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    /// d x (grid size) matrix; column j is B(t_j).
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    auto value(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

    /// B(t_last) - B(t_first) for grid indices first <= last.
    Eigen::VectorXd difference(std::size_t first, std::size_t last) const { return value(last) - value(first); }
    Eigen::VectorXd increment(std::size_t j) const { return difference(j, j + 1); }

    Eigen::MatrixXd increments() const {
        Eigen::MatrixXd inc(values_.rows(), values_.cols() - 1);
        for (Eigen::Index j = 0; j + 1 < values_.cols(); ++j) inc.col(j) = values_.col(j + 1) - values_.col(j);
        return inc;
    }

private:
    BrownianPath(TimeGrid grid, Eigen::MatrixXd values) : grid_(std::move(grid)), values_(std::move(values)) {}

    TimeGrid grid_;
    Eigen::MatrixXd values_;
};

inline BrownianPath generate_increments(const TimeGrid& grid, std::size_t dimension, RandomStream& rng) {
    if (dimension == 0) throw Error(ErrorKind::InvalidArgument, "Brownian dimension must be >= 1");
    Eigen::MatrixXd inc(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(grid.interval_count()));
    for (Eigen::Index j = 0; j < inc.cols(); ++j) {
        const double sd = std::sqrt(grid[static_cast<std::size_t>(j) + 1] - grid[static_cast<std::size_t>(j)]);
        for (Eigen::Index r = 0; r < inc.rows(); ++r) inc(r, j) = sd * rng.normal();
    }
    return BrownianPath::from_increments(grid, inc);
}

/// Positions of every coarse point inside the fine grid.
inline std::vector<std::size_t> locate_points(const TimeGrid& fine, std::span<const double> coarse) {
    const double tol = fine.tolerance();
    std::vector<std::size_t> idx;
    idx.reserve(coarse.size());
    std::size_t j = 0;
    for (double t : coarse) {
        while (j < fine.size() && fine[j] < t - tol) ++j;
        if (j == fine.size() || std::abs(fine[j] - t) > tol) {
            throw Error(ErrorKind::NotRefinement, "point " + std::to_string(t) + " is not on the fine grid");
        }
        idx.push_back(j);
    }
    return idx;
}

/// Restriction to a sub-grid: coarse B values are the fine ones at shared
/// times, so each coarse increment equals the telescoped fine increments.
inline BrownianPath aggregate_increments(const BrownianPath& fine, const TimeGrid& coarse) {
    const auto idx = locate_points(fine.grid(), coarse.points());
    if (idx.front() != 0 || idx.back() != fine.grid().size() - 1) {
        throw Error(ErrorKind::NotRefinement, "coarse grid must share both endpoints");
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(fine.dimension()), static_cast<Eigen::Index>(idx.size()));
    std::vector<double> pts;
    pts.reserve(idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c) {
        values.col(static_cast<Eigen::Index>(c)) = fine.value(idx[c]);
        pts.push_back(fine.grid()[idx[c]]);  // keep the fine grid's exact times
    }
    return BrownianPath::from_values(TimeGrid(std::move(pts)), std::move(values));
}

}  // namespace hybridem
