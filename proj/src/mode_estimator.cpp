#include "qmode/mode_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qmode/errors.hpp"

namespace qmode {

namespace {

constexpr int kSeedPoints = 101;
constexpr int kStarts = 3;
constexpr double kTolerance = 1e-7;
constexpr double kBoundary = 1e-6;

std::pair<double, double> golden_section(const SmoothedQuantile& sq, double a, double b) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = sq.eval(c, 1);
    double fd = sq.eval(d, 1);
    while (b - a > kTolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sq.eval(c, 1);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sq.eval(d, 1);
        }
    }
    const double t = 0.5 * (a + b);
    return {t, sq.eval(t, 1)};
}

}  // namespace

TauSearch estimate_tau(const SmoothedQuantile& sq, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ArgumentError("epsilon must lie in (0, 0.5)");
    const double lo = std::max(epsilon, sq.tau_min());
    const double hi = std::min(1.0 - epsilon, sq.tau_max());
    if (!(hi > lo)) throw ArgumentError("estimate_tau: empty search interval for this bandwidth and grid");

    std::vector<double> grid(kSeedPoints);
    std::vector<double> values(kSeedPoints);
    for (int k = 0; k < kSeedPoints; ++k) {
        grid[k] = lo + (hi - lo) * k / (kSeedPoints - 1);
        values[k] = sq.eval(grid[k], 1);
        if (!std::isfinite(values[k])) throw EstimationError("estimate_tau: non-finite sparsity on the seeding grid");
    }
    std::vector<int> minima;
    for (int k = 0; k < kSeedPoints; ++k) {
        const bool left = k == 0 || values[k] <= values[k - 1];
        const bool right = k == kSeedPoints - 1 || values[k] <= values[k + 1];
        if (left && right) minima.push_back(k);
    }
    std::stable_sort(minima.begin(), minima.end(), [&](int a, int b) { return values[a] < values[b]; });
    if (minima.size() > kStarts) minima.resize(kStarts);

    double best_t = grid[minima.front()];
    double best_v = values[minima.front()];
    for (int k : minima) {
        const double a = grid[std::max(k - 1, 0)];
        const double b = grid[std::min(k + 1, kSeedPoints - 1)];
        const auto [t, v] = golden_section(sq, a, b);
        if (v < best_v) {
            best_t = t;
            best_v = v;
        }
    }
    // Golden section never evaluates the bracket ends.
    for (double edge : {lo, hi}) {
        const double v = sq.eval(edge, 1);
        if (v < best_v && std::abs(best_t - edge) < 2.0 * (hi - lo) / (kSeedPoints - 1)) {
            best_t = edge;
            best_v = v;
        }
    }
    best_t = std::clamp(best_t, lo, hi);
    const bool boundary = best_t - lo <= kBoundary || hi - best_t <= kBoundary;
    return {best_t, boundary, lo, hi};
}

std::vector<double> path_grid(double h_small, double h_large, double epsilon) {
    if (!(h_small > 0.0 && h_large >= h_small)) throw ArgumentError("path_grid: invalid bandwidth range");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ArgumentError("epsilon must lie in (0, 0.5)");
    if (!(h_large < 0.5)) throw ArgumentError("path_grid: bandwidth must be below 0.5");
    const double step = h_small / 20.0;
    const double lo = std::max(epsilon - h_large, step);
    const double hi = std::min(1.0 - epsilon + h_large, 1.0 - step);
    return uniform_grid(lo, hi, step);
}

ModeEstimate estimate_mode(const QuantilePath& path, const Eigen::VectorXd& x, double h, double epsilon) {
    SmoothedQuantile sq(path, x, h);
    const TauSearch ts = estimate_tau(sq, epsilon);
    ModeEstimate m;
    m.x = x;
    m.tau_hat = ts.tau_hat;
    m.boundary_flag = ts.boundary_flag;
    m.m_hat = sq.eval(ts.tau_hat, 0);
    m.s_hat = sq.eval(ts.tau_hat, 1);
    m.h = h;
    return m;
}

ModeEstimate estimate_mode(const Dataset& data, const Eigen::VectorXd& x, double h, double epsilon) {
    const QuantilePath path = fit_path(data, path_grid(h, h, epsilon), epsilon);
    return estimate_mode(path, x, h, epsilon);
}

}  // namespace qmode
