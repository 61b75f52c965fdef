#include "qmode/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "qmode/errors.hpp"
#include "qmode/kernels.hpp"

namespace qmode {

SmoothedQuantile::SmoothedQuantile(const QuantilePath& path, const Eigen::VectorXd& x, double h)
    : taus_(path.taus), values_(path.fitted(x)), h_(h) {
    init();
}

SmoothedQuantile::SmoothedQuantile(std::vector<double> taus, std::vector<double> values, double h)
    : taus_(std::move(taus)), values_(std::move(values)), h_(h) {
    init();
}

void SmoothedQuantile::init() {
    if (!(h_ > 0.0)) throw ArgumentError("smoothing bandwidth must be positive");
    if (taus_.size() != values_.size() || taus_.size() < 2) {
        throw ArgumentError("smoothing needs at least two grid nodes with matching values");
    }
    t0_ = taus_.front();
    step_ = (taus_.back() - t0_) / static_cast<double>(taus_.size() - 1);
    for (std::size_t k = 0; k < taus_.size(); ++k) {
        if (std::abs(taus_[k] - (t0_ + step_ * static_cast<double>(k))) > 1e-9 * (1.0 + step_)) {
            throw ArgumentError("smoothing requires a uniform tau grid");
        }
    }
}

double SmoothedQuantile::cell_poly(std::size_t cell, double t) const {
    const std::size_t nodes = values_.size();
    const std::size_t order = std::min<std::size_t>(4, nodes);
    std::size_t start = cell > 0 ? cell - 1 : 0;
    start = std::min(start, nodes - order);
    const double s = (t - (t0_ + step_ * static_cast<double>(start))) / step_;
    const double* v = values_.data() + start;
    if (order == 4) {
        const double s1 = s - 1.0, s2 = s - 2.0, s3 = s - 3.0;
        return -v[0] * s1 * s2 * s3 / 6.0 + v[1] * s * s2 * s3 / 2.0 - v[2] * s * s1 * s3 / 2.0 +
               v[3] * s * s1 * s2 / 6.0;
    }
    if (order == 3) {
        const double s1 = s - 1.0, s2 = s - 2.0;
        return v[0] * s1 * s2 / 2.0 - v[1] * s * s2 + v[2] * s * s1 / 2.0;
    }
    return v[0] + (v[1] - v[0]) * s;
}

double SmoothedQuantile::raw(double t) const {
    const double pos = (t - t0_) / step_;
    const auto cells = static_cast<long>(values_.size() - 1);
    long cell = static_cast<long>(std::floor(pos));
    cell = std::clamp(cell, 0L, cells - 1);
    return cell_poly(static_cast<std::size_t>(cell), t);
}

double SmoothedQuantile::eval(double tau, int r) const {
    if (r < 0 || r > 3) throw ArgumentError("smoothing: derivative order must be in {0,1,2,3}");
    const double slack = 1e-12 * (1.0 + step_);
    if (!(tau >= tau_min() - slack && tau <= tau_max() + slack)) {
        throw ArgumentError("smoothing: tau grid does not cover the kernel window at tau = " + std::to_string(tau));
    }
    const double t_end = t0_ + step_ * static_cast<double>(values_.size() - 1);
    const double a = std::max(tau - h_, t0_);
    const double b = std::min(tau + h_, t_end);
    const auto cells = static_cast<long>(values_.size() - 1);
    const long first = std::clamp(static_cast<long>(std::floor((a - t0_) / step_)), 0L, cells - 1);
    const long last = std::clamp(static_cast<long>(std::ceil((b - t0_) / step_)) - 1, 0L, cells - 1);

    using Rule = boost::math::quadrature::gauss<double, 4>;
    double total = 0.0;
    for (long c = first; c <= last; ++c) {
        const double lo = std::max(a, t0_ + step_ * static_cast<double>(c));
        const double hi = std::min(b, t0_ + step_ * static_cast<double>(c + 1));
        if (!(hi > lo)) continue;
        const auto cell = static_cast<std::size_t>(c);
        total += Rule::integrate(
            [&](double t) { return cell_poly(cell, t) * kernels::biweight((tau - t) / h_, r); }, lo, hi);
    }
    double value = total / std::pow(h_, r + 1);
    if (r == 3) {
        // K'' jumps at the support edges, which contributes point masses to K'''.
        value += kernels::kSecondDerivativeEdge * (raw(tau + h_) - raw(tau - h_)) / (h_ * h_ * h_);
    }
    return value;
}

}  // namespace qmode
