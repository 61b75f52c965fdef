#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qmode/quantile_regression.hpp"

namespace qmode {

/// Kernel-smoothed conditional quantile function at one design point.
///
/// The raw fit x' beta(t) is known on a uniform tau grid and is interpolated by
/// local cubics between nodes. Convolution with the biweight kernel is then a
/// piecewise polynomial integral and is evaluated exactly by 4-point
/// Gauss-Legendre on each grid cell.
class SmoothedQuantile {
public:
    SmoothedQuantile(const QuantilePath& path, const Eigen::VectorXd& x, double h);
    SmoothedQuantile(std::vector<double> taus, std::vector<double> values, double h);

    //! r-th derivative in tau of the smoothed quantile function, r in {0,1,2,3}.
    double eval(double tau, int r) const;

    //! Interpolated raw fit at t.
    double raw(double t) const;

    double h() const { return h_; }
    //! Smallest and largest tau whose kernel window lies inside the grid.
    double tau_min() const { return t0_ + h_; }
    double tau_max() const { return t0_ + step_ * static_cast<double>(values_.size() - 1) - h_; }

private:
    void init();
    double cell_poly(std::size_t cell, double t) const;

    std::vector<double> taus_;
    std::vector<double> values_;
    double h_;
    double t0_ = 0.0;
    double step_ = 0.0;
};

}  // namespace qmode
