#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"
#include "qmode/quantile_regression.hpp"
#include "qmode/smoothing.hpp"

namespace qmode {

struct TauSearch {
    double tau_hat;
    bool boundary_flag;
    double lower;  //!< effective search interval
    double upper;
};

struct ModeEstimate {
    Eigen::VectorXd x;
    double tau_hat = 0.0;
    double m_hat = 0.0;
    double s_hat = 0.0;
    double s2_hat = 0.0;  //!< filled in by the nuisance step
    double h = 0.0;
    bool boundary_flag = false;
};

//! Minimizer of the smoothed sparsity over [eps, 1-eps] intersected with the window-admissible range.
TauSearch estimate_tau(const SmoothedQuantile& sq, double epsilon);

/// Tau grid used for a path that will be smoothed with bandwidths in [h_small, h_large].
/// Spacing is at most h_small / 20 and the grid covers every kernel window centred in the
/// search range [max(eps, h + step), min(1 - eps, 1 - h - step)].
std::vector<double> path_grid(double h_small, double h_large, double epsilon);

ModeEstimate estimate_mode(const QuantilePath& path, const Eigen::VectorXd& x, double h, double epsilon);
ModeEstimate estimate_mode(const Dataset& data, const Eigen::VectorXd& x, double h, double epsilon);

}  // namespace qmode
