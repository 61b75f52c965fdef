#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"
#include "qmode/quantile_regression.hpp"

namespace qmode {

//! Fourth derivative of the standard normal quantile function: q (7 + 6 q^2) / phi(q)^4.
double normal_quantile_deriv4(double tau);

//! [3 kappa1 v' G v / (kappa^2 s3^2)]^{1/7} n^{-1/7} with v = J^{-1} x and G = E[X X'].
double h_opt_formula(long n, const Eigen::VectorXd& jinv_x, const Eigen::MatrixXd& gram, double s3);

struct PointBandwidth {
    Eigen::VectorXd x;
    double h = 0.0;
    double tau_initial = 0.0;
    double tau_final = 0.0;
    bool clamped = false;
};

struct BandwidthReport {
    double h_initial = 0.0;
    double h_selected = 0.0;
    double tau_initial = 0.0;
    int iterations = 0;
    std::vector<PointBandwidth> per_point;
    std::vector<std::string> warnings;
};

//! Admissible bandwidth range [0.5 n^{-1/7}, min(0.8 n^{-1/7}, 0.45)].
double bandwidth_floor(long n);
double bandwidth_cap(long n);

BandwidthReport select_bandwidth(const Dataset& data, const Eigen::VectorXd& x, double epsilon);
BandwidthReport select_bandwidth_simultaneous(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                                              double epsilon);

//! Same selectors reusing a path already fitted on path_grid(bandwidth_floor, bandwidth_cap, epsilon).
BandwidthReport select_bandwidth_simultaneous(const Dataset& data, const QuantilePath& path,
                                              const std::vector<Eigen::VectorXd>& points, double epsilon);

//! Lower median.
double lower_median(std::vector<double> values);

}  // namespace qmode
