#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"

namespace qmode {

struct JHat {
    double tau = 0.0;
    Eigen::MatrixXd matrix;
    double bandwidth_check = 0.0;  //!< residual-scale window half width
};

//! (2 n h)^{-1} sum_i 1(|Y_i - X_i' beta| <= h) X_i X_i'
JHat powell_J(const Dataset& data, const Eigen::VectorXd& beta_tau, double h_check, double tau = 0.0);

//! Hall-Sheather bandwidth on the quantile-level scale.
double hall_sheather_bandwidth(long n, double tau, double alpha = 0.05);

//! Maps a quantile-level bandwidth to the residual scale: (q(tau+h) - q(tau-h)) * min(sd, IQR/1.34).
double residual_scale_bandwidth(const Eigen::VectorXd& residuals, double tau, double h_tau);

//! Powell estimate at tau with the Hall-Sheather window converted to the residual scale.
JHat estimate_J(const Dataset& data, const Eigen::VectorXd& beta_tau, double tau);

//! J^{-1} x via a symmetric factorization, ridged when J is near singular.
Eigen::VectorXd solve_J(const JHat& J, const Eigen::VectorXd& x, std::vector<std::string>* warnings = nullptr);

/// Which columns enter the conditional f'' estimate: one continuous column smoothed with the
/// Epanechnikov kernel and any number of columns conditioned on by exact matching.
struct CovariateRoles {
    int continuous = -1;  //!< -1 means no continuous covariate
    std::vector<int> matched;

    //! First non-constant column is continuous, remaining non-constant columns are matched.
    static CovariateRoles infer(const Eigen::MatrixXd& X);
};

double f2_kernel_estimate(const Dataset& data, const Eigen::VectorXd& x, double m_hat, double omega,
                          const CovariateRoles& roles);

struct OmegaSelection {
    double omega = 0.0;
    bool used_fallback = false;
    double step2_omega = 0.0;
    std::vector<double> subgrid;
    std::vector<std::string> warnings;
};

std::vector<double> default_omega_grid();

OmegaSelection select_omega(const Dataset& data, const Eigen::VectorXd& x, double m_hat,
                            const std::vector<double>& grid1, double t, int resamples, std::uint64_t seed,
                            double fallback, const CovariateRoles& roles);

struct SparsityCurvature {
    double value;     //!< -f2 * s^4
    bool wrong_sign;  //!< value <= 0
};

SparsityCurvature sparsity_second_derivative(double f2_hat, double s_hat);

//! Keeps the sign but floors the magnitude at 1e-6.
double floor_curvature(double s2);

struct InfluenceSpec {
    Eigen::VectorXd x;
    double tau_hat = 0.0;
    double ratio = 0.0;  //!< -s / s''
    Eigen::VectorXd jinv_x;
    double h = 0.0;
};

//! ratio * h^{-1/2} * K'((tau_hat - u) / h) * jinv_x' x_prime
double influence_eval(const InfluenceSpec& spec, double u, const Eigen::VectorXd& x_prime);

}  // namespace qmode
