#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"

namespace qmode {

//! sum_i rho_tau(Y_i - X_i' beta)
double check_loss(const Dataset& data, const Eigen::VectorXd& beta, double tau);

/// Exact linear quantile regression by basis exchange.
///
/// The current basis holds d observations that the fit interpolates. Each step
/// moves along the cheapest descending edge and stops at the best breakpoint,
/// so the check loss strictly decreases. Successive calls to solve() warm start
/// from the previous basis.
class QuantileSolver {
public:
    explicit QuantileSolver(const Dataset& data, long max_iterations = 0);

    Eigen::VectorXd solve(double tau);

    const std::vector<Eigen::Index>& basis() const { return basis_; }
    long last_iterations() const { return last_iterations_; }

private:
    void cold_start();
    bool refresh();

    const Dataset& data_;
    long max_iterations_;
    double zero_tol_;
    std::vector<Eigen::Index> basis_;
    std::vector<char> in_basis_;
    Eigen::MatrixXd basis_inverse_;
    Eigen::VectorXd beta_;
    Eigen::VectorXd residual_;
    long last_iterations_ = 0;
};

Eigen::VectorXd fit_quantile(const Dataset& data, double tau);

struct QuantilePath {
    std::vector<double> taus;
    Eigen::MatrixXd betas;  //!< one row per tau
    double epsilon = 0.1;

    //! x' beta(tau_k) for every grid node.
    std::vector<double> fitted(const Eigen::VectorXd& x) const;
};

QuantilePath fit_path(const Dataset& data, const std::vector<double>& taus, double epsilon = 0.1);

//! Indices k with x' beta(tau_{k+1}) < x' beta(tau_k).
std::vector<std::size_t> crossing_diagnostic(const QuantilePath& path, const Eigen::VectorXd& x);

//! Uniform grid from lo to hi with spacing at most max_step (both ends included).
std::vector<double> uniform_grid(double lo, double hi, double max_step);

}  // namespace qmode
