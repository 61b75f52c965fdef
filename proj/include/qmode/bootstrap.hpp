#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"
#include "qmode/nuisance.hpp"

namespace qmode {

enum class SigmaMethod { quadrature, monte_carlo };

struct SigmaHat {
    Eigen::MatrixXd matrix;
    SigmaMethod method = SigmaMethod::quadrature;
    std::optional<long> mc_draws;
};

SigmaHat estimate_sigma_hat(const std::vector<InfluenceSpec>& specs, const Dataset& data,
                            SigmaMethod method = SigmaMethod::quadrature, long mc_draws = 0,
                            std::uint64_t seed = 0);

//! sqrt(D_k' Sigma D_k) for every row of D.
Eigen::VectorXd gamma_hat(const SigmaHat& sigma, const Eigen::MatrixXd& D);

enum class BootstrapMethod { pivotal, nonparametric };

struct BootstrapResult {
    Eigen::MatrixXd replicates;  //!< signed studentized contrast statistic, one row per replicate
    Eigen::VectorXd max_stat;    //!< max_k |replicates(b, k)|
    std::map<double, double> critical_values;  //!< confidence level -> quantile of max_stat
    Eigen::VectorXd gamma_hat;
    BootstrapMethod method = BootstrapMethod::pivotal;
    std::uint64_t seed = 0;
    int failures = 0;
};

//! ceil(B * level)-th order statistic.
double order_statistic_quantile(std::vector<double> values, double level);

//! Critical value of |replicates(:, k)| alone.
double row_critical_value(const BootstrapResult& result, Eigen::Index k, double level);

BootstrapResult pivotal_bootstrap(const std::vector<InfluenceSpec>& specs, const Dataset& data,
                                  const Eigen::MatrixXd& D, int B, const std::vector<double>& levels,
                                  std::uint64_t seed, int threads = 1);

//! Variant that reuses an already computed Sigma.
BootstrapResult pivotal_bootstrap(const std::vector<InfluenceSpec>& specs, const Dataset& data,
                                  const Eigen::MatrixXd& D, const SigmaHat& sigma, int B,
                                  const std::vector<double>& levels, std::uint64_t seed, int threads = 1);

/// Resamples pairs and refits the mode at every point with fixed h, epsilon and tau grid.
/// Statistics are studentized by the supplied gamma (from the original sample).
BootstrapResult nonparametric_bootstrap(const Dataset& data, const std::vector<Eigen::VectorXd>& points, double h,
                                        double epsilon, const Eigen::MatrixXd& D, int B,
                                        const std::vector<double>& levels, std::uint64_t seed,
                                        const Eigen::VectorXd& m_hat, const Eigen::VectorXd& gamma,
                                        int threads = 1);

}  // namespace qmode
