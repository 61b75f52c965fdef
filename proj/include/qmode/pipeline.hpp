#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmode/bandwidth.hpp"
#include "qmode/dataset.hpp"
#include "qmode/mode_estimator.hpp"
#include "qmode/nuisance.hpp"

namespace qmode {

struct OmegaConfig {
    bool automatic = true;
    std::vector<double> fixed;  //!< one value for all points, or one per point
    double threshold = 3.0;
    int resamples = 100;
    double fallback = 0.85;
};

struct EstimationConfig {
    double epsilon = 0.1;
    std::optional<double> bandwidth;  //!< empty selects automatically
    OmegaConfig omega;
    std::optional<CovariateRoles> roles;  //!< empty infers from X
    std::uint64_t seed = 12345;
};

struct PointFit {
    ModeEstimate mode;
    JHat J;
    double f2_hat = 0.0;
    double omega = 0.0;
    double s2_raw = 0.0;  //!< -f2 s^4 before flooring
    bool curvature_wrong_sign = false;
    InfluenceSpec spec;
};

struct FitResult {
    double h = 0.0;
    std::optional<BandwidthReport> bandwidth;
    std::vector<PointFit> points;
    std::vector<std::string> warnings;
};

//! Bandwidth, mode, and every nuisance needed for inference at each design point.
FitResult fit_points(const Dataset& data, const std::vector<Eigen::VectorXd>& points, const EstimationConfig& config);

}  // namespace qmode
