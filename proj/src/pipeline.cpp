#include "qmode/pipeline.hpp"

#include <sstream>

#include "qmode/errors.hpp"
#include "qmode/quantile_regression.hpp"

namespace qmode {

FitResult fit_points(const Dataset& data, const std::vector<Eigen::VectorXd>& points, const EstimationConfig& config) {
    if (points.empty()) throw ArgumentError("no design points supplied");
    for (const auto& x : points) {
        if (x.size() != data.d()) {
            throw ArgumentError("design point has dimension " + std::to_string(x.size()) + ", data has " +
                                std::to_string(data.d()));
        }
    }
    if (!(config.epsilon > 0.0 && config.epsilon < 0.5)) throw ArgumentError("epsilon must lie in (0, 0.5)");
    const auto& om = config.omega;
    if (!om.automatic && om.fixed.size() != 1 && om.fixed.size() != points.size()) {
        throw ArgumentError("omega: give one value or one per design point");
    }
    const CovariateRoles roles = config.roles ? *config.roles : CovariateRoles::infer(data.X);

    FitResult out;
    if (config.bandwidth) {
        out.h = *config.bandwidth;
        if (!(out.h > 0.0 && out.h < 0.5)) throw ArgumentError("bandwidth must lie in (0, 0.5)");
    } else {
        out.bandwidth = select_bandwidth_simultaneous(data, points, config.epsilon);
        out.h = out.bandwidth->h_selected;
        out.warnings.insert(out.warnings.end(), out.bandwidth->warnings.begin(), out.bandwidth->warnings.end());
    }

    const QuantilePath path = fit_path(data, path_grid(out.h, out.h, config.epsilon), config.epsilon);
    QuantileSolver solver(data);
    for (std::size_t p = 0; p < points.size(); ++p) {
        const Eigen::VectorXd& x = points[p];
        PointFit pf;
        pf.mode = estimate_mode(path, x, out.h, config.epsilon);
        std::ostringstream tag;
        tag << "point " << p << ": ";
        if (pf.mode.boundary_flag) out.warnings.push_back(tag.str() + "tau estimate on the search boundary");
        if (!(pf.mode.s_hat > 0.0)) throw DegenerateEstimateError(tag.str() + "non-positive sparsity estimate");

        const Eigen::VectorXd beta = solver.solve(pf.mode.tau_hat);
        pf.J = estimate_J(data, beta, pf.mode.tau_hat);
        std::vector<std::string> jw;
        const Eigen::VectorXd jinv_x = solve_J(pf.J, x, &jw);
        for (auto& w : jw) out.warnings.push_back(tag.str() + w);

        if (om.automatic) {
            OmegaSelection sel = select_omega(data, x, pf.mode.m_hat, default_omega_grid(), om.threshold,
                                              om.resamples, config.seed + 7919 * p, om.fallback, roles);
            pf.omega = sel.omega;
            for (auto& w : sel.warnings) out.warnings.push_back(tag.str() + w);
        } else {
            pf.omega = om.fixed.size() == 1 ? om.fixed.front() : om.fixed[p];
        }
        pf.f2_hat = f2_kernel_estimate(data, x, pf.mode.m_hat, pf.omega, roles);
        const SparsityCurvature c = sparsity_second_derivative(pf.f2_hat, pf.mode.s_hat);
        pf.s2_raw = c.value;
        pf.curvature_wrong_sign = c.wrong_sign;
        if (c.wrong_sign) out.warnings.push_back(tag.str() + "curvature estimate has the wrong sign");
        pf.mode.s2_hat = floor_curvature(c.value);

        pf.spec.x = x;
        pf.spec.tau_hat = pf.mode.tau_hat;
        pf.spec.ratio = -pf.mode.s_hat / pf.mode.s2_hat;
        pf.spec.jinv_x = jinv_x;
        pf.spec.h = out.h;
        out.points.push_back(std::move(pf));
    }
    return out;
}

}  // namespace qmode
