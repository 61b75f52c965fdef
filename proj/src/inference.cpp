#include "qmode/inference.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "qmode/errors.hpp"

namespace qmode {

ContrastMatrix ContrastMatrix::custom(Eigen::MatrixXd D) {
    ContrastMatrix c;
    c.kind = ContrastKind::custom;
    if (D.rows() < 1 || D.cols() < 1) throw ArgumentError("contrast matrix is empty");
    for (Eigen::Index k = 0; k < D.rows(); ++k) {
        const Eigen::Index nz = (D.row(k).array() != 0.0).count();
        if (nz == 0) throw ArgumentError("contrast row " + std::to_string(k) + " is zero");
        if (nz > 8) c.warnings.push_back("contrast row " + std::to_string(k) + " has more than 8 nonzeros");
        if (D.row(k).cwiseAbs().maxCoeff() > 10.0) {
            c.warnings.push_back("contrast row " + std::to_string(k) + " has entries above 10 in magnitude");
        }
    }
    c.D = std::move(D);
    return c;
}

ContrastMatrix make_contrasts(ContrastKind kind, int size) {
    ContrastMatrix c;
    c.kind = kind;
    switch (kind) {
        case ContrastKind::identity:
            if (size < 1) throw ArgumentError("identity contrast needs L >= 1");
            c.D = Eigen::MatrixXd::Identity(size, size);
            break;
        case ContrastKind::consecutive_diff:
            if (size < 2) throw ArgumentError("consecutive differences need L >= 2");
            c.D = Eigen::MatrixXd::Zero(size - 1, size);
            for (int k = 0; k + 1 < size; ++k) {
                c.D(k, k) = 1.0;
                c.D(k, k + 1) = -1.0;
            }
            break;
        case ContrastKind::paired_diff:
            if (size < 1) throw ArgumentError("paired differences need M >= 1");
            c.D = Eigen::MatrixXd::Zero(size, 2 * size);
            for (int k = 0; k < size; ++k) {
                c.D(k, 2 * k) = 1.0;
                c.D(k, 2 * k + 1) = -1.0;
            }
            break;
        case ContrastKind::custom:
            throw ArgumentError("custom contrasts are built with ContrastMatrix::custom");
    }
    return c;
}

Eigen::VectorXd InferenceRun::mode_vector() const {
    Eigen::VectorXd m(static_cast<Eigen::Index>(fit.points.size()));
    for (std::size_t l = 0; l < fit.points.size(); ++l) m(static_cast<Eigen::Index>(l)) = fit.points[l].mode.m_hat;
    return m;
}

double InferenceRun::critical_value(double level, bool simultaneous, Eigen::Index k) const {
    if (method == InferenceMethod::gumbel) {
        const double alpha = 1.0 - level;
        if (simultaneous && D.rows() >= 2) return gumbel_critical(static_cast<int>(D.rows()), alpha);
        return boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    }
    if (simultaneous) return bootstrap->critical_values.at(level);
    return row_critical_value(*bootstrap, k, level);
}

InferenceRun run_inference(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                           const Eigen::MatrixXd& D, const InferenceConfig& config) {
    if (D.cols() != static_cast<Eigen::Index>(points.size())) {
        throw ArgumentError("contrast matrix has " + std::to_string(D.cols()) + " columns for " +
                            std::to_string(points.size()) + " design points");
    }
    if (config.levels.empty()) throw ArgumentError("at least one confidence level is required");
    for (double l : config.levels) {
        if (!(l > 0.0 && l < 1.0)) throw ArgumentError("confidence levels must lie in (0,1)");
    }
    InferenceRun run;
    run.n = data.n();
    run.D = D;
    run.method = config.method;
    run.levels = config.levels;
    run.fit = fit_points(data, points, config.estimation);

    std::vector<InfluenceSpec> specs;
    for (const auto& p : run.fit.points) specs.push_back(p.spec);
    run.sigma = estimate_sigma_hat(specs, data, config.sigma_method, config.mc_draws, config.estimation.seed);
    run.gamma = gamma_hat(run.sigma, D);

    switch (config.method) {
        case InferenceMethod::pivotal:
            run.bootstrap = pivotal_bootstrap(specs, data, D, run.sigma, config.B, config.levels,
                                              config.estimation.seed, config.threads);
            break;
        case InferenceMethod::nonparametric:
            run.bootstrap = nonparametric_bootstrap(data, points, run.fit.h, config.estimation.epsilon, D, config.B,
                                                    config.levels, config.estimation.seed, run.mode_vector(),
                                                    run.gamma, config.threads);
            if (run.bootstrap->failures > 0) {
                run.fit.warnings.push_back(std::to_string(run.bootstrap->failures) +
                                           " bootstrap replicates failed and were dropped");
            }
            break;
        case InferenceMethod::gumbel:
            if (D.rows() == 2) run.fit.warnings.push_back("gumbel critical value with L = 2 is unreliable");
            break;
    }
    return run;
}

ConfidenceSet intervals_from(const InferenceRun& run, bool simultaneous) {
    ConfidenceSet cs;
    for (const auto& p : run.fit.points) cs.points.push_back(p.mode.x);
    cs.estimates = run.D * run.mode_vector();
    cs.levels = run.levels;
    cs.method = run.method;
    cs.simultaneous = simultaneous;
    cs.h = run.fit.h;
    cs.sigma = run.gamma;
    cs.warnings = run.fit.warnings;
    const double root = std::sqrt(static_cast<double>(run.n) * cs.h * cs.h * cs.h);
    const Eigen::Index M = run.D.rows();
    for (double level : run.levels) {
        Eigen::VectorXd q(M);
        for (Eigen::Index k = 0; k < M; ++k) q(k) = run.critical_value(level, simultaneous, k);
        cs.critical_values[level] = q;
        cs.half_widths[level] = run.gamma.cwiseProduct(q) / root;
    }
    return cs;
}

ConfidenceSet confidence_intervals(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                                   const InferenceConfig& config, bool simultaneous) {
    const auto L = static_cast<int>(points.size());
    return intervals_from(run_inference(data, points, make_contrasts(ContrastKind::identity, L).D, config),
                          simultaneous);
}

ConfidenceSet confidence_band(const Dataset& data, const std::vector<Eigen::VectorXd>& grid,
                              const InferenceConfig& config) {
    return confidence_intervals(data, grid, config, true);
}

TestResult test_from(const InferenceRun& run) {
    TestResult t;
    t.h = run.fit.h;
    t.warnings = run.fit.warnings;
    const double root = std::sqrt(static_cast<double>(run.n) * t.h * t.h * t.h);
    const Eigen::VectorXd dm = run.D * run.mode_vector();
    t.statistic = (root * dm.cwiseAbs().cwiseQuotient(run.gamma)).maxCoeff();
    for (double level : run.levels) {
        const double c = run.critical_value(level, true);
        t.decisions.push_back({level, c, t.statistic > c});
    }
    return t;
}

TestResult test_significance(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                             const Eigen::MatrixXd& D, const InferenceConfig& config) {
    return test_from(run_inference(data, points, D, config));
}

double gumbel_critical(int L, double alpha, std::vector<std::string>* warnings) {
    if (L < 2) throw ArgumentError("gumbel_critical: L must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("gumbel_critical: alpha must lie in (0,1)");
    if (L == 2 && warnings) warnings->push_back("gumbel critical value with L = 2 is unreliable");
    const double logL = std::log(static_cast<double>(L));
    const double a = std::sqrt(2.0 * logL);
    const double b = a - 0.5 / a * (std::log(logL) + std::log(M_PI));
    return b + (-std::log(-std::log(1.0 - alpha))) / a;
}

}  // namespace qmode
