#include "qmode/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "qmode/errors.hpp"
#include "qmode/kernels.hpp"
#include "qmode/mode_estimator.hpp"
#include "qmode/nuisance.hpp"

namespace qmode {

namespace {
constexpr double kMaxBandwidth = 0.45;
constexpr double kDeriv4Floor = 1e-3;
}  // namespace

double normal_quantile_deriv4(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("normal_quantile_deriv4: tau must lie in (0,1)");
    const boost::math::normal z;
    const double q = boost::math::quantile(z, tau);
    const double f = boost::math::pdf(z, q);
    const double value = q * (7.0 + 6.0 * q * q) / (f * f * f * f);
    if (!std::isfinite(value)) throw std::overflow_error("normal_quantile_deriv4: overflow near the boundary");
    return value;
}

double h_opt_formula(long n, const Eigen::VectorXd& jinv_x, const Eigen::MatrixXd& gram, double s3) {
    const auto kc = kernels::kernel_constants();
    const double v = jinv_x.dot(gram * jinv_x);
    return std::pow(3.0 * kc.kappa1 * v / (kc.kappa * kc.kappa * s3 * s3), 1.0 / 7.0) *
           std::pow(static_cast<double>(n), -1.0 / 7.0);
}

double bandwidth_floor(long n) { return 0.5 * std::pow(static_cast<double>(n), -1.0 / 7.0); }

double bandwidth_cap(long n) {
    return std::max(bandwidth_floor(n), std::min(0.8 * std::pow(static_cast<double>(n), -1.0 / 7.0), kMaxBandwidth));
}

double lower_median(std::vector<double> values) {
    if (values.empty()) throw ArgumentError("lower_median: empty input");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

namespace {

PointBandwidth select_point(const Dataset& data, const QuantilePath& path, QuantileSolver& solver,
                            const Eigen::MatrixXd& gram, const Eigen::VectorXd& x, double epsilon,
                            std::vector<std::string>& warnings) {
    const long n = data.n();
    const double lo = bandwidth_floor(n);
    const double hi = bandwidth_cap(n);
    PointBandwidth out;
    out.x = x;
    double h = hi;
    for (int pass = 0; pass < 2; ++pass) {
        const ModeEstimate m = estimate_mode(path, x, h, epsilon);
        if (pass == 0) out.tau_initial = m.tau_hat;
        out.tau_final = m.tau_hat;
        const Eigen::VectorXd beta = solver.solve(m.tau_hat);
        const JHat J = estimate_J(data, beta, m.tau_hat);
        const Eigen::VectorXd v = solve_J(J, x, &warnings);
        double s3 = normal_quantile_deriv4(m.tau_hat);
        if (std::abs(s3) < kDeriv4Floor) {
            s3 = kDeriv4Floor;
            warnings.push_back("bandwidth: rule-of-thumb third sparsity derivative floored");
        }
        const double raw = 0.8 * h_opt_formula(n, v, gram, s3);
        h = std::clamp(raw, lo, hi);
        out.clamped = raw != h;
    }
    out.h = h;
    return out;
}

}  // namespace

BandwidthReport select_bandwidth_simultaneous(const Dataset& data, const QuantilePath& path,
                                              const std::vector<Eigen::VectorXd>& points, double epsilon) {
    if (points.empty()) throw ArgumentError("select_bandwidth: need at least one design point");
    BandwidthReport report;
    report.h_initial = bandwidth_cap(data.n());
    report.iterations = 2;
    const Eigen::MatrixXd gram = data.X.transpose() * data.X / static_cast<double>(data.n());
    QuantileSolver solver(data);
    std::vector<double> hs;
    for (const auto& x : points) {
        try {
            PointBandwidth pb = select_point(data, path, solver, gram, x, epsilon, report.warnings);
            if (pb.clamped) {
                std::ostringstream os;
                os << "bandwidth: plug-in value clamped to [" << bandwidth_floor(data.n()) << ", "
                   << bandwidth_cap(data.n()) << "]";
                report.warnings.push_back(os.str());
            }
            hs.push_back(pb.h);
            report.per_point.push_back(std::move(pb));
        } catch (const EstimationError& e) {
            if (points.size() == 1) throw;
            report.warnings.push_back(std::string("bandwidth: design point excluded: ") + e.what());
        }
    }
    if (hs.empty()) throw EstimationError("bandwidth: selection failed at every design point");
    report.h_selected = lower_median(hs);
    report.tau_initial = report.per_point.front().tau_initial;
    std::sort(report.warnings.begin(), report.warnings.end());
    report.warnings.erase(std::unique(report.warnings.begin(), report.warnings.end()), report.warnings.end());
    return report;
}

BandwidthReport select_bandwidth_simultaneous(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                                              double epsilon) {
    const QuantilePath path =
        fit_path(data, path_grid(bandwidth_floor(data.n()), bandwidth_cap(data.n()), epsilon), epsilon);
    return select_bandwidth_simultaneous(data, path, points, epsilon);
}

BandwidthReport select_bandwidth(const Dataset& data, const Eigen::VectorXd& x, double epsilon) {
    return select_bandwidth_simultaneous(data, std::vector<Eigen::VectorXd>{x}, epsilon);
}

}  // namespace qmode
