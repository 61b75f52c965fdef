#include "qmode/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "qmode/errors.hpp"
#include "qmode/kernels.hpp"
#include "qmode/random.hpp"

namespace qmode {

namespace {

const boost::math::normal kStdNormal;

double sample_sd(const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(v.size() - 1, 1)));
}

//! Type-7 sample quantile.
double sample_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double gaussian_second_derivative(double u) {
    return (u * u - 1.0) * std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
}

double epanechnikov(double u) { return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

struct F2Context {
    double sd_x = 0.0;
    double sd_y = 0.0;
};

F2Context f2_context(const Dataset& data, const CovariateRoles& roles) {
    F2Context c;
    c.sd_y = sample_sd(data.Y);
    if (roles.continuous >= 0) c.sd_x = sample_sd(data.X.col(roles.continuous));
    return c;
}

double f2_with_context(const Dataset& data, const Eigen::VectorXd& x, double m_hat, double omega,
                       const CovariateRoles& roles, const F2Context& ctx) {
    const auto n = static_cast<double>(data.n());
    const double by = omega * std::pow(n, -1.0 / 9.0) * ctx.sd_y;
    const double bx = omega * std::pow(n, -1.0 / 5.0) * ctx.sd_x;
    if (!(by > 0.0)) throw DegenerateEstimateError("f2 estimate: response has zero spread");
    if (roles.continuous >= 0 && !(bx > 0.0)) throw DegenerateEstimateError("f2 estimate: covariate has zero spread");
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        bool match = true;
        for (int c : roles.matched) {
            if (data.X(i, c) != x(c)) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        const double w = roles.continuous >= 0 ? epanechnikov((x(roles.continuous) - data.X(i, roles.continuous)) / bx) : 1.0;
        if (w == 0.0) continue;
        num += gaussian_second_derivative((m_hat - data.Y(i)) / by) * w;
        den += w;
    }
    if (!(den > 0.0)) throw DegenerateEstimateError("f2 estimate: no covariate mass near the design point");
    return num / (by * by * by * den);
}

}  // namespace

JHat powell_J(const Dataset& data, const Eigen::VectorXd& beta_tau, double h_check, double tau) {
    if (!(h_check > 0.0)) throw ArgumentError("powell_J: window must be positive");
    const Eigen::VectorXd r = data.Y - data.X * beta_tau;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(data.d(), data.d());
    long count = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (std::abs(r(i)) <= h_check) {
            sum.selfadjointView<Eigen::Lower>().rankUpdate(data.X.row(i).transpose());
            ++count;
        }
    }
    if (count == 0) throw DegenerateEstimateError("powell_J: no residuals inside the window");
    JHat J;
    J.tau = tau;
    J.matrix = sum.selfadjointView<Eigen::Lower>();
    J.matrix /= 2.0 * static_cast<double>(data.n()) * h_check;
    J.bandwidth_check = h_check;
    return J;
}

double hall_sheather_bandwidth(long n, double tau, double alpha) {
    if (n < 2) throw ArgumentError("hall_sheather_bandwidth: n must be at least 2");
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("hall_sheather_bandwidth: tau must lie in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("hall_sheather_bandwidth: alpha must lie in (0,1)");
    const double z = boost::math::quantile(kStdNormal, 1.0 - alpha / 2.0);
    const double q = boost::math::quantile(kStdNormal, tau);
    const double f = boost::math::pdf(kStdNormal, q);
    return std::pow(static_cast<double>(n), -1.0 / 3.0) * std::pow(z, 2.0 / 3.0) *
           std::cbrt(1.5 * f * f / (2.0 * q * q + 1.0));
}

double residual_scale_bandwidth(const Eigen::VectorXd& residuals, double tau, double h_tau) {
    const double h = std::min(h_tau, 0.999 * std::min(tau, 1.0 - tau));
    const double width = boost::math::quantile(kStdNormal, tau + h) - boost::math::quantile(kStdNormal, tau - h);
    std::vector<double> r(residuals.data(), residuals.data() + residuals.size());
    const double iqr = sample_quantile(r, 0.75) - sample_quantile(r, 0.25);
    double scale = std::min(sample_sd(residuals), iqr / 1.34);
    if (!(scale > 0.0)) scale = std::max(sample_sd(residuals), iqr / 1.34);
    return width * scale;
}

JHat estimate_J(const Dataset& data, const Eigen::VectorXd& beta_tau, double tau) {
    const Eigen::VectorXd r = data.Y - data.X * beta_tau;
    const double h = residual_scale_bandwidth(r, tau, hall_sheather_bandwidth(data.n(), tau));
    if (!(h > 0.0)) throw DegenerateEstimateError("powell_J: residuals have zero spread");
    return powell_J(data, beta_tau, h, tau);
}

Eigen::VectorXd solve_J(const JHat& J, const Eigen::VectorXd& x, std::vector<std::string>* warnings) {
    if (x.size() != J.matrix.rows()) throw ArgumentError("solve_J: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J.matrix);
    const double smallest = eig.eigenvalues().minCoeff();
    if (smallest < 1e-10) {
        const auto d = static_cast<double>(J.matrix.rows());
        const double ridge = 1e-8 * J.matrix.trace() / d;
        if (warnings) warnings->push_back("J estimate near singular; ridge added");
        Eigen::MatrixXd R = J.matrix;
        R.diagonal().array() += ridge > 0.0 ? ridge : 1e-8;
        return R.ldlt().solve(x);
    }
    return J.matrix.ldlt().solve(x);
}

CovariateRoles CovariateRoles::infer(const Eigen::MatrixXd& X) {
    CovariateRoles roles;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        if (X.col(c).maxCoeff() == X.col(c).minCoeff()) continue;
        if (roles.continuous < 0) {
            roles.continuous = static_cast<int>(c);
        } else {
            roles.matched.push_back(static_cast<int>(c));
        }
    }
    return roles;
}

double f2_kernel_estimate(const Dataset& data, const Eigen::VectorXd& x, double m_hat, double omega,
                          const CovariateRoles& roles) {
    if (!(omega > 0.0)) throw ArgumentError("f2 estimate: omega must be positive");
    if (x.size() != data.d()) throw ArgumentError("f2 estimate: design point dimension mismatch");
    return f2_with_context(data, x, m_hat, omega, roles, f2_context(data, roles));
}

std::vector<double> default_omega_grid() {
    std::vector<double> g(13);
    for (int j = 0; j < 13; ++j) g[j] = 0.05 + 0.1 * j;
    return g;
}

namespace {

//! Step 2: per resample, the largest grid value whose successive change dominates the last one.
std::vector<double> stability_winners(const Dataset& data, const Eigen::VectorXd& x, double m_hat,
                                      const std::vector<double>& grid, double t, int resamples, Rng& rng,
                                      const CovariateRoles& roles) {
    std::vector<double> winners;
    std::uniform_int_distribution<Eigen::Index> pick(0, data.n() - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.n()));
    std::vector<double> f(grid.size());
    for (int b = 0; b < resamples; ++b) {
        for (auto& r : rows) r = pick(rng);
        const Dataset sample = data.resample(rows);
        try {
            const F2Context ctx = f2_context(sample, roles);
            for (std::size_t j = 0; j < grid.size(); ++j) f[j] = f2_with_context(sample, x, m_hat, grid[j], roles, ctx);
        } catch (const DegenerateEstimateError&) {
            continue;
        }
        const std::size_t J = grid.size();
        const double last = std::abs(f[J - 1] - f[J - 2]);
        double best = -1.0;
        for (std::size_t j = 0; j + 1 < J; ++j) {
            if (std::abs(f[j + 1] - f[j]) >= t * last) best = grid[j];
        }
        if (best > 0.0) winners.push_back(best);
    }
    return winners;
}

double mode_of(const std::vector<double>& values) {
    std::map<double, int> counts;
    for (double v : values) ++counts[v];
    double best = counts.begin()->first;
    int best_count = 0;
    for (const auto& [v, c] : counts) {
        if (c > best_count) {
            best = v;
            best_count = c;
        }
    }
    return best;
}

}  // namespace

OmegaSelection select_omega(const Dataset& data, const Eigen::VectorXd& x, double m_hat,
                            const std::vector<double>& grid1, double t, int resamples, std::uint64_t seed,
                            double fallback, const CovariateRoles& roles) {
    if (grid1.size() < 3) throw ArgumentError("select_omega: grid needs at least 3 values");
    for (std::size_t j = 0; j < grid1.size(); ++j) {
        if (!(grid1[j] > 0.0) || (j > 0 && !(grid1[j] > grid1[j - 1]))) {
            throw ArgumentError("select_omega: grid must be positive and increasing");
        }
    }
    if (!(t > 1.0)) throw ArgumentError("select_omega: threshold factor must exceed 1");
    if (resamples < 1) throw ArgumentError("select_omega: need at least one resample");

    OmegaSelection out;
    Rng rng = make_stream(seed, 0x6f6d656761ULL);
    const std::vector<double> first = stability_winners(data, x, m_hat, grid1, t, resamples, rng, roles);
    if (first.empty()) {
        out.omega = fallback;
        out.used_fallback = true;
        out.warnings.push_back("omega selection: no grid value passed the stability threshold; using fallback");
        return out;
    }
    out.step2_omega = mode_of(first);

    const double step = grid1[1] - grid1[0];
    double start = out.step2_omega - 3.0 * step;
    if (start <= 0.0) start = grid1.front();
    for (int k = 0; k < 7; ++k) out.subgrid.push_back(start + step * k);

    const std::vector<double> second = stability_winners(data, x, m_hat, out.subgrid, t, resamples, rng, roles);
    if (second.empty()) {
        out.omega = out.step2_omega;
        out.warnings.push_back("omega selection: refinement found no stable value; keeping the first-stage choice");
    } else {
        out.omega = mode_of(second);
    }
    return out;
}

SparsityCurvature sparsity_second_derivative(double f2_hat, double s_hat) {
    if (!(s_hat > 0.0)) throw ArgumentError("sparsity must be positive");
    const double value = -f2_hat * std::pow(s_hat, 4);
    return {value, !(value > 0.0)};
}

double floor_curvature(double s2) {
    if (std::abs(s2) >= 1e-6) return s2;
    return s2 < 0.0 ? -1e-6 : 1e-6;
}

double influence_eval(const InfluenceSpec& spec, double u, const Eigen::VectorXd& x_prime) {
    if (x_prime.size() != spec.jinv_x.size()) throw ArgumentError("influence_eval: dimension mismatch");
    const double k = kernels::biweight((spec.tau_hat - u) / spec.h, 1);
    if (k == 0.0) return 0.0;
    return spec.ratio / std::sqrt(spec.h) * k * spec.jinv_x.dot(x_prime);
}

}  // namespace qmode
