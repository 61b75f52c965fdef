#include "qmode/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "qmode/errors.hpp"
#include "qmode/kernels.hpp"
#include "qmode/mode_estimator.hpp"
#include "qmode/parallel.hpp"
#include "qmode/random.hpp"

namespace qmode {

namespace {

constexpr std::uint64_t kPivotalStream = 0x7069766f74ULL;
constexpr std::uint64_t kResampleStream = 0x726573616dULL;
constexpr std::uint64_t kSigmaStream = 0x7369676d61ULL;

void check_specs(const std::vector<InfluenceSpec>& specs, const Dataset& data) {
    if (specs.empty()) throw ArgumentError("bootstrap: need at least one influence spec");
    for (const auto& s : specs) {
        if (s.h != specs.front().h) throw ArgumentError("bootstrap: influence specs must share one bandwidth");
        if (s.jinv_x.size() != data.d()) throw ArgumentError("bootstrap: influence spec dimension mismatch");
    }
}

void check_levels(const std::vector<double>& levels) {
    for (double l : levels) {
        if (!(l > 0.0 && l < 1.0)) throw ArgumentError("bootstrap: confidence levels must lie in (0,1)");
    }
}

Eigen::MatrixXd studentizer(const Eigen::MatrixXd& D, const Eigen::VectorXd& gamma) {
    return gamma.cwiseInverse().asDiagonal() * D;
}

void finish(BootstrapResult& r, const std::vector<double>& levels) {
    r.max_stat.resize(r.replicates.rows());
    for (Eigen::Index b = 0; b < r.replicates.rows(); ++b) r.max_stat(b) = r.replicates.row(b).cwiseAbs().maxCoeff();
    std::vector<double> v(r.max_stat.data(), r.max_stat.data() + r.max_stat.size());
    for (double level : levels) r.critical_values[level] = order_statistic_quantile(v, level);
}

}  // namespace

SigmaHat estimate_sigma_hat(const std::vector<InfluenceSpec>& specs, const Dataset& data, SigmaMethod method,
                            long mc_draws, std::uint64_t seed) {
    check_specs(specs, data);
    const auto L = static_cast<Eigen::Index>(specs.size());
    const double h = specs.front().h;
    const Eigen::MatrixXd gram = data.X.transpose() * data.X / static_cast<double>(data.n());
    Eigen::MatrixXd U(L, L);
    if (method == SigmaMethod::quadrature) {
        using Rule = boost::math::quadrature::gauss<double, 64>;
        for (Eigen::Index k = 0; k < L; ++k) {
            for (Eigen::Index l = k; l < L; ++l) {
                const double tk = specs[k].tau_hat;
                const double tl = specs[l].tau_hat;
                const double a = std::max({std::max(tk, tl) - h, 0.0});
                const double b = std::min({std::min(tk, tl) + h, 1.0});
                double v = 0.0;
                if (b > a) {
                    v = Rule::integrate(
                        [&](double u) {
                            return kernels::biweight((tk - u) / h, 1) * kernels::biweight((tl - u) / h, 1);
                        },
                        a, b);
                }
                U(k, l) = U(l, k) = v;
            }
        }
    } else {
        if (mc_draws < 1) throw ArgumentError("estimate_sigma_hat: Monte Carlo needs a positive draw count");
        U.setZero();
        Rng rng = make_stream(seed, kSigmaStream);
        Eigen::VectorXd k(L);
        for (long r = 0; r < mc_draws; ++r) {
            const double u = uniform01(rng);
            for (Eigen::Index j = 0; j < L; ++j) k(j) = kernels::biweight((specs[j].tau_hat - u) / h, 1);
            U.selfadjointView<Eigen::Lower>().rankUpdate(k);
        }
        U = Eigen::MatrixXd(U.selfadjointView<Eigen::Lower>()) / static_cast<double>(mc_draws);
    }
    SigmaHat out;
    out.method = method;
    if (method == SigmaMethod::monte_carlo) out.mc_draws = mc_draws;
    out.matrix.resize(L, L);
    for (Eigen::Index k = 0; k < L; ++k) {
        for (Eigen::Index l = k; l < L; ++l) {
            const double xg = specs[k].jinv_x.dot(gram * specs[l].jinv_x);
            out.matrix(k, l) = out.matrix(l, k) = specs[k].ratio * specs[l].ratio * xg * U(k, l) / h;
        }
    }
    return out;
}

Eigen::VectorXd gamma_hat(const SigmaHat& sigma, const Eigen::MatrixXd& D) {
    if (D.cols() != sigma.matrix.rows()) throw ArgumentError("gamma_hat: contrast has wrong number of columns");
    Eigen::VectorXd g(D.rows());
    for (Eigen::Index k = 0; k < D.rows(); ++k) {
        const double v = D.row(k).dot(sigma.matrix * D.row(k).transpose());
        if (!(v > 1e-12)) {
            throw DegenerateEstimateError("gamma_hat: contrast row " + std::to_string(k) + " has vanishing variance");
        }
        g(k) = std::sqrt(v);
    }
    return g;
}

double order_statistic_quantile(std::vector<double> values, double level) {
    if (values.empty()) throw ArgumentError("order_statistic_quantile: no values");
    auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(values.size()) * level - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::nth_element(values.begin(), values.begin() + static_cast<long>(rank - 1), values.end());
    return values[rank - 1];
}

double row_critical_value(const BootstrapResult& result, Eigen::Index k, double level) {
    const Eigen::VectorXd col = result.replicates.col(k).cwiseAbs();
    return order_statistic_quantile(std::vector<double>(col.data(), col.data() + col.size()), level);
}

BootstrapResult pivotal_bootstrap(const std::vector<InfluenceSpec>& specs, const Dataset& data,
                                  const Eigen::MatrixXd& D, int B, const std::vector<double>& levels,
                                  std::uint64_t seed, int threads) {
    return pivotal_bootstrap(specs, data, D, estimate_sigma_hat(specs, data), B, levels, seed, threads);
}

BootstrapResult pivotal_bootstrap(const std::vector<InfluenceSpec>& specs, const Dataset& data,
                                  const Eigen::MatrixXd& D, const SigmaHat& sigma, int B,
                                  const std::vector<double>& levels, std::uint64_t seed, int threads) {
    check_specs(specs, data);
    check_levels(levels);
    if (B < 100) throw ArgumentError("pivotal_bootstrap: B must be at least 100");
    const auto L = static_cast<Eigen::Index>(specs.size());
    if (D.cols() != L) throw ArgumentError("pivotal_bootstrap: contrast columns must match design points");

    BootstrapResult out;
    out.method = BootstrapMethod::pivotal;
    out.seed = seed;
    out.gamma_hat = gamma_hat(sigma, D);
    const Eigen::MatrixXd A = studentizer(D, out.gamma_hat);

    const double h = specs.front().h;
    const Eigen::Index n = data.n();
    Eigen::MatrixXd W(n, L);
    Eigen::VectorXd scale(L);
    Eigen::VectorXd tau(L);
    for (Eigen::Index l = 0; l < L; ++l) {
        W.col(l) = data.X * specs[l].jinv_x;
        scale(l) = specs[l].ratio / std::sqrt(h);
        tau(l) = specs[l].tau_hat;
    }
    const double root_n = std::sqrt(static_cast<double>(n));
    out.replicates.resize(B, D.rows());
    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        Rng rng = make_stream(seed, kPivotalStream, b);
        Eigen::VectorXd S = Eigen::VectorXd::Zero(L);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = uniform01(rng);
            for (Eigen::Index l = 0; l < L; ++l) {
                const double k = kernels::biweight((tau(l) - u) / h, 1);
                if (k != 0.0) S(l) += k * W(i, l);
            }
        }
        S = S.cwiseProduct(scale) / root_n;
        out.replicates.row(static_cast<Eigen::Index>(b)) = (A * S).transpose();
    });
    finish(out, levels);
    return out;
}

BootstrapResult nonparametric_bootstrap(const Dataset& data, const std::vector<Eigen::VectorXd>& points, double h,
                                        double epsilon, const Eigen::MatrixXd& D, int B,
                                        const std::vector<double>& levels, std::uint64_t seed,
                                        const Eigen::VectorXd& m_hat, const Eigen::VectorXd& gamma, int threads) {
    check_levels(levels);
    if (B < 100) throw ArgumentError("nonparametric_bootstrap: B must be at least 100");
    const auto L = static_cast<Eigen::Index>(points.size());
    if (L < 1 || D.cols() != L || m_hat.size() != L || gamma.size() != D.rows()) {
        throw ArgumentError("nonparametric_bootstrap: dimension mismatch");
    }
    const Eigen::MatrixXd A = studentizer(D, gamma);
    const std::vector<double> grid = path_grid(h, h, epsilon);
    const Eigen::Index n = data.n();
    const double root = std::sqrt(static_cast<double>(n) * h * h * h);

    Eigen::MatrixXd all(B, D.rows());
    std::vector<char> ok(static_cast<std::size_t>(B), 0);
    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        Rng rng = make_stream(seed, kResampleStream, b);
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        for (auto& r : rows) r = pick(rng);
        try {
            const Dataset sample = data.resample(rows);
            const QuantilePath path = fit_path(sample, grid, epsilon);
            Eigen::VectorXd diff(L);
            for (Eigen::Index l = 0; l < L; ++l) {
                diff(l) = root * (estimate_mode(path, points[static_cast<std::size_t>(l)], h, epsilon).m_hat - m_hat(l));
            }
            all.row(static_cast<Eigen::Index>(b)) = (A * diff).transpose();
            ok[b] = 1;
        } catch (const EstimationError&) {
        } catch (const ArgumentError&) {
        }
    });
    BootstrapResult out;
    out.method = BootstrapMethod::nonparametric;
    out.seed = seed;
    out.gamma_hat = gamma;
    out.failures = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
    if (out.failures > 0.02 * B) {
        throw BootstrapError("nonparametric bootstrap: " + std::to_string(out.failures) + " of " + std::to_string(B) +
                             " replicates failed");
    }
    out.replicates.resize(B - out.failures, D.rows());
    Eigen::Index row = 0;
    for (int b = 0; b < B; ++b) {
        if (ok[static_cast<std::size_t>(b)]) out.replicates.row(row++) = all.row(b);
    }
    finish(out, levels);
    return out;
}

}  // namespace qmode
