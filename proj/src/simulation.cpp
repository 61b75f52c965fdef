#include "qmode/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "qmode/errors.hpp"
#include "qmode/kernels.hpp"
#include "qmode/parallel.hpp"
#include "qmode/random.hpp"

namespace qmode {

namespace {

constexpr std::uint64_t kDataStream = 0x64617461ULL;
constexpr std::uint64_t kRepStream = 0x726570ULL;
const double kPhi0 = 1.0 / std::sqrt(2.0 * M_PI);

std::uint64_t rep_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t tag) {
    Rng r = make_stream(seed, kRepStream + tag, rep);
    return r();
}

double sample_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double sample_quantile7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

}  // namespace

std::string model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::lm_normal: return "lmNormal";
        case ModelKind::lm_lognormal: return "lmLognormal";
        case ModelKind::nonlinear: return "Nonlinear";
        case ModelKind::binary_test: return "BinaryTest";
    }
    return "";
}

ModelKind parse_model(const std::string& name) {
    for (ModelKind k : {ModelKind::lm_normal, ModelKind::lm_lognormal, ModelKind::nonlinear, ModelKind::binary_test}) {
        if (model_name(k) == name) return k;
    }
    throw ArgumentError("unknown model '" + name + "' (expected lmNormal, lmLognormal, Nonlinear or BinaryTest)");
}

Dataset generate(const SimModel& model) {
    if (model.n < 1) throw ArgumentError("generate: n must be positive");
    Rng rng = make_stream(model.seed, kDataStream);
    std::normal_distribution<double> z(0.0, 1.0);
    const bool binary = model.kind == ModelKind::binary_test;
    const Eigen::Index n = model.n;
    Eigen::MatrixXd X(n, binary ? 3 : 2);
    Eigen::VectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        switch (model.kind) {
            case ModelKind::lm_normal: {
                const double x1 = uniform01(rng);
                X(i, 1) = x1;
                Y(i) = 1.0 + 3.0 * x1 + (1.0 + 2.0 * x1) * z(rng);
                break;
            }
            case ModelKind::lm_lognormal: {
                const double x1 = uniform01(rng);
                X(i, 1) = x1;
                Y(i) = 1.0 + 3.0 * x1 + (1.0 + 2.0 * x1) * std::exp(1.0 + 0.8 * z(rng));
                break;
            }
            case ModelKind::nonlinear: {
                const double x1 = 3.0 * uniform01(rng);
                const double u = uniform01(rng);
                X(i, 1) = x1;
                Y(i) = 3.0 * u * u * u - 3.0 * x1 * u * u + 3.0 * x1 * u;
                break;
            }
            case ModelKind::binary_test: {
                const double x1 = uniform01(rng);
                const double x2 = uniform01(rng) < 0.5 ? 1.0 : 0.0;
                X(i, 1) = x1;
                X(i, 2) = x2;
                Y(i) = 1.0 + 3.0 * x1 + model.alpha * x2 + z(rng);
                break;
            }
        }
    }
    return Dataset::make(std::move(X), std::move(Y));
}

double true_mode(const SimModel& model, const Eigen::VectorXd& x) {
    const double x1 = x(1);
    switch (model.kind) {
        case ModelKind::lm_normal: return 1.0 + 3.0 * x1;
        case ModelKind::lm_lognormal: return 1.0 + 3.0 * x1 + (1.0 + 2.0 * x1) * std::exp(0.36);
        case ModelKind::nonlinear: return -2.0 * x1 * x1 * x1 / 9.0 + x1 * x1;
        case ModelKind::binary_test: return 1.0 + 3.0 * x1 + model.alpha * x(2);
    }
    return 0.0;
}

Eigen::VectorXd design_point(ModelKind kind, double x1, double x2) {
    if (kind == ModelKind::binary_test) return Eigen::Vector3d(1.0, x1, x2);
    return Eigen::Vector2d(1.0, x1);
}

double tabulated_omega(ModelKind kind, double x1, bool band) {
    struct Row {
        std::array<double, 3> x;
        std::array<double, 3> omega;
        double band;
    };
    static const Row normal{{0.3, 0.5, 0.7}, {0.75, 0.85, 0.95}, 1.00};
    static const Row lognormal{{0.3, 0.5, 0.7}, {0.35, 0.45, 0.55}, 0.60};
    static const Row nonlinear{{0.7, 0.9, 1.1}, {0.55, 0.65, 0.75}, 0.80};
    // Selected once at n = 2000 on null data (t = 2, N = 500).
    static const Row binary{{0.3, 0.5, 0.7}, {0.85, 0.95, 0.95}, 1.00};
    const Row& row = kind == ModelKind::lm_lognormal ? lognormal
                     : kind == ModelKind::nonlinear  ? nonlinear
                     : kind == ModelKind::binary_test ? binary
                                                      : normal;
    if (band) return row.band;
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
        if (std::abs(row.x[k] - x1) < std::abs(row.x[best] - x1)) best = k;
    }
    return row.omega[best];
}

double lm_normal_variance(double x1) {
    using Rule = boost::math::quadrature::gauss<double, 30>;
    // J(0.5) = phi(0) E[X X' / sigma(X1)], G = E[X X'].
    Eigen::Matrix2d J;
    Eigen::Matrix2d G;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const int p = a + b;
            J(a, b) = kPhi0 * Rule::integrate([&](double u) { return std::pow(u, p) / (1.0 + 2.0 * u); }, 0.0, 1.0);
            G(a, b) = 1.0 / (p + 1.0);
        }
    }
    const Eigen::Vector2d x(1.0, x1);
    const Eigen::Vector2d v = J.ldlt().solve(x);
    const double sigma = 1.0 + 2.0 * x1;
    const double s = sigma / kPhi0;
    const double s2 = sigma / (kPhi0 * kPhi0 * kPhi0);
    return (s / s2) * (s / s2) * kernels::kernel_constants().kappa1 * v.dot(G * v);
}

double binary_oracle_variance() {
    Eigen::Matrix3d G;
    G << 1.0, 0.5, 0.5, 0.5, 1.0 / 3.0, 0.25, 0.5, 0.25, 0.5;
    const Eigen::Vector3d c(0.0, 0.0, 1.0);
    return kPhi0 * kPhi0 * kernels::kernel_constants().kappa1 * c.dot(G.ldlt().solve(c));
}

CoverageTable run_coverage_experiment(const CoverageExperiment& ex) {
    if (ex.reps < 1) throw ArgumentError("coverage experiment: reps must be positive");
    if (ex.model.kind == ModelKind::binary_test) throw ArgumentError("coverage experiment: use a regression model");
    if (!ex.band && ex.points.empty()) throw ArgumentError("coverage experiment: no design points");

    struct Group {
        std::string label;
        std::vector<Eigen::VectorXd> points;
        double omega;
    };
    std::vector<Group> groups;
    if (ex.band) {
        Group g;
        std::ostringstream label;
        label << "band[" << ex.band_lo << ";" << ex.band_hi << "]";
        g.label = label.str();
        for (int k = 0; k < ex.band_points; ++k) {
            const double x1 = ex.band_points == 1 ? ex.band_lo
                                                   : ex.band_lo + (ex.band_hi - ex.band_lo) * k / (ex.band_points - 1);
            g.points.push_back(design_point(ex.model.kind, x1));
        }
        g.omega = ex.omega.value_or(tabulated_omega(ex.model.kind, ex.band_lo, true));
        groups.push_back(std::move(g));
    } else {
        for (double x1 : ex.points) {
            Group g;
            g.label = format_number(x1);
            g.points.push_back(design_point(ex.model.kind, x1));
            g.omega = ex.omega.value_or(tabulated_omega(ex.model.kind, x1, false));
            groups.push_back(std::move(g));
        }
    }

    const std::size_t G = groups.size();
    const std::size_t nl = ex.levels.size();
    // per group, per rep: success flag, per level covered + length
    std::vector<std::vector<char>> ok(G, std::vector<char>(static_cast<std::size_t>(ex.reps), 0));
    std::vector<std::vector<std::vector<char>>> covered(
        G, std::vector<std::vector<char>>(nl, std::vector<char>(static_cast<std::size_t>(ex.reps), 0)));
    std::vector<std::vector<std::vector<double>>> length(
        G, std::vector<std::vector<double>>(nl, std::vector<double>(static_cast<std::size_t>(ex.reps), 0.0)));

    parallel_for(static_cast<std::size_t>(ex.reps), ex.threads, [&](std::size_t rep) {
        SimModel m = ex.model;
        m.seed = rep_seed(ex.model.seed, rep, 0);
        const Dataset data = generate(m);
        for (std::size_t g = 0; g < G; ++g) {
            InferenceConfig cfg;
            cfg.method = ex.method;
            cfg.B = ex.B;
            cfg.levels = ex.levels;
            cfg.threads = 1;
            cfg.estimation.omega.automatic = false;
            cfg.estimation.omega.fixed = {groups[g].omega};
            cfg.estimation.seed = rep_seed(ex.model.seed, rep, 1 + g);
            try {
                const ConfidenceSet cs = confidence_intervals(data, groups[g].points, cfg, ex.band);
                for (std::size_t li = 0; li < nl; ++li) {
                    const Eigen::VectorXd& hw = cs.half_widths.at(ex.levels[li]);
                    bool all = true;
                    std::vector<double> lens;
                    for (std::size_t l = 0; l < groups[g].points.size(); ++l) {
                        const double truth = true_mode(m, groups[g].points[l]);
                        const auto k = static_cast<Eigen::Index>(l);
                        if (std::abs(cs.estimates(k) - truth) > hw(k)) all = false;
                        lens.push_back(2.0 * hw(k));
                    }
                    covered[g][li][rep] = all ? 1 : 0;
                    length[g][li][rep] = sample_median(lens);
                }
                ok[g][rep] = 1;
            } catch (const EstimationError&) {
            } catch (const ArgumentError&) {
            }
        }
    });

    CoverageTable table;
    table.reps = ex.reps;
    table.B = ex.B;
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t li = 0; li < nl; ++li) {
            CoverageRow row;
            row.point = groups[g].label;
            row.n = ex.model.n;
            row.level = ex.levels[li];
            std::vector<double> lens;
            int hits = 0;
            for (std::size_t rep = 0; rep < static_cast<std::size_t>(ex.reps); ++rep) {
                if (!ok[g][rep]) continue;
                hits += covered[g][li][rep];
                lens.push_back(length[g][li][rep]);
            }
            row.failures = ex.reps - static_cast<int>(lens.size());
            if (!lens.empty()) {
                row.coverage = static_cast<double>(hits) / static_cast<double>(lens.size());
                row.median_length = sample_median(lens);
                row.iqr_length = sample_quantile7(lens, 0.75) - sample_quantile7(lens, 0.25);
            } else {
                row.coverage = std::nan("");
                row.median_length = std::nan("");
                row.iqr_length = std::nan("");
            }
            table.rows.push_back(row);
        }
    }
    return table;
}

std::string coverage_csv(const CoverageTable& table) {
    std::ostringstream os;
    os << "point,n,level,coverage,median_length,iqr_length,failures\n";
    for (const auto& r : table.rows) {
        os << r.point << ',' << r.n << ',' << format_number(r.level) << ',' << format_number(r.coverage) << ','
           << format_number(r.median_length) << ',' << format_number(r.iqr_length) << ',' << r.failures << '\n';
    }
    return os.str();
}

std::vector<TestRow> run_test_experiment(const TestExperiment& ex) {
    if (ex.reps < 1) throw ArgumentError("test experiment: reps must be positive");
    if (ex.points.empty()) throw ArgumentError("test experiment: no design points");
    const std::size_t P = ex.points.size();
    const std::size_t nl = ex.levels.size();
    const double oracle_sd = std::sqrt(binary_oracle_variance());
    const boost::math::normal z;
    // [scheme][point][level][rep]
    using Grid = std::vector<std::vector<std::vector<char>>>;
    std::array<Grid, 2> boot;
    std::array<Grid, 2> oracle;
    std::array<std::vector<std::vector<char>>, 2> ok;
    for (int s = 0; s < 2; ++s) {
        boot[s] = Grid(P, std::vector<std::vector<char>>(nl, std::vector<char>(static_cast<std::size_t>(ex.reps), 0)));
        oracle[s] = boot[s];
        ok[s] = std::vector<std::vector<char>>(P, std::vector<char>(static_cast<std::size_t>(ex.reps), 0));
    }

    parallel_for(static_cast<std::size_t>(ex.reps), ex.threads, [&](std::size_t rep) {
        for (int scheme = 0; scheme < 2; ++scheme) {
            SimModel m;
            m.kind = ModelKind::binary_test;
            m.n = ex.n;
            m.alpha = scheme == 0 ? 0.0 : ex.alpha_effect;
            m.seed = rep_seed(ex.seed, rep, 100 + scheme);
            const Dataset data = generate(m);
            for (std::size_t p = 0; p < P; ++p) {
                const double x1 = ex.points[p];
                const std::vector<Eigen::VectorXd> pts{design_point(ModelKind::binary_test, x1, 1.0),
                                                       design_point(ModelKind::binary_test, x1, 0.0)};
                InferenceConfig cfg;
                cfg.B = ex.B;
                cfg.levels = ex.levels;
                cfg.estimation.omega.automatic = false;
                cfg.estimation.omega.fixed = {ex.omega ? *ex.omega : tabulated_omega(ModelKind::binary_test, x1, false)};
                cfg.estimation.seed = rep_seed(ex.seed, rep, 200 + 2 * p + static_cast<std::size_t>(scheme));
                try {
                    const InferenceRun run =
                        run_inference(data, pts, make_contrasts(ContrastKind::paired_diff, 1).D, cfg);
                    const TestResult t = test_from(run);
                    const Eigen::VectorXd m_hat = run.mode_vector();
                    const double h = run.fit.h;
                    const double oracle_stat =
                        std::sqrt(static_cast<double>(ex.n) * h * h * h) * std::abs(m_hat(0) - m_hat(1)) / oracle_sd;
                    for (std::size_t li = 0; li < nl; ++li) {
                        boot[scheme][p][li][rep] = t.decisions[li].reject ? 1 : 0;
                        const double crit = boost::math::quantile(z, 1.0 - (1.0 - ex.levels[li]) / 2.0);
                        oracle[scheme][p][li][rep] = oracle_stat > crit ? 1 : 0;
                    }
                    ok[scheme][p][rep] = 1;
                } catch (const EstimationError&) {
                } catch (const ArgumentError&) {
                }
            }
        }
    });

    std::vector<TestRow> rows;
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t li = 0; li < nl; ++li) {
            TestRow r;
            r.x1 = ex.points[p];
            r.level = ex.levels[li];
            std::array<double, 2> rate{};
            std::array<double, 2> orate{};
            for (int s = 0; s < 2; ++s) {
                int count = 0;
                int rej = 0;
                int orej = 0;
                for (std::size_t rep = 0; rep < static_cast<std::size_t>(ex.reps); ++rep) {
                    if (!ok[s][p][rep]) continue;
                    ++count;
                    rej += boot[s][p][li][rep];
                    orej += oracle[s][p][li][rep];
                }
                r.failures += ex.reps - count;
                rate[s] = count ? static_cast<double>(rej) / count : std::nan("");
                orate[s] = count ? static_cast<double>(orej) / count : std::nan("");
            }
            r.size = rate[0];
            r.power = rate[1];
            r.oracle_size = orate[0];
            r.oracle_power = orate[1];
            rows.push_back(r);
        }
    }
    return rows;
}

std::string test_csv(const std::vector<TestRow>& rows) {
    std::ostringstream os;
    os << "point,level,size,power,oracle_size,oracle_power,failures\n";
    for (const auto& r : rows) {
        os << format_number(r.x1) << ',' << format_number(r.level) << ',' << format_number(r.size) << ','
           << format_number(r.power) << ',' << format_number(r.oracle_size) << ',' << format_number(r.oracle_power)
           << ',' << r.failures << '\n';
    }
    return os.str();
}

}  // namespace qmode
