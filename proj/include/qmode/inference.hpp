#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmode/bootstrap.hpp"
#include "qmode/pipeline.hpp"

namespace qmode {

enum class ContrastKind { identity, consecutive_diff, paired_diff, custom };

struct ContrastMatrix {
    Eigen::MatrixXd D;
    ContrastKind kind = ContrastKind::identity;
    std::vector<std::string> warnings;

    //! Checks rows are nonzero; warns on more than 8 nonzeros or entries above 10 in magnitude.
    static ContrastMatrix custom(Eigen::MatrixXd D);
};

//! size is L for identity and consecutive_diff, M for paired_diff (giving M x 2M).
ContrastMatrix make_contrasts(ContrastKind kind, int size);

enum class InferenceMethod { pivotal, nonparametric, gumbel };

struct InferenceConfig {
    EstimationConfig estimation;
    InferenceMethod method = InferenceMethod::pivotal;
    int B = 500;
    std::vector<double> levels{0.95, 0.99};
    int threads = 1;
    SigmaMethod sigma_method = SigmaMethod::quadrature;
    long mc_draws = 1000000;
};

//! Everything needed to form intervals and tests for one contrast matrix.
struct InferenceRun {
    long n = 0;
    FitResult fit;
    Eigen::MatrixXd D;
    SigmaHat sigma;
    Eigen::VectorXd gamma;
    std::optional<BootstrapResult> bootstrap;
    InferenceMethod method = InferenceMethod::pivotal;
    std::vector<double> levels;

    Eigen::VectorXd mode_vector() const;
    //! Critical value at a level, either for the max statistic or for contrast row k alone.
    double critical_value(double level, bool simultaneous, Eigen::Index k = 0) const;
};

InferenceRun run_inference(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                           const Eigen::MatrixXd& D, const InferenceConfig& config);

struct ConfidenceSet {
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd estimates;  //!< D m_hat
    std::map<double, Eigen::VectorXd> half_widths;
    std::map<double, Eigen::VectorXd> critical_values;  //!< per level, per row
    std::vector<double> levels;
    InferenceMethod method = InferenceMethod::pivotal;
    bool simultaneous = false;
    double h = 0.0;
    Eigen::VectorXd sigma;  //!< Gamma hat
    std::vector<std::string> warnings;
};

ConfidenceSet intervals_from(const InferenceRun& run, bool simultaneous);

ConfidenceSet confidence_intervals(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                                   const InferenceConfig& config, bool simultaneous = false);

ConfidenceSet confidence_band(const Dataset& data, const std::vector<Eigen::VectorXd>& grid,
                              const InferenceConfig& config);

struct TestDecision {
    double level;
    double critical_value;
    bool reject;
};

struct TestResult {
    double statistic = 0.0;
    std::vector<TestDecision> decisions;
    double h = 0.0;
    std::vector<std::string> warnings;
};

//! max_k sqrt(n h^3) |D_k' m_hat| / Gamma_k against the max-statistic critical value.
TestResult test_from(const InferenceRun& run);

TestResult test_significance(const Dataset& data, const std::vector<Eigen::VectorXd>& points,
                             const Eigen::MatrixXd& D, const InferenceConfig& config);

//! b + a^{-1} (-log(-log(1 - alpha))) with a = sqrt(2 log L).
double gumbel_critical(int L, double alpha, std::vector<std::string>* warnings = nullptr);

}  // namespace qmode
