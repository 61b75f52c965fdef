#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmode/dataset.hpp"
#include "qmode/inference.hpp"

namespace qmode {

enum class ModelKind { lm_normal, lm_lognormal, nonlinear, binary_test };

std::string model_name(ModelKind kind);
ModelKind parse_model(const std::string& name);

struct SimModel {
    ModelKind kind = ModelKind::lm_normal;
    long n = 1000;
    std::uint64_t seed = 1;
    double alpha = 0.0;  //!< effect of the binary covariate (binary_test only)
};

//! Simulated sample with the intercept column prepended.
Dataset generate(const SimModel& model);

//! Conditional mode at a design point given with the intercept.
double true_mode(const SimModel& model, const Eigen::VectorXd& x);

//! Design point (1, x1) or (1, x1, x2) for the model.
Eigen::VectorXd design_point(ModelKind kind, double x1, double x2 = 0.0);

//! Fixed omega per model and covariate value; band values when band is true.
double tabulated_omega(ModelKind kind, double x1, bool band);

//! Pointwise asymptotic variance of sqrt(n h^3)(m_hat - m) for the linear normal model.
double lm_normal_variance(double x1);

//! Variance of sqrt(n h^3)(m_hat(x1, 1) - m_hat(x1, 0)) for the binary testing model.
double binary_oracle_variance();

struct CoverageExperiment {
    SimModel model;
    std::vector<double> points;  //!< covariate values; ignored for bands
    bool band = false;
    double band_lo = 0.4;
    double band_hi = 0.6;
    int band_points = 21;
    int reps = 500;
    int B = 500;
    std::vector<double> levels{0.95, 0.99};
    InferenceMethod method = InferenceMethod::pivotal;
    std::optional<double> omega;  //!< overrides the tabulated value
    int threads = 1;
};

struct CoverageRow {
    std::string point;
    long n = 0;
    double level = 0.0;
    double coverage = 0.0;
    double median_length = 0.0;
    double iqr_length = 0.0;
    int failures = 0;
};

struct CoverageTable {
    std::vector<CoverageRow> rows;
    int reps = 0;
    int B = 0;
};

CoverageTable run_coverage_experiment(const CoverageExperiment& experiment);

std::string coverage_csv(const CoverageTable& table);

struct TestExperiment {
    double alpha_effect = 1.0;
    std::vector<double> points{0.5};
    long n = 1000;
    int reps = 500;
    int B = 500;
    std::vector<double> levels{0.95, 0.99};
    std::uint64_t seed = 1;
    std::optional<double> omega;  //!< empty uses the tabulated values
    int threads = 1;
};

struct TestRow {
    double x1 = 0.0;
    double level = 0.0;
    double size = 0.0;
    double power = 0.0;
    double oracle_size = 0.0;
    double oracle_power = 0.0;
    int failures = 0;
};

std::vector<TestRow> run_test_experiment(const TestExperiment& experiment);

std::string test_csv(const std::vector<TestRow>& rows);

}  // namespace qmode
