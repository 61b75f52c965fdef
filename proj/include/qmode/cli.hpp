#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace qmode::cli {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
    std::string command;
    std::string input_path;
    std::string response_column = "y";
    std::vector<std::string> covariate_columns;  //!< empty means every other column
    std::vector<std::vector<double>> design_points;
    std::string points_file;
    std::string grid;                 //!< band: "lo:hi:count" over the first covariate
    std::vector<double> fixed_values;  //!< band: remaining covariates
    double epsilon = 0.1;
    std::optional<double> bandwidth;  //!< empty is automatic
    std::string method = "pivotal";
    int B = 500;
    std::vector<double> levels{0.95, 0.99};
    std::string contrast = "identity";  //!< identity | consecutive_diff | paired_diff | path to a CSV
    std::optional<double> omega;        //!< empty is automatic
    int omega_resamples = 100;
    double omega_threshold = 3.0;
    std::string continuous_column = "auto";
    bool simultaneous = false;
    std::uint64_t seed = 12345;
    int threads = 1;
    std::string output_path;
    // simulate
    std::string model = "lmNormal";
    long n = 1000;
    int reps = 500;
    std::vector<double> sim_points;
    bool band = false;
    double band_lo = 0.4;
    double band_hi = 0.6;
    int band_points = 21;
    bool test = false;
    double alpha_effect = 1.0;
    bool export_data = false;
};

//! Serialized form; runtime-only fields (threads, output path) are left out when echoing.
nlohmann::json config_to_json(const RunConfig& config, bool include_runtime = true);
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json cmd_fit(const RunConfig& config);
nlohmann::json cmd_ci(const RunConfig& config);
nlohmann::json cmd_band(const RunConfig& config);
nlohmann::json cmd_test(const RunConfig& config);
nlohmann::json cmd_select_bandwidth(const RunConfig& config);
//! CSV text: a coverage table, a size/power table, or a generated dataset.
std::string cmd_simulate(const RunConfig& config);

//! Full command line entry point; returns the process exit code (0, 2 or 3).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qmode::cli
