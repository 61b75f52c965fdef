#include "qmode/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "qmode/bandwidth.hpp"
#include "qmode/csv.hpp"
#include "qmode/inference.hpp"
#include "qmode/simulation.hpp"

namespace qmode::cli {

using nlohmann::json;

namespace {

double parse_number(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ConfigError(what + ": invalid number '" + s + "'");
    }
    return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        out.push_back(parse_number(b == std::string::npos ? "" : item.substr(b, e - b + 1), what));
    }
    return out;
}

std::vector<std::vector<double>> parse_points(const std::string& s) {
    std::vector<std::vector<double>> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ';')) {
        if (!item.empty()) out.push_back(parse_list(item, "--points"));
    }
    return out;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string level_key(double level) {
    std::ostringstream os;
    os << level;
    return os.str();
}

struct Loaded {
    Dataset data;
    std::vector<std::string> covariates;
};

Loaded load(const RunConfig& c) {
    if (c.input_path.empty()) throw ConfigError("--input is required");
    const CsvTable table = read_csv(c.input_path);
    Loaded l;
    l.covariates = c.covariate_columns;
    if (l.covariates.empty()) {
        table.column(c.response_column);
        for (const auto& h : table.header) {
            if (h != c.response_column) l.covariates.push_back(h);
        }
    }
    l.data = dataset_from_csv(table, c.response_column, l.covariates);
    return l;
}

std::vector<Eigen::VectorXd> design_points(const RunConfig& c, const Loaded& l) {
    std::vector<std::vector<double>> raw = c.design_points;
    if (!c.points_file.empty()) {
        const CsvTable t = read_csv(c.points_file);
        std::vector<std::size_t> cols;
        for (const auto& name : l.covariates) cols.push_back(t.column(name));
        for (const auto& row : t.rows) {
            std::vector<double> p;
            for (auto col : cols) p.push_back(row[col]);
            raw.push_back(p);
        }
    }
    if (!c.grid.empty()) {
        std::vector<std::string> parts;
        std::string item;
        std::istringstream is(c.grid);
        while (std::getline(is, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw ConfigError("--grid must look like LO:HI:COUNT");
        const double lo = parse_number(parts[0], "--grid");
        const double hi = parse_number(parts[1], "--grid");
        const double count = parse_number(parts[2], "--grid");
        if (count < 1 || count != std::floor(count)) throw ConfigError("--grid count must be a positive integer");
        const auto k = static_cast<int>(count);
        for (int i = 0; i < k; ++i) {
            std::vector<double> p{k == 1 ? lo : lo + (hi - lo) * i / (k - 1)};
            p.insert(p.end(), c.fixed_values.begin(), c.fixed_values.end());
            raw.push_back(p);
        }
    }
    if (raw.empty() && l.covariates.empty()) raw.emplace_back();
    if (raw.empty()) throw ConfigError("no design points given (use --points, --points-file or --grid)");
    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != l.covariates.size()) {
            throw ConfigError("design point " + std::to_string(i) + " has " + std::to_string(raw[i].size()) +
                              " values but there are " + std::to_string(l.covariates.size()) + " covariates");
        }
        Eigen::VectorXd x(static_cast<Eigen::Index>(raw[i].size() + 1));
        x(0) = 1.0;
        for (std::size_t j = 0; j < raw[i].size(); ++j) x(static_cast<Eigen::Index>(j + 1)) = raw[i][j];
        out.push_back(x);
    }
    return out;
}

InferenceMethod parse_method(const std::string& m) {
    if (m == "pivotal") return InferenceMethod::pivotal;
    if (m == "nonparametric") return InferenceMethod::nonparametric;
    if (m == "gumbel") return InferenceMethod::gumbel;
    throw ConfigError("unknown method '" + m + "'");
}

InferenceConfig inference_config(const RunConfig& c, const Loaded& l) {
    InferenceConfig ic;
    ic.method = parse_method(c.method);
    ic.B = c.B;
    ic.levels = c.levels;
    ic.threads = c.threads;
    auto& e = ic.estimation;
    e.epsilon = c.epsilon;
    e.bandwidth = c.bandwidth;
    e.seed = c.seed;
    e.omega.automatic = !c.omega.has_value();
    if (c.omega) e.omega.fixed = {*c.omega};
    e.omega.resamples = c.omega_resamples;
    e.omega.threshold = c.omega_threshold;
    if (c.continuous_column != "auto") {
        CovariateRoles roles;
        bool found = c.continuous_column == "none";
        for (std::size_t j = 0; j < l.covariates.size(); ++j) {
            const int col = static_cast<int>(j + 1);
            if (l.covariates[j] == c.continuous_column) {
                roles.continuous = col;
                found = true;
            } else {
                roles.matched.push_back(col);
            }
        }
        if (!found) throw ConfigError("continuous column '" + c.continuous_column + "' is not a covariate");
        e.roles = roles;
    }
    return ic;
}

Eigen::MatrixXd contrast_matrix(const std::string& spec, int L) {
    if (spec == "identity") return make_contrasts(ContrastKind::identity, L).D;
    if (spec == "consecutive_diff") return make_contrasts(ContrastKind::consecutive_diff, L).D;
    if (spec == "paired_diff") {
        if (L % 2 != 0) throw ConfigError("paired_diff needs an even number of design points");
        return make_contrasts(ContrastKind::paired_diff, L / 2).D;
    }
    std::ifstream in(spec);
    if (!in) throw ConfigError("unknown contrast '" + spec + "' (not a kind and not a readable file)");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        rows.push_back(parse_list(line, "contrast file"));
    }
    if (rows.empty()) throw ConfigError("contrast file is empty");
    Eigen::MatrixXd D(static_cast<Eigen::Index>(rows.size()), L);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (static_cast<int>(rows[k].size()) != L) {
            throw ConfigError("contrast row " + std::to_string(k) + " has " + std::to_string(rows[k].size()) +
                              " entries for " + std::to_string(L) + " design points");
        }
        for (int j = 0; j < L; ++j) D(static_cast<Eigen::Index>(k), j) = rows[k][static_cast<std::size_t>(j)];
    }
    return ContrastMatrix::custom(D).D;
}

json bandwidth_json(const BandwidthReport& r) {
    json per = json::array();
    for (const auto& p : r.per_point) {
        per.push_back({{"x", vec_json(p.x)},
                       {"h", p.h},
                       {"tau_initial", p.tau_initial},
                       {"tau_final", p.tau_final},
                       {"clamped", p.clamped}});
    }
    return {{"h_initial", r.h_initial},
            {"h_selected", r.h_selected},
            {"tau_initial", r.tau_initial},
            {"iterations", r.iterations},
            {"per_point", per},
            {"warnings", r.warnings}};
}

json fit_json(const FitResult& f) {
    json pts = json::array();
    for (const auto& p : f.points) {
        pts.push_back({{"x", vec_json(p.mode.x)},
                       {"tau_hat", p.mode.tau_hat},
                       {"m_hat", p.mode.m_hat},
                       {"s_hat", p.mode.s_hat},
                       {"s2_hat", p.mode.s2_hat},
                       {"s2_unfloored", p.s2_raw},
                       {"f2_hat", p.f2_hat},
                       {"omega", p.omega},
                       {"h", p.mode.h},
                       {"boundary_flag", p.mode.boundary_flag},
                       {"curvature_wrong_sign", p.curvature_wrong_sign}});
    }
    json j{{"h", f.h}, {"points", pts}};
    j["bandwidth"] = f.bandwidth ? bandwidth_json(*f.bandwidth) : json(nullptr);
    return j;
}

json envelope(const RunConfig& c, json result, const std::vector<std::string>& warnings) {
    return {{"schema_version", kSchemaVersion},
            {"command", c.command},
            {"seed", c.seed},
            {"config", config_to_json(c, false)},
            {"result", std::move(result)},
            {"warnings", warnings}};
}

json intervals_json(const ConfidenceSet& cs, const InferenceRun& run) {
    json rows = json::array();
    for (Eigen::Index k = 0; k < cs.estimates.size(); ++k) {
        json levels = json::object();
        for (double level : cs.levels) {
            const double hw = cs.half_widths.at(level)(k);
            levels[level_key(level)] = {{"lower", cs.estimates(k) - hw},
                                        {"upper", cs.estimates(k) + hw},
                                        {"half_width", hw},
                                        {"critical_value", cs.critical_values.at(level)(k)}};
        }
        rows.push_back({{"contrast", vec_json(run.D.row(k).transpose())},
                        {"estimate", cs.estimates(k)},
                        {"sigma", cs.sigma(k)},
                        {"levels", levels}});
    }
    json j{{"method", run.method == InferenceMethod::pivotal         ? "pivotal"
                      : run.method == InferenceMethod::nonparametric ? "nonparametric"
                                                                     : "gumbel"},
           {"simultaneous", cs.simultaneous},
           {"h", cs.h},
           {"intervals", rows},
           {"fit", fit_json(run.fit)}};
    j["bootstrap_failures"] = run.bootstrap ? run.bootstrap->failures : 0;
    return j;
}

json run_intervals(const RunConfig& c, bool simultaneous) {
    const Loaded l = load(c);
    const auto pts = design_points(c, l);
    const InferenceConfig ic = inference_config(c, l);
    const InferenceRun run = run_inference(l.data, pts, contrast_matrix(c.contrast, static_cast<int>(pts.size())), ic);
    const ConfidenceSet cs = intervals_from(run, simultaneous);
    return envelope(c, intervals_json(cs, run), cs.warnings);
}

}  // namespace

json config_to_json(const RunConfig& c, bool include_runtime) {
    json j{{"command", c.command},
           {"input_path", c.input_path},
           {"response_column", c.response_column},
           {"covariate_columns", c.covariate_columns},
           {"design_points", c.design_points},
           {"points_file", c.points_file},
           {"grid", c.grid},
           {"fixed_values", c.fixed_values},
           {"epsilon", c.epsilon},
           {"method", c.method},
           {"B", c.B},
           {"levels", c.levels},
           {"contrast", c.contrast},
           {"omega_resamples", c.omega_resamples},
           {"omega_threshold", c.omega_threshold},
           {"continuous_column", c.continuous_column},
           {"simultaneous", c.simultaneous},
           {"seed", c.seed},
           {"model", c.model},
           {"n", c.n},
           {"reps", c.reps},
           {"sim_points", c.sim_points},
           {"band", c.band},
           {"band_lo", c.band_lo},
           {"band_hi", c.band_hi},
           {"band_points", c.band_points},
           {"test", c.test},
           {"alpha_effect", c.alpha_effect},
           {"export_data", c.export_data}};
    j["bandwidth"] = c.bandwidth ? json(*c.bandwidth) : json("auto");
    j["omega"] = c.omega ? json(*c.omega) : json("auto");
    if (include_runtime) {
        j["threads"] = c.threads;
        j["output_path"] = c.output_path;
    }
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("command", c.command);
    get("input_path", c.input_path);
    get("response_column", c.response_column);
    get("covariate_columns", c.covariate_columns);
    get("design_points", c.design_points);
    get("points_file", c.points_file);
    get("grid", c.grid);
    get("fixed_values", c.fixed_values);
    get("epsilon", c.epsilon);
    get("method", c.method);
    get("B", c.B);
    get("levels", c.levels);
    get("contrast", c.contrast);
    get("omega_resamples", c.omega_resamples);
    get("omega_threshold", c.omega_threshold);
    get("continuous_column", c.continuous_column);
    get("simultaneous", c.simultaneous);
    get("seed", c.seed);
    get("threads", c.threads);
    get("output_path", c.output_path);
    get("model", c.model);
    get("n", c.n);
    get("reps", c.reps);
    get("sim_points", c.sim_points);
    get("band", c.band);
    get("band_lo", c.band_lo);
    get("band_hi", c.band_hi);
    get("band_points", c.band_points);
    get("test", c.test);
    get("alpha_effect", c.alpha_effect);
    get("export_data", c.export_data);
    if (j.contains("bandwidth") && j.at("bandwidth").is_number()) c.bandwidth = j.at("bandwidth").get<double>();
    if (j.contains("omega") && j.at("omega").is_number()) c.omega = j.at("omega").get<double>();
    return c;
}

json cmd_fit(const RunConfig& c) {
    const Loaded l = load(c);
    const auto pts = design_points(c, l);
    const InferenceConfig ic = inference_config(c, l);
    const FitResult f = fit_points(l.data, pts, ic.estimation);
    return envelope(c, fit_json(f), f.warnings);
}

json cmd_ci(const RunConfig& c) { return run_intervals(c, c.simultaneous); }

json cmd_band(const RunConfig& c) {
    RunConfig band = c;
    band.contrast = "identity";
    return run_intervals(band, true);
}

json cmd_test(const RunConfig& c) {
    const Loaded l = load(c);
    const auto pts = design_points(c, l);
    const InferenceConfig ic = inference_config(c, l);
    const InferenceRun run = run_inference(l.data, pts, contrast_matrix(c.contrast, static_cast<int>(pts.size())), ic);
    const TestResult t = test_from(run);
    json decisions = json::array();
    for (const auto& d : t.decisions) {
        decisions.push_back({{"level", d.level}, {"critical_value", d.critical_value}, {"reject", d.reject}});
    }
    json result{{"statistic", t.statistic},
                {"h", t.h},
                {"decisions", decisions},
                {"sigma", vec_json(run.gamma)},
                {"fit", fit_json(run.fit)}};
    return envelope(c, result, t.warnings);
}

json cmd_select_bandwidth(const RunConfig& c) {
    const Loaded l = load(c);
    const auto pts = design_points(c, l);
    const BandwidthReport r = select_bandwidth_simultaneous(l.data, pts, c.epsilon);
    return envelope(c, bandwidth_json(r), r.warnings);
}

std::string cmd_simulate(const RunConfig& c) {
    const ModelKind kind = parse_model(c.model);
    if (c.export_data) {
        SimModel m{kind, c.n, c.seed, c.alpha_effect};
        std::vector<std::string> names{"x1"};
        if (kind == ModelKind::binary_test) names.push_back("x2");
        return dataset_to_csv(generate(m), "y", names);
    }
    if (c.test || kind == ModelKind::binary_test) {
        TestExperiment ex;
        ex.alpha_effect = c.alpha_effect;
        ex.points = c.sim_points.empty() ? std::vector<double>{0.3, 0.5, 0.7} : c.sim_points;
        ex.n = c.n;
        ex.reps = c.reps;
        ex.B = c.B;
        ex.levels = c.levels;
        ex.seed = c.seed;
        ex.omega = c.omega;
        ex.threads = c.threads;
        return test_csv(run_test_experiment(ex));
    }
    CoverageExperiment ex;
    ex.model = SimModel{kind, c.n, c.seed, 0.0};
    ex.points = c.sim_points;
    if (ex.points.empty() && !c.band) {
        ex.points = kind == ModelKind::nonlinear ? std::vector<double>{0.7, 0.9, 1.1} : std::vector<double>{0.3, 0.5, 0.7};
    }
    ex.band = c.band;
    ex.band_lo = c.band_lo;
    ex.band_hi = c.band_hi;
    ex.band_points = c.band_points;
    ex.reps = c.reps;
    ex.B = c.B;
    ex.levels = c.levels;
    ex.method = parse_method(c.method);
    ex.omega = c.omega;
    ex.threads = c.threads;
    return coverage_csv(run_coverage_experiment(ex));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantile-based modal regression: estimation, confidence intervals, bands and tests"};
    app.require_subcommand(1);
    RunConfig c;
    std::string bandwidth = "auto";
    std::string omega = "auto";
    std::string points;
    std::string levels = "0.95,0.99";
    std::string covariates;
    std::string fixed;
    std::string sim_points;
    std::string band_range;

    auto common = [&](CLI::App* s) {
        s->add_option("--input", c.input_path, "CSV file with a header row")->required();
        s->add_option("--response", c.response_column, "response column")->capture_default_str();
        s->add_option("--covariates", covariates, "comma-separated covariate columns (default: all others)");
        s->add_option("--points", points, "design points: covariate values, ';' between points");
        s->add_option("--points-file", c.points_file, "CSV of design points with covariate columns");
        s->add_option("--epsilon", c.epsilon, "trimming of the quantile range")->capture_default_str();
        s->add_option("--bandwidth", bandwidth, "'auto' or a value in (0, 0.5)")->capture_default_str();
        s->add_option("--omega", omega, "'auto' or a fixed f'' bandwidth multiplier")->capture_default_str();
        s->add_option("--omega-resamples", c.omega_resamples, "resamples per omega selection step")
            ->capture_default_str();
        s->add_option("--omega-threshold", c.omega_threshold, "omega stability threshold factor")
            ->capture_default_str();
        s->add_option("--continuous-column", c.continuous_column, "'auto', 'none' or a covariate name")
            ->capture_default_str();
        s->add_option("--seed", c.seed, "random seed")->capture_default_str();
        s->add_option("--threads", c.threads, "worker threads")->capture_default_str();
        s->add_option("--output", c.output_path, "output file (default stdout)");
    };
    auto inference = [&](CLI::App* s) {
        s->add_option("--method", c.method, "pivotal | nonparametric | gumbel")->capture_default_str();
        s->add_option("--B", c.B, "bootstrap replicates")->capture_default_str();
        s->add_option("--levels", levels, "comma-separated confidence levels")->capture_default_str();
    };

    CLI::App* fit = app.add_subcommand("fit", "estimate the conditional mode at design points");
    common(fit);
    CLI::App* ci = app.add_subcommand("ci", "pointwise or simultaneous confidence intervals");
    common(ci);
    inference(ci);
    ci->add_option("--contrast", c.contrast, "identity | consecutive_diff | paired_diff | CSV file")
        ->capture_default_str();
    ci->add_flag("--simultaneous", c.simultaneous, "max-statistic critical values");
    CLI::App* band = app.add_subcommand("band", "simultaneous confidence band over a grid");
    common(band);
    inference(band);
    band->add_option("--grid", c.grid, "LO:HI:COUNT over the first covariate");
    band->add_option("--fixed", fixed, "values of the remaining covariates for --grid");
    CLI::App* test = app.add_subcommand("test", "max-statistic significance test");
    common(test);
    inference(test);
    std::string test_contrast = "paired_diff";
    test->add_option("--contrast", test_contrast, "identity | consecutive_diff | paired_diff | CSV file")
        ->capture_default_str();
    CLI::App* sel = app.add_subcommand("select-bandwidth", "plug-in bandwidth selection");
    common(sel);
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo coverage, size and power tables");
    sim->add_option("--model", c.model, "lmNormal | lmLognormal | Nonlinear | BinaryTest")->capture_default_str();
    sim->add_option("--n", c.n, "sample size")->capture_default_str();
    sim->add_option("--reps", c.reps, "Monte Carlo repetitions")->capture_default_str();
    sim->add_option("--points", sim_points, "comma-separated covariate values");
    sim->add_flag("--band", c.band, "simultaneous band instead of pointwise intervals");
    sim->add_option("--band-range", band_range, "LO:HI of the band grid");
    sim->add_option("--band-points", c.band_points, "band grid size")->capture_default_str();
    sim->add_flag("--test", c.test, "size and power of the binary-covariate test");
    sim->add_option("--alpha-effect", c.alpha_effect, "binary covariate effect under the alternative")
        ->capture_default_str();
    sim->add_flag("--export-data", c.export_data, "write one generated dataset as CSV and stop");
    sim->add_option("--omega", omega, "'auto' uses the tabulated values, or a fixed value")->capture_default_str();
    sim->add_option("--seed", c.seed, "random seed")->capture_default_str();
    sim->add_option("--threads", c.threads, "worker threads")->capture_default_str();
    sim->add_option("--output", c.output_path, "output file (default stdout)");
    inference(sim);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        for (CLI::App* s : {fit, ci, band, test, sel, sim}) {
            if (s->parsed()) c.command = s->get_name();
        }
        if (c.command == "test") c.contrast = test_contrast;
        if (bandwidth != "auto") c.bandwidth = parse_number(bandwidth, "--bandwidth");
        if (omega != "auto") c.omega = parse_number(omega, "--omega");
        if (!points.empty()) c.design_points = parse_points(points);
        c.levels = parse_list(levels, "--levels");
        if (!fixed.empty()) c.fixed_values = parse_list(fixed, "--fixed");
        if (!sim_points.empty()) c.sim_points = parse_list(sim_points, "--points");
        if (!covariates.empty()) {
            std::string item;
            std::istringstream is(covariates);
            while (std::getline(is, item, ',')) c.covariate_columns.push_back(item);
        }
        if (!band_range.empty()) {
            const auto colon = band_range.find(':');
            if (colon == std::string::npos) throw ConfigError("--band-range must look like LO:HI");
            c.band_lo = parse_number(band_range.substr(0, colon), "--band-range");
            c.band_hi = parse_number(band_range.substr(colon + 1), "--band-range");
        } else if (c.model == "Nonlinear") {
            c.band_lo = 0.6;
            c.band_hi = 1.2;
        }

        std::string text;
        if (c.command == "fit") text = cmd_fit(c).dump(2);
        else if (c.command == "ci") text = cmd_ci(c).dump(2);
        else if (c.command == "band") text = cmd_band(c).dump(2);
        else if (c.command == "test") text = cmd_test(c).dump(2);
        else if (c.command == "select-bandwidth") text = cmd_select_bandwidth(c).dump(2);
        else text = cmd_simulate(c);
        if (!text.empty() && text.back() != '\n') text += '\n';

        if (c.output_path.empty()) {
            out << text;
        } else {
            std::ofstream f(c.output_path, std::ios::binary);
            if (!f) throw ConfigError("cannot write '" + c.output_path + "'");
            f << text;
        }
        return 0;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const EstimationError& e) {
        err << "estimation error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace qmode::cli
