#include "qmode/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qmode {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) return c;
    }
    throw ConfigError("column '" + name + "' not found in CSV header");
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable t;
    std::istringstream is(text);
    std::string line;
    long line_no = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (!have_header) {
            t.header = cells;
            for (const auto& h : t.header) {
                if (h.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty column name in header");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                              " fields, found " + std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& s = cells[c];
            const char* first = s.data();
            const char* last = s.data() + s.size();
            if (!s.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, row[c]);
            if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(row[c])) {
                throw ConfigError(source + ":" + std::to_string(line_no) + ": column '" + t.header[c] +
                                  "' has invalid value '" + s + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ConfigError(source + ": missing header row");
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& response,
                         const std::vector<std::string>& covariates) {
    const std::size_t ry = table.column(response);
    std::vector<std::size_t> cols;
    for (const auto& c : covariates) cols.push_back(table.column(c));
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    if (n == 0) throw ConfigError("CSV has no data rows");
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(cols.size() + 1));
    Eigen::VectorXd Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        X(i, 0) = 1.0;
        for (std::size_t c = 0; c < cols.size(); ++c) X(i, static_cast<Eigen::Index>(c + 1)) = row[cols[c]];
        Y(i) = row[ry];
    }
    return Dataset::make(std::move(X), std::move(Y));
}

std::string dataset_to_csv(const Dataset& data, const std::string& response,
                           const std::vector<std::string>& covariates) {
    if (static_cast<Eigen::Index>(covariates.size() + 1) != data.d()) {
        throw ArgumentError("dataset_to_csv: covariate names do not match the design");
    }
    std::ostringstream os;
    os << std::setprecision(17) << response;
    for (const auto& c : covariates) os << ',' << c;
    os << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        os << data.Y(i);
        for (Eigen::Index c = 1; c < data.d(); ++c) os << ',' << data.X(i, c);
        os << '\n';
    }
    return os.str();
}

}  // namespace qmode
