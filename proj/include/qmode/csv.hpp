#pragma once

#include <string>
#include <vector>

#include "qmode/dataset.hpp"
#include "qmode/errors.hpp"

namespace qmode {

//! Malformed input file or bad configuration; reported with exit code 2 by the CLI.
class ConfigError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

//! Comma-separated numeric table with a header row; blank or non-numeric cells are rejected.
CsvTable parse_csv(const std::string& text, const std::string& source = "input");
CsvTable read_csv(const std::string& path);

//! Response and covariates by name, with an intercept column prepended.
Dataset dataset_from_csv(const CsvTable& table, const std::string& response,
                         const std::vector<std::string>& covariates);

std::string dataset_to_csv(const Dataset& data, const std::string& response,
                           const std::vector<std::string>& covariates);

}  // namespace qmode
