#pragma once

#include <optional>
#include <string>
#include <vector>

namespace recov {

// In-memory CSV with a mandatory header row. All values are kept as strings;
// typing is the caller's problem.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return columns.size(); }

    // Index of a named column; throws ValidationError when absent.
    std::size_t col(const std::string& name) const;
    bool has_col(const std::string& name) const;
};

// Reads a CSV file (RFC-style quoting, comma separator). Malformed rows are
// reported with their 1-based line number.
CsvTable read_csv(const std::string& path);

// Parses one CSV line into fields. Exposed for reuse by the report tooling.
std::vector<std::string> split_csv_line(const std::string& line);

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

std::string csv_quote(const std::string& field);

// Strict double parse; rejects trailing junk. Empty and non-numeric -> nullopt.
std::optional<double> parse_double(const std::string& s);

// Strict integer parse.
std::optional<long long> parse_int(const std::string& s);

}  // namespace recov
