#include "recov/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recov/errors.hpp"

namespace recov {

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw ValidationError("column '" + name + "' not found in CSV header");
}

bool CsvTable::has_col(const std::string& name) const {
    for (const auto& c : columns) {
        if (c == name) return true;
    }
    return false;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            table.columns = split_csv_line(line);
            if (table.columns.empty() || (table.columns.size() == 1 && table.columns[0].empty()))
                throw IoError(path + ": empty header row");
            continue;
        }
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != table.columns.size()) {
            std::ostringstream msg;
            msg << path << ": line " << line_no << ": expected " << table.columns.size()
                << " fields, got " << fields.size();
            throw IoError(msg.str());
        }
        table.rows.push_back(std::move(fields));
    }
    if (line_no == 0) throw IoError(path + ": empty file (missing header row)");
    return table;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out << ',';
        out << csv_quote(columns[i]);
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw ValidationError("write_csv: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv_quote(row[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

}  // namespace recov
