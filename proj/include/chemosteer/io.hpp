#pragma once

// CSV and JSON persistence. Every number is written with 17 significant digits.

#include <chemosteer/carleman.hpp>
#include <chemosteer/field.hpp>
#include <chemosteer/grid.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <ios>
#include <sstream>
#include <string>
#include <vector>

namespace chemosteer {

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.precision(17);
    return out;
}

/// Header "t,x,value", one row per (level, cell), levels-major.
inline void write_field_csv(const std::filesystem::path& path, const SpaceTimeField& field, const DomainSpec& domain,
                            const TimeGrid& time) {
    std::ofstream out = open_output(path);
    out << "t,x,value\n";
    for (std::size_t k = 0; k < field.n_levels(); ++k) {
        const double t = time.level(k);
        const auto row = field.level(k);
        for (std::size_t i = 0; i < row.size(); ++i) out << t << ',' << domain.center(i) << ',' << row[i] << '\n';
    }
}

/// Header "t_mid,x,alpha,w" for the stored levels 1..M.
inline void write_weights_csv(const std::filesystem::path& path, const WeightTables& tab, const DomainSpec& domain,
                              const TimeGrid& time) {
    std::ofstream out = open_output(path);
    out << "t_mid,x,alpha,w\n";
    for (std::size_t k = 1; k <= time.n_steps(); ++k) {
        const double t = time.midpoint(k);
        for (std::size_t i = 0; i < domain.n_cells(); ++i) {
            out << t << ',' << domain.center(i) << ',' << tab.alpha(k, i) << ',' << tab.w(k, i) << '\n';
        }
    }
}

/// Generic table: header from `columns`, each row already formatted as strings.
inline void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
                            const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out = open_output(path);
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
        out << '\n';
    }
}

inline std::string fmt(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
}

/// Reads whitespace- or comma-separated cell values.
inline std::vector<double> read_cell_values(const std::string& path, std::size_t expected) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open initial data file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    for (char& ch : text) {
        if (ch == ',' || ch == ';') ch = ' ';
    }
    std::istringstream tokens(text);
    std::vector<double> values;
    std::string tok;
    while (tokens >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw InvalidInput("initial data file has a non-numeric entry: " + tok);
        }
        if (used != tok.size()) throw InvalidInput("initial data file has a non-numeric entry: " + tok);
        values.push_back(v);
    }
    if (values.size() != expected) {
        throw InvalidInput("initial data file has " + std::to_string(values.size()) + " values, expected " +
                           std::to_string(expected));
    }
    return values;
}

}  // namespace chemosteer
