#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "simofdma/common.hpp"
#include "simofdma/config.hpp"
#include "simofdma/joint.hpp"

namespace simofdma {

// One row of a result table. Aggregate rows use seed = -1.
struct ResultRow {
    std::string scheme;
    std::string sweep_key;
    double sweep_value = 0.0;
    long long seed = 0;
    std::string metric_name;
    double metric_value = 0.0;
};

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string render_csv(const std::vector<ResultRow>& rows,
                              const std::string& hash) {
    std::ostringstream os;
    os << "# config_hash " << hash << "\n";
    os << "scheme,sweep_key,sweep_value,seed,metric_name,metric_value\n";
    for (const auto& r : rows)
        os << r.scheme << "," << r.sweep_key << "," << format_double(r.sweep_value)
           << "," << r.seed << "," << r.metric_name << ","
           << format_double(r.metric_value) << "\n";
    return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? "."
                                            : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("io: cannot write " + path.string());
    out << body;
}

// Real matrix, plain text, row major, space separated, full precision.
inline std::string render_matrix(const arma::mat& m, const std::string& hash) {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash " << hash << "\n";
    for (arma::uword r = 0; r < m.n_rows; ++r) {
        for (arma::uword c = 0; c < m.n_cols; ++c)
            os << (c ? " " : "") << m(r, c);
        os << "\n";
    }
    return os.str();
}

// Complex matrix as "re im" pairs, row major, for external cross-checks.
inline std::string render_complex_matrix(const arma::cx_mat& m) {
    std::ostringstream os;
    os.precision(17);
    for (arma::uword r = 0; r < m.n_rows; ++r) {
        for (arma::uword c = 0; c < m.n_cols; ++c)
            os << (c ? " " : "") << m(r, c).real() << " " << m(r, c).imag();
        os << "\n";
    }
    return os.str();
}

inline std::string render_trace(const std::vector<TraceRow>& trace,
                                const std::string& hash) {
    std::ostringstream os;
    os.precision(17);
    os << "# config_hash " << hash << "\n";
    os << "iteration,step,layer,gamma,max_slack,alpha\n";
    for (const auto& row : trace)
        os << row.iteration << "," << row.step << "," << row.layer << ","
           << format_double(row.gamma) << "," << format_double(row.max_slack) << ","
           << format_double(row.alpha) << "\n";
    return os.str();
}

}  // namespace simofdma
