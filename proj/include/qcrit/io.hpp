#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcrit/common.hpp"
#include "qcrit/interaction.hpp"
#include "qcrit/stats.hpp"
#include "qcrit/types.hpp"

namespace qcrit {

using json = nlohmann::json;

namespace detail {

// Shortest round-trippable decimal form, locale-independent. Stable digits
// keep rerun outputs byte-identical.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // trim to the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::map<std::string, std::string> parse_metadata(const std::string& line) {
    // "# key=value key=value ..."
    std::map<std::string, std::string> out;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;  // leading '#'
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

inline double parse_double(const std::string& s, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end == s.c_str() + s.size() && !s.empty(), std::string("csv: bad number in ") + what);
    return v;
}

}  // namespace detail

// Series CSV layout:
//   # qcrit series v1
//   # n=<N> kac=<Jbar> label=<label> shot_noise=<0|1>
//   t,value,stderr,N,label
// The t column is the dimensionless product (Kac coupling) * (raw time); the
// kac metadata preserves the raw grid for exact round-trips.
inline void write_series_csv(const std::string& path, const ObservableSeries& s) {
    s.validate();
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    f << "# qcrit series v1\n";
    f << "# n=" << s.n << " kac=" << detail::fmt_double(s.kac) << " label=" << s.label
      << " shot_noise=" << (s.shot_noise ? 1 : 0) << "\n";
    f << "t,value,stderr,N,label\n";
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double err = i < s.stderrs.size() ? s.stderrs[i] : 0.0;
        f << detail::fmt_double(s.kac * s.times[i]) << ',' << detail::fmt_double(s.values[i])
          << ',' << detail::fmt_double(err) << ',' << s.n << ',' << s.label << "\n";
    }
    require(f.good(), "write failed: " + path);
}

inline ObservableSeries read_series_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    ObservableSeries s;
    std::string line;
    bool header_seen = false;
    bool any_err = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto meta = detail::parse_metadata(line);
            if (meta.count("n")) s.n = static_cast<int>(detail::parse_double(meta.at("n"), "n"));
            if (meta.count("kac")) {
                s.kac = detail::parse_double(meta.at("kac"), "kac");
                require(s.kac > 0.0, "series csv: kac must be positive in " + path);
            }
            if (meta.count("label")) s.label = meta.at("label");
            if (meta.count("shot_noise")) s.shot_noise = meta.at("shot_noise") == "1";
            continue;
        }
        if (!header_seen) {
            require(line.rfind("t,", 0) == 0, "series csv: missing column header in " + path);
            header_seen = true;
            continue;
        }
        const auto cols = detail::split_csv_line(line);
        require(cols.size() >= 3, "series csv: expected >= 3 columns in " + path);
        // stored t is kac * raw time; undo to keep (times, kac) consistent
        s.times.push_back(detail::parse_double(cols[0], "t") / s.kac);
        s.values.push_back(detail::parse_double(cols[1], "value"));
        const double err = detail::parse_double(cols[2], "stderr");
        s.stderrs.push_back(err);
        any_err = any_err || err != 0.0;
    }
    require(header_seen && !s.times.empty(), "series csv: no data rows in " + path);
    if (!any_err) s.stderrs.clear();
    s.validate();
    return s;
}

// Matrix CSV layout:
//   # qcrit matrix v1
//   # n=<N> kac=<Jbar>
//   one row of couplings per line
inline void write_matrix_csv(const std::string& path, const InteractionMatrix& m) {
    m.validate();
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    f << "# qcrit matrix v1\n";
    f << "# N=" << m.n() << " kac=" << detail::fmt_double(m.kac()) << "\n";
    for (int a = 0; a < m.n(); ++a) {
        for (int b = 0; b < m.n(); ++b) {
            if (b) f << ',';
            f << detail::fmt_double(m.j(a, b));
        }
        f << "\n";
    }
    require(f.good(), "write failed: " + path);
}

inline InteractionMatrix read_matrix_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto cols = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(cols.size());
        for (const auto& c : cols) row.push_back(detail::parse_double(c, "matrix entry"));
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "matrix csv: no rows in " + path);
    const std::size_t n = rows.size();
    InteractionMatrix m;
    m.j.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
        require(rows[a].size() == n, "matrix csv: not square in " + path);
        for (std::size_t b = 0; b < n; ++b)
            m.j(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rows[a][b];
    }
    m.validate();
    return m;
}

// Shot CSV layout:
//   # qcrit shots v1
//   # axis=<x|y|z> time=<t> n=<N> shots=<R>
//   one 0/1 row per repetition
inline void write_shots_csv(const std::string& path, const ShotSet& set) {
    set.validate();
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    f << "# qcrit shots v1\n";
    f << "# axis=" << set.axis << " time=" << detail::fmt_double(set.time) << " n=" << set.ions()
      << " shots=" << set.repetitions() << "\n";
    for (const auto& row : set.shots) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) f << ',';
            f << static_cast<int>(row[i]);
        }
        f << "\n";
    }
    require(f.good(), "write failed: " + path);
}

inline ShotSet read_shots_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    ShotSet set;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto meta = detail::parse_metadata(line);
            if (meta.count("axis")) set.axis = meta.at("axis");
            if (meta.count("time")) set.time = detail::parse_double(meta.at("time"), "time");
            continue;
        }
        const auto cols = detail::split_csv_line(line);
        std::vector<std::uint8_t> row;
        row.reserve(cols.size());
        for (const auto& c : cols) {
            require(c == "0" || c == "1", "shots csv: entries must be 0 or 1 in " + path);
            row.push_back(c == "1" ? 1 : 0);
        }
        set.shots.push_back(std::move(row));
    }
    set.validate();
    return set;
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw contract_error("json parse error in " + path + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    f << j.dump(2) << "\n";
    require(f.good(), "write failed: " + path);
}

}  // namespace qcrit
