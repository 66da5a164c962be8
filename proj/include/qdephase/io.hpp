// io.hpp - CSV trace files, atomic writes and trace comparison.
//
// Trace schema: header `t,re_L,im_L,abs_L,method`, one row per time point,
// %.17g floats, LF line endings.

#pragma once

#include "qdephase/trace.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdephase {

inline constexpr const char* kCsvHeader = "t,re_L,im_L,abs_L,method";

class TraceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trace_to_csv(const CoherenceTrace& trace) {
    if (trace.times.size() != trace.values.size()) {
        throw std::invalid_argument("trace_to_csv: times and values differ in length");
    }
    std::string out = kCsvHeader;
    out += '\n';
    const std::string method(method_name(trace.method));
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        const cplx v = trace.values[k];
        out += format_double(trace.times[k]);
        out += ',';
        out += format_double(v.real());
        out += ',';
        out += format_double(v.imag());
        out += ',';
        out += format_double(std::abs(v));
        out += ',';
        out += method;
        out += '\n';
    }
    return out;
}

// Writes to a sibling temp file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_trace_csv(const std::filesystem::path& path, const CoherenceTrace& trace) {
    write_file_atomic(path, trace_to_csv(trace));
}

namespace detail {

inline double parse_double(const std::string& s, std::size_t line, const char* field) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw TraceFormatError("line " + std::to_string(line) + ": bad " + field + " value '" + s + "'");
    }
    return v;
}

}  // namespace detail

// Parses the CSV schema. The method column must be uniform; abs_L is checked
// against |re + i im|.
inline CoherenceTrace trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw TraceFormatError("empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw TraceFormatError("line 1: expected header '" + std::string(kCsvHeader) + "'");

    CoherenceTrace trace;
    std::string method;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
        if (cols.size() != 5) {
            throw TraceFormatError("line " + std::to_string(lineno) + ": expected 5 columns, got " +
                                   std::to_string(cols.size()));
        }
        const double t = detail::parse_double(cols[0], lineno, "t");
        const double re = detail::parse_double(cols[1], lineno, "re_L");
        const double im = detail::parse_double(cols[2], lineno, "im_L");
        const double ab = detail::parse_double(cols[3], lineno, "abs_L");
        const cplx v(re, im);
        if (std::abs(std::abs(v) - ab) > 1e-12 * std::max(1.0, ab)) {
            throw TraceFormatError("line " + std::to_string(lineno) + ": abs_L inconsistent with re_L, im_L");
        }
        if (method.empty()) {
            method = cols[4];
        } else if (cols[4] != method) {
            throw TraceFormatError("line " + std::to_string(lineno) + ": mixed method column");
        }
        trace.times.push_back(t);
        trace.values.push_back(v);
    }
    if (trace.times.empty()) throw TraceFormatError("trace file has no data rows");
    const auto m = parse_method(method);
    if (!m) throw TraceFormatError("unknown method '" + method + "'");
    trace.method = *m;
    try {
        validate_grid(trace.times, "trace_from_csv");
    } catch (const std::invalid_argument& e) {
        throw TraceFormatError(e.what());
    }
    return trace;
}

inline CoherenceTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return trace_from_csv(ss.str());
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct ComparisonReport {
    double max_abs_dev{0.0};   // max ||L_a| - |L_b||
    double mean_abs_dev{0.0};
    double max_cplx_dev{0.0};  // max |L_a - L_b|
    double mean_cplx_dev{0.0};
    double tolerance{0.0};
    std::size_t n_points{0};
    bool pass{false};          // max_abs_dev < tolerance
};

class GridMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline ComparisonReport compare_traces(const CoherenceTrace& a, const CoherenceTrace& b, double tolerance) {
    if (!(tolerance >= 0.0)) throw std::invalid_argument("compare_traces: tolerance must be >= 0");
    if (a.times.size() != b.times.size()) {
        throw GridMismatchError("compare_traces: grids differ in length (" + std::to_string(a.times.size()) +
                                " vs " + std::to_string(b.times.size()) + ")");
    }
    if (a.times.empty()) throw std::invalid_argument("compare_traces: empty traces");
    ComparisonReport r;
    r.tolerance = tolerance;
    r.n_points = a.times.size();
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        if (a.times[k] != b.times[k]) {
            throw GridMismatchError("compare_traces: grids differ at index " + std::to_string(k));
        }
        const double dm = std::abs(std::abs(a.values[k]) - std::abs(b.values[k]));
        const double dc = std::abs(a.values[k] - b.values[k]);
        r.max_abs_dev = std::max(r.max_abs_dev, dm);
        r.max_cplx_dev = std::max(r.max_cplx_dev, dc);
        r.mean_abs_dev += dm;
        r.mean_cplx_dev += dc;
    }
    r.mean_abs_dev /= static_cast<double>(r.n_points);
    r.mean_cplx_dev /= static_cast<double>(r.n_points);
    r.pass = r.max_abs_dev < tolerance;
    return r;
}

inline ComparisonReport compare_trace_files(const std::filesystem::path& a, const std::filesystem::path& b,
                                            double tolerance) {
    return compare_traces(read_trace_csv(a), read_trace_csv(b), tolerance);
}

}  // namespace qdephase
