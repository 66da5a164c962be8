// trace.hpp - Coherence time series and time-grid helpers

#pragma once

#include "qdephase/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdephase {

enum class Method {
    NumericFree,
    NumericEcho,
    AnalyticExact,
    AnalyticBeat,
    AnalyticLinear,
    AnalyticShortTime,
    ClassicalLinear,
    ClassicalQuadratic,
    ClassicalMc,
    EchoEnvelope,
};

inline std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::NumericFree: return "numeric-free";
        case Method::NumericEcho: return "numeric-echo";
        case Method::AnalyticExact: return "analytic-exact";
        case Method::AnalyticBeat: return "analytic-beat";
        case Method::AnalyticLinear: return "analytic-linear";
        case Method::AnalyticShortTime: return "analytic-short-time";
        case Method::ClassicalLinear: return "classical-linear";
        case Method::ClassicalQuadratic: return "classical-quadratic";
        case Method::ClassicalMc: return "classical-mc";
        case Method::EchoEnvelope: return "echo-envelope";
    }
    return "unknown";
}

inline std::optional<Method> parse_method(std::string_view s) noexcept {
    for (Method m : {Method::NumericFree, Method::NumericEcho, Method::AnalyticExact,
                     Method::AnalyticBeat, Method::AnalyticLinear, Method::AnalyticShortTime,
                     Method::ClassicalLinear, Method::ClassicalQuadratic, Method::ClassicalMc,
                     Method::EchoEnvelope}) {
        if (method_name(m) == s) return m;
    }
    return std::nullopt;
}

// Diagnostics attached to numeric traces.
struct TruncationDiagnostic {
    double weight_tail{0.0};  // (z_exact - z_trunc)/z_exact
    double drift{0.0};        // max |L_dim - L_{dim/2}| over the probe points
    bool converged{true};
};

struct CoherenceTrace {
    std::vector<double> times;
    std::vector<cplx> values;
    Method method{Method::NumericFree};
    SystemParams params{};
    std::size_t trunc_dim{0};  // 0 for non-numeric methods
    std::string label;         // free-form tag distinguishing traces of the same method

    std::optional<TruncationDiagnostic> truncation;
    std::vector<double> excluded_times;  // grid points dropped by the producer
    std::vector<std::string> notes;

    std::size_t size() const noexcept { return times.size(); }

    std::vector<double> magnitudes() const {
        std::vector<double> out(values.size());
        std::transform(values.begin(), values.end(), out.begin(),
                       [](const cplx& v) { return std::abs(v); });
        return out;
    }
};

// Throws unless the grid is non-empty, finite and strictly increasing.
inline void validate_grid(std::span<const double> times, const char* who) {
    if (times.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty time grid");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k])) {
            throw std::invalid_argument(std::string(who) + ": non-finite time in grid");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw std::invalid_argument(std::string(who) + ": time grid must be strictly increasing");
        }
    }
}

// n_points equally spaced times from t_start to t_end inclusive.
inline std::vector<double> uniform_grid(double t_start, double t_end, std::size_t n_points) {
    if (n_points < 2) {
        throw std::invalid_argument("uniform_grid: n_points must be >= 2");
    }
    if (!(t_end > t_start)) {
        throw std::invalid_argument("uniform_grid: t_end must exceed t_start");
    }
    std::vector<double> t(n_points);
    const double h = (t_end - t_start) / static_cast<double>(n_points - 1);
    for (std::size_t k = 0; k < n_points; ++k) {
        t[k] = t_start + h * static_cast<double>(k);
    }
    t.back() = t_end;
    return t;
}

// Uniform grid over [t_start, t_end] with at least `per_unit` points per unit
// time length `unit` (e.g. 400 points per beat period).
inline std::vector<double> density_grid(double t_start, double t_end, double unit, double per_unit) {
    const double span = t_end - t_start;
    const auto n = static_cast<std::size_t>(std::ceil(span / unit * per_unit)) + 1;
    return uniform_grid(t_start, t_end, std::max<std::size_t>(n, 2));
}

}  // namespace qdephase
