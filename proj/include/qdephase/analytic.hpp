// analytic.hpp - Closed-form coherence expressions.
//
// The exact expression comes from integrating the three Gaussian kernels
//   <x1|e^{-beta H0}|x2> <x2|e^{iH- t}|x3> <x3|e^{-iH+ t}|x1>
// over x1, x2, x3:
//
//   L = (1/(Z omega0)) e^{J.M^{-1}.J/2 + phi} sqrt(omega1 omega2 / (|M| sinh(b w0) sin(w1 t) sin(w2 t)))
//
// phi is the x-independent phase of the two forced-oscillator propagators,
//   phi = i g1^2 omega0 [ (t/2 - tan(w1 t/2)/w1)/w1^2 - (t/2 - tan(w2 t/2)/w2)/w2^2 ],
// which vanishes for g2 = 0 and is required for the complex value (not |L|)
// when g1 g2 != 0. The other expressions are the approximations derived from it.

#pragma once

#include "qdephase/branch.hpp"
#include "qdephase/model.hpp"
#include "qdephase/trace.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qdephase {

struct GaussianFormulaParts {
    double time{0.0};
    Eigen::Vector3cd j_vector;   // (J1, J2, J1 + J2)
    Eigen::Matrix3cd m_matrix;   // complex symmetric
    cplx det_m;
    cplx quad_form;              // J^T M^{-1} J / 2, via LU solve
    cplx action_phase;           // phi, see header comment
    cplx prefactor;              // radicand: omega1 omega2 / ((Z omega0)^2 |M| sinh sin1 sin2)
    double condition_number{1.0};

    cplx exponent() const { return quad_form + action_phase; }
};

// Singular windows of the factored formula: |sin(omega1 t)| or |sin(omega2 t)| below this.
inline constexpr double kSingularSinThreshold = 1e-6;

inline bool exact_formula_singular(const DerivedFrequencies& f, double t) {
    return std::abs(std::sin(f.omega1 * t)) < kSingularSinThreshold ||
           std::abs(std::sin(f.omega2 * t)) < kSingularSinThreshold;
}

// Throws std::domain_error inside a singular window.
inline GaussianFormulaParts gaussian_parts(const SystemParams& p, double t) {
    const DerivedFrequencies f = derived_frequencies(p);
    if (exact_formula_singular(f, t)) {
        throw std::domain_error("gaussian_parts: t lies in a singular window of the factored formula");
    }
    const double w0 = p.omega0;
    const double bw = p.beta() * w0;
    const double s1 = std::sin(f.omega1 * t), c1 = std::cos(f.omega1 * t);
    const double s2 = std::sin(f.omega2 * t), c2 = std::cos(f.omega2 * t);
    const double u1 = f.omega1 / w0, u2 = f.omega2 / w0;
    const double coth = 1.0 / std::tanh(bw);
    const double csch = 1.0 / std::sinh(bw);
    const cplx i{0.0, 1.0};

    GaussianFormulaParts g;
    g.time = t;
    auto& m = g.m_matrix;
    m(0, 0) = coth - i * u1 * c1 / s1;
    m(1, 1) = coth + i * u2 * c2 / s2;
    m(2, 2) = i * (u2 * c2 / s2 - u1 * c1 / s1);
    m(0, 1) = m(1, 0) = -csch;
    m(0, 2) = m(2, 0) = i * u1 / s1;
    m(1, 2) = m(2, 1) = -i * u2 / s2;

    const cplx j1 = i * p.g1 / f.omega1 * (c1 - 1.0) / s1;
    const cplx j2 = i * p.g1 / f.omega2 * (c2 - 1.0) / s2;
    g.j_vector << j1, j2, j1 + j2;

    const Eigen::PartialPivLU<Eigen::Matrix3cd> lu(m);
    g.det_m = lu.determinant();
    // Bilinear (not sesquilinear) form: M is complex symmetric.
    g.quad_form = 0.5 * (g.j_vector.transpose() * lu.solve(g.j_vector))(0, 0);

    const Eigen::JacobiSVD<Eigen::Matrix3cd> svd(m);
    const auto sv = svd.singularValues();
    g.condition_number = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();

    const double g1sq = p.g1 * p.g1;
    const double a1 = (0.5 * t - std::tan(0.5 * f.omega1 * t) / f.omega1) / (f.omega1 * f.omega1);
    const double a2 = (0.5 * t - std::tan(0.5 * f.omega2 * t) / f.omega2) / (f.omega2 * f.omega2);
    g.action_phase = i * g1sq * w0 * (a1 - a2);

    const double z = 1.0 / (2.0 * std::sinh(0.5 * bw));
    g.prefactor = f.omega1 * f.omega2 / ((z * w0) * (z * w0) * g.det_m * std::sinh(bw) * s1 * s2);
    return g;
}

struct ExactFormulaOptions {
    double condition_warn{1e8};
    BranchTrackerOptions branch{};
};

// Exact closed form on a grid. Points in singular windows are dropped and
// listed in excluded_times; t = 0 is returned as its limit L = 1.
inline CoherenceTrace coherence_exact_formula(const SystemParams& p, std::span<const double> times,
                                              const ExactFormulaOptions& opt = {}) {
    p.validate();
    validate_grid(times, "coherence_exact_formula");
    const DerivedFrequencies f = derived_frequencies(p);

    CoherenceTrace trace;
    trace.method = Method::AnalyticExact;
    trace.params = p;

    std::vector<double> positive;
    for (double t : times) {
        if (t < 0.0) throw std::invalid_argument("coherence_exact_formula: negative times are not supported");
        if (t > 0.0) positive.push_back(t);
    }
    if (times.front() == 0.0) {
        trace.times.push_back(0.0);
        trace.values.emplace_back(1.0, 0.0);
    }
    if (positive.empty()) return trace;

    auto radicand = [&](double t) -> std::optional<cplx> {
        if (exact_formula_singular(f, t)) return std::nullopt;
        return gaussian_parts(p, t).prefactor;
    };
    const double anchor = std::min(positive.front(), 1e-3 / std::max(f.omega1, f.omega2));
    const auto roots = track_sqrt(positive, radicand, anchor, opt.branch);

    std::size_t ill_conditioned = 0;
    for (std::size_t k = 0; k < positive.size(); ++k) {
        const double t = positive[k];
        if (!roots[k]) {
            trace.excluded_times.push_back(t);
            continue;
        }
        const GaussianFormulaParts g = gaussian_parts(p, t);
        if (g.condition_number > opt.condition_warn) ++ill_conditioned;
        trace.times.push_back(t);
        trace.values.push_back(*roots[k] * std::exp(g.exponent()));
    }
    if (!trace.excluded_times.empty()) {
        std::ostringstream msg;
        msg << trace.excluded_times.size() << " grid point(s) excluded: |sin(omega_i t)| < " << kSingularSinThreshold;
        trace.notes.push_back(msg.str());
    }
    if (ill_conditioned > 0) {
        std::ostringstream msg;
        msg << ill_conditioned << " grid point(s) with cond(M) > " << opt.condition_warn;
        trace.notes.push_back(msg.str());
    }
    return trace;
}

namespace detail {

template <typename Fn>
CoherenceTrace closed_form(const SystemParams& p, std::span<const double> times, Method m, const char* who, Fn&& fn) {
    p.validate();
    validate_grid(times, who);
    CoherenceTrace trace;
    trace.method = m;
    trace.params = p;
    trace.times.assign(times.begin(), times.end());
    trace.values.reserve(times.size());
    for (double t : times) trace.values.push_back(fn(t));
    return trace;
}

}  // namespace detail

// Beat approximation: L = 1 / (cos(dw t/2) + i coth(b w0/2) sin(dw t/2)).
inline CoherenceTrace coherence_beat(const SystemParams& p, std::span<const double> times) {
    const double dw = derived_frequencies(p).beat;
    const double k = thermal_coth(p);
    return detail::closed_form(p, times, Method::AnalyticBeat, "coherence_beat", [&](double t) {
        const double x = 0.5 * dw * t;
        return 1.0 / cplx(std::cos(x), k * std::sin(x));
    });
}

namespace detail {

inline double linear_exponent(const SystemParams& p, double t) {
    const double r = p.g1 / p.omega0;
    return -2.0 * r * r * thermal_coth(p) * (1.0 - std::cos(p.omega0 * t));
}

}  // namespace detail

// Pure linear coupling: L = exp(-2 (g1/w0)^2 coth(b w0/2) (1 - cos w0 t)).
inline CoherenceTrace coherence_linear_quantum(const SystemParams& p, std::span<const double> times) {
    return detail::closed_form(p, times, Method::AnalyticLinear, "coherence_linear_quantum",
                               [&](double t) { return cplx(std::exp(detail::linear_exponent(p, t)), 0.0); });
}

// Short-time combination of the linear result with the leading g2 decay.
inline CoherenceTrace coherence_short_time(const SystemParams& p, std::span<const double> times) {
    const double k = thermal_coth(p);
    return detail::closed_form(p, times, Method::AnalyticShortTime, "coherence_short_time", [&](double t) {
        return std::exp(detail::linear_exponent(p, t)) / cplx(1.0, p.g2 * t * k);
    });
}

struct EchoEnvelope {
    CoherenceTrace envelope;
    CoherenceTrace lower_bound_half;     // argument g2 t/2, as printed for the bound
    CoherenceTrace lower_bound_quarter;  // argument g2 t/4, matching the envelope
};

// |L| ~ exp(-4 (g1/w0)^2 coth (cos(w0 t/2) - cos(g2 t/4))^2) and the two bound variants
// exp(-4 (g1/w0)^2 coth (1 + |cos(g2 t/q)|)^2) for q = 2, 4.
inline EchoEnvelope echo_envelope(const SystemParams& p, std::span<const double> times) {
    const double r = p.g1 / p.omega0;
    const double kappa = 4.0 * r * r * thermal_coth(p);
    EchoEnvelope e;
    e.envelope = detail::closed_form(p, times, Method::EchoEnvelope, "echo_envelope", [&](double t) {
        const double d = std::cos(0.5 * p.omega0 * t) - std::cos(0.25 * p.g2 * t);
        return cplx(std::exp(-kappa * d * d), 0.0);
    });
    e.envelope.label = "envelope";
    e.lower_bound_half = detail::closed_form(p, times, Method::EchoEnvelope, "echo_envelope", [&](double t) {
        const double d = 1.0 + std::abs(std::cos(0.5 * p.g2 * t));
        return cplx(std::exp(-kappa * d * d), 0.0);
    });
    e.lower_bound_half.label = "lower-bound-g2t/2";
    e.lower_bound_quarter = detail::closed_form(p, times, Method::EchoEnvelope, "echo_envelope", [&](double t) {
        const double d = 1.0 + std::abs(std::cos(0.25 * p.g2 * t));
        return cplx(std::exp(-kappa * d * d), 0.0);
    });
    e.lower_bound_quarter.label = "lower-bound-g2t/4";
    return e;
}

struct PeakPrediction {
    std::vector<double> periods;      // T_n = 2 n pi / (omega1 - omega2), n = 1..n_max
    double width{0.0};                // sinh(b w0/2) / (omega1 - omega2)
    double curvature{0.0};            // |L| ~ 1 - curvature (t - T_n)^2 near a revival
    double relative_error{0.0};       // width / T_1
    double relative_error_high_t{0.0};  // b w0 / (4 pi)
};

inline PeakPrediction peak_predictions(const SystemParams& p, int n_max) {
    p.validate();
    if (p.g2 == 0.0) throw std::invalid_argument("peak_predictions: g2 = 0 has no revival structure");
    if (n_max < 1) throw std::invalid_argument("peak_predictions: n_max must be >= 1");
    const double dw = std::abs(derived_frequencies(p).beat);
    const double bw = p.beta() * p.omega0;
    const double sh = std::sinh(0.5 * bw);

    PeakPrediction out;
    const double t1 = 2.0 * std::numbers::pi / dw;
    for (int n = 1; n <= n_max; ++n) out.periods.push_back(n * t1);
    out.width = sh / dw;
    out.curvature = dw * dw / (8.0 * sh * sh);
    out.relative_error = out.width / t1;
    out.relative_error_high_t = bw / (4.0 * std::numbers::pi);
    return out;
}

}  // namespace qdephase
