// estimator.hpp - Revival-peak detection and quadratic-coupling estimation.
//
// Revivals of |L| recur at T_n = 2 pi n / (omega1 - omega2). Fitting the peak
// times gives the beat frequency, and
//   omega1 - omega2 = dw  <=>  g2 = dw sqrt(1 - dw^2 / (4 omega0^2))
// inverts it exactly.

#pragma once

#include "qdephase/analytic.hpp"
#include "qdephase/model.hpp"
#include "qdephase/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace qdephase {

enum class PeakStatus { Ok, NoPeaks };

struct PeakReport {
    PeakStatus status{PeakStatus::NoPeaks};
    std::vector<double> peak_times;
    std::vector<double> peak_heights;
    std::vector<double> widths;  // half-depth full widths; NaN when a side never crosses
    double time_resolution{0.0}; // smallest grid spacing of the source trace

    // Filled by estimate_g2.
    double period{0.0};
    double period_std_error{0.0};
    double beat_estimate{0.0};
    double g2_estimate{0.0};
    double g2_uncertainty{0.0};
    std::size_t n_peaks_used{0};
};

namespace detail {

// Vertex of the parabola through three points.
inline void parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2, double& xv,
                            double& yv) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double a = (d1 - d0) / (x2 - x0);
    if (!(a < 0.0)) {
        xv = x1;
        yv = y1;
        return;
    }
    const double b = d0 - a * (x0 + x1);
    xv = std::clamp(-b / (2.0 * a), x0, x2);
    // Newton form of the interpolant.
    yv = y0 + d0 * (xv - x0) + a * (xv - x0) * (xv - x1);
}

// Time at which |L| crosses `level`, walking from index i towards `step` (+1/-1).
inline double crossing(const std::vector<double>& t, const std::vector<double>& a, std::size_t i, int step,
                       std::size_t stop, double level) {
    std::size_t k = i;
    while (k != stop) {
        const std::size_t next = step > 0 ? k + 1 : k - 1;
        if (a[next] < level) {
            const double f = (a[k] - level) / (a[k] - a[next]);
            return t[k] + f * (t[next] - t[k]);
        }
        k = next;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// Local maxima of |L| above min_height, at least min_separation apart (taller
// peaks win), refined by a three-point parabola. The width of each peak is the
// distance between the two points where |L| first falls below
// (height + trough)/2, with the trough taken between the peak and its neighbours.
inline PeakReport detect_peaks(const CoherenceTrace& trace, double min_height, double min_separation) {
    if (!(min_height > 0.0 && min_height < 1.0)) {
        throw std::invalid_argument("detect_peaks: min_height must lie in (0, 1)");
    }
    if (!(min_separation >= 0.0)) throw std::invalid_argument("detect_peaks: min_separation must be >= 0");
    validate_grid(trace.times, "detect_peaks");

    const auto& t = trace.times;
    const auto a = trace.magnitudes();
    const std::size_t n = t.size();

    PeakReport rep;
    rep.time_resolution = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < n; ++k) rep.time_resolution = std::min(rep.time_resolution, t[k] - t[k - 1]);
    if (n < 3) return rep;

    std::vector<std::size_t> cand;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (a[k] >= min_height && a[k] >= a[k - 1] && a[k] > a[k + 1]) cand.push_back(k);
    }
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t i, std::size_t j) { return a[i] > a[j]; });
    std::vector<std::size_t> kept;
    for (std::size_t c : cand) {
        const bool clear = std::all_of(kept.begin(), kept.end(),
                                       [&](std::size_t k) { return std::abs(t[k] - t[c]) >= min_separation; });
        if (clear) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    if (kept.empty()) return rep;

    rep.status = PeakStatus::Ok;
    for (std::size_t idx = 0; idx < kept.size(); ++idx) {
        const std::size_t k = kept[idx];
        double tv = t[k], hv = a[k];
        detail::parabola_vertex(t[k - 1], a[k - 1], t[k], a[k], t[k + 1], a[k + 1], tv, hv);
        rep.peak_times.push_back(tv);
        rep.peak_heights.push_back(hv);

        const std::size_t left_stop = idx == 0 ? 0 : kept[idx - 1];
        const std::size_t right_stop = idx + 1 == kept.size() ? n - 1 : kept[idx + 1];
        const double trough_l = *std::min_element(a.begin() + static_cast<std::ptrdiff_t>(left_stop),
                                                  a.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        const double trough_r = *std::min_element(a.begin() + static_cast<std::ptrdiff_t>(k),
                                                  a.begin() + static_cast<std::ptrdiff_t>(right_stop) + 1);
        const double tl = detail::crossing(t, a, k, -1, left_stop, 0.5 * (hv + trough_l));
        const double tr = detail::crossing(t, a, k, +1, right_stop, 0.5 * (hv + trough_r));
        rep.widths.push_back(tr - tl);
    }
    return rep;
}

// g2 from the beat frequency dw = omega1 - omega2 (exact inversion).
inline double g2_from_beat(double beat, double omega0) {
    const double x = beat / (2.0 * omega0);
    if (!(std::abs(x) < 1.0)) throw std::domain_error("g2_from_beat: beat >= 2 omega0 has no inverse");
    return beat * std::sqrt(1.0 - x * x);
}

// Peak times are taken as consecutive revivals n = 1, 2, ... . One peak: the
// period is its time. Several: least-squares slope of time vs. index.
inline PeakReport estimate_g2(PeakReport report, double omega0) {
    if (report.status != PeakStatus::Ok || report.peak_times.empty()) {
        throw std::invalid_argument("estimate_g2: report has no peaks");
    }
    if (!(omega0 > 0.0)) throw std::invalid_argument("estimate_g2: omega0 must be positive");
    const auto& tp = report.peak_times;
    const std::size_t k = tp.size();
    // Per-peak position floor: uniform rounding over one grid step.
    const double sigma_t = std::isfinite(report.time_resolution) ? report.time_resolution / std::sqrt(12.0) : 0.0;

    double period = 0.0, se = 0.0;
    if (k == 1) {
        period = tp[0];
        se = sigma_t;
    } else {
        double nbar = 0.0, tbar = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            nbar += static_cast<double>(i + 1);
            tbar += tp[i];
        }
        nbar /= static_cast<double>(k);
        tbar /= static_cast<double>(k);
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double dx = static_cast<double>(i + 1) - nbar;
            sxx += dx * dx;
            sxy += dx * (tp[i] - tbar);
        }
        period = sxy / sxx;
        double fit_var = 0.0;
        if (k > 2) {
            double rss = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double r = tp[i] - (tbar + period * (static_cast<double>(i + 1) - nbar));
                rss += r * r;
            }
            fit_var = rss / static_cast<double>(k - 2) / sxx;
        }
        se = std::sqrt(fit_var + sigma_t * sigma_t / sxx);
    }
    if (!(period > 0.0)) throw std::domain_error("estimate_g2: non-positive period");

    const double beat = 2.0 * std::numbers::pi / period;
    report.period = period;
    report.period_std_error = se;
    report.beat_estimate = beat;
    report.g2_estimate = g2_from_beat(beat, omega0);
    const double x = beat * beat / (4.0 * omega0 * omega0);
    const double dg_dbeat = (1.0 - 2.0 * x) / std::sqrt(1.0 - x);
    const double dbeat = 2.0 * std::numbers::pi / (period * period) * se;
    report.g2_uncertainty = std::abs(dg_dbeat) * dbeat;
    report.n_peaks_used = k;
    return report;
}

// Synthetic measurement noise: additive Gaussian on |L|, clipped to [0, 1.05],
// phase kept.
inline CoherenceTrace add_magnitude_noise(CoherenceTrace trace, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& v : trace.values) {
        const double mag = std::clamp(std::abs(v) + gauss(rng), 0.0, 1.05);
        const double ph = std::abs(v) > 0.0 ? std::arg(v) : 0.0;
        v = std::polar(mag, ph);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Width versus temperature
// ---------------------------------------------------------------------------

struct WidthGridSpec {
    double points_per_beat{4000.0};  // grid density per beat period
    double beats{1.5};               // grid spans [0, beats * T1]
};

struct WidthRow {
    double temperature{0.0};
    double measured{0.0};     // half-depth width of the first revival
    double predicted{0.0};    // sinh(b w0/2) / (omega1 - omega2)
    double ratio{0.0};        // measured / (calibration * predicted)
};

struct WidthTable {
    double calibration{0.0};  // half-depth width / predicted width at the reference temperature
    double reference_temperature{10.0};
    std::vector<WidthRow> rows;
};

namespace detail {

inline double first_peak_width(const SystemParams& p, const WidthGridSpec& spec) {
    const double t1 = 2.0 * std::numbers::pi / std::abs(derived_frequencies(p).beat);
    const auto grid = density_grid(0.0, spec.beats * t1, t1, spec.points_per_beat);
    const auto rep = detect_peaks(coherence_beat(p, grid), 0.5, 0.5 * t1);
    if (rep.status != PeakStatus::Ok) throw std::runtime_error("width_vs_temperature: no revival found");
    return rep.widths.front();
}

}  // namespace detail

// Measures the first-revival width on the beat formula at each temperature.
// The half-depth convention differs from the quadratic-expansion width by a
// near-constant factor, fixed once at reference_temperature.
inline WidthTable width_vs_temperature(const std::vector<SystemParams>& params_list, const WidthGridSpec& spec = {},
                                       double reference_temperature = 10.0) {
    if (params_list.empty()) throw std::invalid_argument("width_vs_temperature: empty parameter list");
    const auto& first = params_list.front();
    for (const auto& p : params_list) {
        if (p.omega0 != first.omega0 || p.g1 != first.g1 || p.g2 != first.g2) {
            throw std::invalid_argument("width_vs_temperature: params must share omega0, g1, g2");
        }
    }
    for (std::size_t i = 0; i < params_list.size(); ++i) {
        for (std::size_t j = i + 1; j < params_list.size(); ++j) {
            if (params_list[i].temperature == params_list[j].temperature) {
                throw std::invalid_argument("width_vs_temperature: temperatures must be distinct");
            }
        }
    }

    WidthTable table;
    table.reference_temperature = reference_temperature;
    SystemParams ref = first;
    ref.temperature = reference_temperature;
    table.calibration = detail::first_peak_width(ref, spec) / peak_predictions(ref, 1).width;

    for (const auto& p : params_list) {
        WidthRow row;
        row.temperature = p.temperature;
        row.measured = detail::first_peak_width(p, spec);
        row.predicted = peak_predictions(p, 1).width;
        row.ratio = row.measured / (table.calibration * row.predicted);
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace qdephase
