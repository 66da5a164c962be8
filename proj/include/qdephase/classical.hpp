// classical.hpp - Classical-oscillator comparator.
//
// The oscillator follows x(t) = x0 cos(w0 t) + p0 sin(w0 t) with (x0, p0) drawn
// from the Boltzmann density (b w0 / 2 pi) exp(-b w0 (x^2 + p^2)/2). The qubit
// picks up the phase Phi(t) = int_0^t (2 g1 x + g2 x^2) dtau and the classical
// coherence is <exp(-i Phi)>.

#pragma once

#include "qdephase/analytic.hpp"
#include "qdephase/branch.hpp"
#include "qdephase/model.hpp"
#include "qdephase/parallel.hpp"
#include "qdephase/trace.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdephase {

// L_c = exp(-4 g1^2 (1 - cos w0 t) / (b w0^3)).
inline CoherenceTrace classical_linear(const SystemParams& p, std::span<const double> times) {
    const double w0 = p.omega0;
    const double a = 4.0 * p.g1 * p.g1 / (p.beta() * w0 * w0 * w0);
    return detail::closed_form(p, times, Method::ClassicalLinear, "classical_linear",
                               [&](double t) { return cplx(std::exp(-a * (1.0 - std::cos(w0 * t))), 0.0); });
}

struct ClassicalQuadratic {
    CoherenceTrace exact;   // b w0 / sqrt((b w0 + i g2 t)^2 + (g2^2 / 2 w0^2)(1 - cos 2 w0 t))
    CoherenceTrace approx;  // b w0 / (b w0 + i g2 t)
};

inline ClassicalQuadratic classical_quadratic(const SystemParams& p, std::span<const double> times) {
    p.validate();
    validate_grid(times, "classical_quadratic");
    const double bw = p.beta() * p.omega0;
    const double w0 = p.omega0;

    ClassicalQuadratic out;
    auto radicand = [&](double t) -> std::optional<cplx> {
        const cplx a(bw, p.g2 * t);
        return a * a + (p.g2 * p.g2 / (2.0 * w0 * w0)) * (1.0 - std::cos(2.0 * w0 * t));
    };
    const auto roots = track_sqrt(times, radicand, std::min(0.0, times.front()));

    out.exact.method = Method::ClassicalQuadratic;
    out.exact.params = p;
    out.exact.label = "exact";
    out.exact.times.assign(times.begin(), times.end());
    for (const auto& r : roots) out.exact.values.push_back(bw / *r);

    out.approx = detail::closed_form(p, times, Method::ClassicalQuadratic, "classical_quadratic",
                                     [&](double t) { return bw / cplx(bw, p.g2 * t); });
    out.approx.label = "approx";
    return out;
}

// ||L_beat(t)| - |L_c,approx(t)||: the quantum revival has no classical counterpart.
inline std::vector<double> quantum_classical_gap(const SystemParams& p, std::span<const double> times) {
    const auto beat = coherence_beat(p, times);
    const auto cl = classical_quadratic(p, times).approx;
    std::vector<double> gap(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        gap[k] = std::abs(std::abs(beat.values[k]) - std::abs(cl.values[k]));
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Monte Carlo over the Boltzmann ensemble
// ---------------------------------------------------------------------------

enum class Coupling { Linear, Quadratic, Both };

struct McEstimate {
    cplx value{1.0, 0.0};
    double std_error{0.0};  // sqrt((var Re + var Im) / n)
    std::size_t n_samples{0};
    std::uint64_t seed{0};
};

struct McOptions {
    std::size_t batch_size{4096};  // samples per independently seeded batch
};

namespace detail {

// Neumaier compensated sum.
struct CompensatedSum {
    double sum{0.0};
    double comp{0.0};

    void add(double x) noexcept {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    double value() const noexcept { return sum + comp; }
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t batch_seed(std::uint64_t master, std::size_t batch) noexcept {
    return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(batch) + 1));
}

// Draws n_samples phase-space points in fixed batches and accumulates
// per-time sums of f(x0, p0, k) and f^2 for each of `channels` real channels.
// Results depend only on (seed, batch_size), never on the worker count.
template <typename Sample>
std::vector<CompensatedSum> mc_accumulate(std::size_t n_samples, std::uint64_t seed, double sigma,
                                          std::size_t slots, const McOptions& opt, Sample&& sample) {
    const std::size_t batch = std::max<std::size_t>(opt.batch_size, 1);
    const std::size_t n_batches = (n_samples + batch - 1) / batch;
    std::vector<std::vector<CompensatedSum>> partial(n_batches, std::vector<CompensatedSum>(slots));

    parallel_for_chunks(n_batches, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t b = begin; b < end; ++b) {
            std::mt19937_64 rng(batch_seed(seed, b));
            std::normal_distribution<double> gauss(0.0, sigma);
            const std::size_t count = std::min(batch, n_samples - b * batch);
            auto& acc = partial[b];
            for (std::size_t s = 0; s < count; ++s) {
                const double x0 = gauss(rng);
                const double p0 = gauss(rng);
                sample(x0, p0, acc);
            }
        }
    });

    std::vector<CompensatedSum> total(slots);
    for (const auto& part : partial) {
        for (std::size_t i = 0; i < slots; ++i) {
            total[i].add(part[i].sum);
            total[i].add(part[i].comp);
        }
    }
    return total;
}

inline double sample_variance(double sum, double sum_sq, double n) {
    if (n < 2.0) return 0.0;
    return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

}  // namespace detail

inline std::vector<McEstimate> classical_mc(const SystemParams& p, std::span<const double> times,
                                            std::size_t n_samples, std::uint64_t seed, Coupling coupling,
                                            const McOptions& opt = {}) {
    p.validate();
    validate_grid(times, "classical_mc");
    if (n_samples < 100) throw std::invalid_argument("classical_mc: n_samples must be >= 100");

    const double w = p.omega0;
    const double sigma = std::sqrt(1.0 / (p.beta() * p.omega0));
    const double lin = coupling == Coupling::Quadratic ? 0.0 : 2.0 * p.g1;
    const double quad = coupling == Coupling::Linear ? 0.0 : p.g2;

    // Closed-form orbit integrals per time point.
    struct Integrals {
        double ix, iy;         // int x = ix x0 + iy p0
        double axx, axp, app;  // int x^2 = axx x0^2 + axp x0 p0 + app p0^2
    };
    std::vector<Integrals> geo(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const double s = std::sin(w * t), c = std::cos(w * t);
        const double s2 = std::sin(2.0 * w * t), c2 = std::cos(2.0 * w * t);
        geo[k] = {s / w, (1.0 - c) / w, 0.5 * t + s2 / (4.0 * w), (1.0 - c2) / (2.0 * w),
                  0.5 * t - s2 / (4.0 * w)};
    }

    const std::size_t nt = times.size();
    // slots: [re, im, re^2, im^2] per time point
    const auto sums = detail::mc_accumulate(
        n_samples, seed, sigma, 4 * nt, opt, [&](double x0, double p0, std::vector<detail::CompensatedSum>& acc) {
            for (std::size_t k = 0; k < nt; ++k) {
                const auto& g = geo[k];
                const double phi = lin * (g.ix * x0 + g.iy * p0) +
                                   quad * (g.axx * x0 * x0 + g.axp * x0 * p0 + g.app * p0 * p0);
                const double re = std::cos(phi);
                const double im = -std::sin(phi);
                acc[4 * k].add(re);
                acc[4 * k + 1].add(im);
                acc[4 * k + 2].add(re * re);
                acc[4 * k + 3].add(im * im);
            }
        });

    const double n = static_cast<double>(n_samples);
    std::vector<McEstimate> out(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const double sr = sums[4 * k].value(), si = sums[4 * k + 1].value();
        const double var = detail::sample_variance(sr, sums[4 * k + 2].value(), n) +
                           detail::sample_variance(si, sums[4 * k + 3].value(), n);
        out[k] = {cplx(sr / n, si / n), std::sqrt(var / n), n_samples, seed};
    }
    return out;
}

// Packs Monte Carlo means into a trace (standard errors stay in the estimates).
inline CoherenceTrace mc_trace(const SystemParams& p, std::span<const double> times,
                               const std::vector<McEstimate>& est) {
    CoherenceTrace tr;
    tr.method = Method::ClassicalMc;
    tr.params = p;
    tr.times.assign(times.begin(), times.end());
    for (const auto& e : est) tr.values.push_back(e.value);
    return tr;
}

struct CorrelationEstimate {
    double lag{0.0};
    double value{0.0};
    double std_error{0.0};
    double closed_form{0.0};  // cos(w0 tau) / (b w0)
};

// Monte Carlo estimate of <x(tau) x(0)> over the Boltzmann ensemble.
inline std::vector<CorrelationEstimate> correlation_check(const SystemParams& p, std::span<const double> lags,
                                                          std::size_t n_samples, std::uint64_t seed,
                                                          const McOptions& opt = {}) {
    p.validate();
    validate_grid(lags, "correlation_check");
    if (n_samples < 100) throw std::invalid_argument("correlation_check: n_samples must be >= 100");
    const double w = p.omega0;
    const double sigma = std::sqrt(1.0 / (p.beta() * w));
    const std::size_t nl = lags.size();
    std::vector<double> c(nl), s(nl);
    for (std::size_t k = 0; k < nl; ++k) {
        c[k] = std::cos(w * lags[k]);
        s[k] = std::sin(w * lags[k]);
    }
    const auto sums = detail::mc_accumulate(
        n_samples, seed, sigma, 2 * nl, opt, [&](double x0, double p0, std::vector<detail::CompensatedSum>& acc) {
            for (std::size_t k = 0; k < nl; ++k) {
                const double v = x0 * (x0 * c[k] + p0 * s[k]);
                acc[2 * k].add(v);
                acc[2 * k + 1].add(v * v);
            }
        });
    const double n = static_cast<double>(n_samples);
    std::vector<CorrelationEstimate> out(nl);
    for (std::size_t k = 0; k < nl; ++k) {
        const double sum = sums[2 * k].value();
        out[k].lag = lags[k];
        out[k].value = sum / n;
        out[k].std_error = std::sqrt(detail::sample_variance(sum, sums[2 * k + 1].value(), n) / n);
        out[k].closed_form = c[k] / (p.beta() * w);
    }
    return out;
}

}  // namespace qdephase
