// branch.hpp - Square roots of a complex function of time with a continuous branch.
//
// The principal square root flips sign whenever the radicand crosses the
// negative real axis. track_sqrt follows arg(radicand) along the time axis,
// refining adaptively between grid points, and halves the unwrapped phase.

#pragma once

#include "qdephase/model.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdephase {

struct BranchTrackerOptions {
    double max_phase_step{0.5};  // largest accepted |d arg| between evaluations (rad)
    int max_depth{40};           // bisection depth limit per grid interval
};

namespace detail {

inline double wrap_to_pi(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a < 0.0) a += two_pi;
    return a - std::numbers::pi;
}

}  // namespace detail

// `radicand(t)` returns std::nullopt at points where it cannot be evaluated
// reliably; such points are stepped around. The branch is anchored at
// `t_anchor`, where arg(radicand) is taken on the principal branch.
//
// Returns one value per grid time; entries for unevaluable grid times are
// std::nullopt. The grid must be strictly increasing and t_anchor <= times[0].
template <typename Radicand>
std::vector<std::optional<cplx>> track_sqrt(std::span<const double> times, Radicand&& radicand,
                                            double t_anchor, BranchTrackerOptions opt = {}) {
    std::vector<std::optional<cplx>> out(times.size());
    if (times.empty()) return out;
    if (t_anchor > times.front()) {
        throw std::invalid_argument("track_sqrt: anchor must precede the grid");
    }

    auto anchor_val = radicand(t_anchor);
    if (!anchor_val) {
        throw std::runtime_error("track_sqrt: radicand undefined at the anchor");
    }
    double cur_t = t_anchor;
    double cur_arg = std::arg(*anchor_val);

    // Advances the tracked phase from cur_t to target; returns the radicand there.
    auto advance = [&](double target) -> std::optional<cplx> {
        auto val = radicand(target);
        if (!val) return std::nullopt;
        double delta = detail::wrap_to_pi(std::arg(*val) - cur_arg);
        if (std::abs(delta) <= opt.max_phase_step) {
            cur_arg += delta;
            cur_t = target;
            return val;
        }
        // Walk in sub-steps, halving the step until each increment is small.
        double h = (target - cur_t) / 2.0;
        int depth = 0;
        while (cur_t < target) {
            double next = std::min(cur_t + h, target);
            auto v = radicand(next);
            if (!v) {
                // Step slightly past an unevaluable point.
                next = std::min(next + 1e-3 * h, target);
                v = radicand(next);
                if (!v) {
                    h *= 0.5;
                    if (++depth > opt.max_depth) throw std::runtime_error("track_sqrt: cannot step around singular point");
                    continue;
                }
            }
            const double d = detail::wrap_to_pi(std::arg(*v) - cur_arg);
            if (std::abs(d) > opt.max_phase_step && depth < opt.max_depth) {
                h *= 0.5;
                ++depth;
                continue;
            }
            cur_arg += d;
            cur_t = next;
            if (std::abs(d) < 0.25 * opt.max_phase_step && depth > 0) {
                h *= 2.0;
                --depth;
            }
        }
        return val;
    };

    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        std::optional<cplx> val;
        if (t == cur_t) {
            val = radicand(t);
        } else {
            val = advance(t);
        }
        if (!val) continue;
        out[k] = std::polar(std::sqrt(std::abs(*val)), 0.5 * cur_arg);
    }
    return out;
}

}  // namespace qdephase
