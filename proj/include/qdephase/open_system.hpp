// open_system.hpp - Ohmic-bath damping analysis: kernel strength, characteristic
// roots of the extremal-path equations and the revival classifier.
//
// The extremal paths of the damped influence action are sums of e^{z tau} with
//   z = +-sqrt(2 gamma^2 - w0^2 +- sqrt(4 gamma^4 - 4 gamma^2 w0^2 + g2^2 w0^2 - i g2 lambda w0^2)).
// Revivals at the beat period survive only when |Re z| << g2.

#pragma once

#include "qdephase/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string_view>

namespace qdephase {

struct BathParams {
    double gamma{0.0};        // friction constant
    double temperature{1.0};  // shared with SystemParams
    double lambda{0.0};       // white-noise kernel strength 8 gamma T / omega0
};

// nu(tau) = lambda delta(tau) for an Ohmic bath at high temperature.
inline double noise_kernel_lambda(double gamma, double temperature, double omega0) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("noise_kernel_lambda: gamma must be >= 0");
    if (!(temperature > 0.0)) throw std::invalid_argument("noise_kernel_lambda: temperature must be > 0");
    if (!(omega0 > 0.0)) throw std::invalid_argument("noise_kernel_lambda: omega0 must be > 0");
    return 8.0 * gamma * temperature / omega0;
}

inline BathParams make_bath(double gamma, double temperature, double omega0) {
    return {gamma, temperature, noise_kernel_lambda(gamma, temperature, omega0)};
}

enum class RevivalClass { Preserved, Degraded, Destroyed };

inline std::string_view revival_class_name(RevivalClass c) noexcept {
    switch (c) {
        case RevivalClass::Preserved: return "revival-preserved";
        case RevivalClass::Degraded: return "revival-degraded";
        case RevivalClass::Destroyed: return "revival-destroyed";
    }
    return "unknown";
}

struct RootSet {
    std::array<cplx, 4> roots{};  // z1 = -z2, z3 = -z4
    double max_real{0.0};         // max |Re z_i|
    double revival_ratio{0.0};    // max_real / |g2|
    double gamma_ratio{0.0};      // gamma / |g2|
    double lambda_ratio{0.0};     // lambda / |g2|
    double max_residual{0.0};     // relative quartic residual over the four roots
    RevivalClass classification{RevivalClass::Preserved};
};

// Quartic obtained by squaring the nested radicals (internal consistency gate):
//   z^4 + (2 w0^2 - 4 gamma^2) z^2 + (w0^4 - g2^2 w0^2 + i g2 lambda w0^2) = 0.
inline cplx root_quartic(const SystemParams& p, const BathParams& b, cplx z) {
    const double w2 = p.omega0 * p.omega0;
    const cplx c0(w2 * w2 - p.g2 * p.g2 * w2, p.g2 * b.lambda * w2);
    const cplx z2 = z * z;
    return z2 * z2 + (2.0 * w2 - 4.0 * b.gamma * b.gamma) * z2 + c0;
}

// |quartic(z)| relative to the magnitude of its largest term.
inline double root_residual(const SystemParams& p, const BathParams& b, cplx z) {
    const double w2 = p.omega0 * p.omega0;
    const cplx c0(w2 * w2 - p.g2 * p.g2 * w2, p.g2 * b.lambda * w2);
    const double z2 = std::norm(z);
    const double scale = std::max({z2 * z2, std::abs(2.0 * w2 - 4.0 * b.gamma * b.gamma) * z2, std::abs(c0), 1e-300});
    return std::abs(root_quartic(p, b, z)) / scale;
}

struct RootOptions {
    double residual_tol{1e-10};
    double preserved_below{0.1};  // revival_ratio < this: preserved
    double destroyed_from{1.0};   // revival_ratio >= this: destroyed
};

inline RootSet characteristic_roots(const SystemParams& p, const BathParams& b, const RootOptions& opt = {}) {
    p.validate();
    if (!(b.gamma >= 0.0)) throw std::invalid_argument("characteristic_roots: gamma must be >= 0");
    const double w2 = p.omega0 * p.omega0;
    const double gam2 = b.gamma * b.gamma;
    const cplx disc(4.0 * gam2 * gam2 - 4.0 * gam2 * w2 + p.g2 * p.g2 * w2, -p.g2 * b.lambda * w2);
    const cplx inner = std::sqrt(disc);
    const double base = 2.0 * gam2 - w2;
    const cplx za = std::sqrt(base + inner);
    const cplx zb = std::sqrt(base - inner);

    RootSet r;
    r.roots = {za, -za, zb, -zb};
    for (const auto& z : r.roots) {
        r.max_real = std::max(r.max_real, std::abs(z.real()));
        r.max_residual = std::max(r.max_residual, root_residual(p, b, z));
    }
    if (!(r.max_residual < opt.residual_tol)) {
        throw std::runtime_error("characteristic_roots: quartic residual check failed (branch selection)");
    }
    const double g = std::abs(p.g2);
    if (g > 0.0) {
        r.revival_ratio = r.max_real / g;
        r.gamma_ratio = b.gamma / g;
        r.lambda_ratio = b.lambda / g;
    }
    return r;
}

inline RootSet revival_condition(const SystemParams& p, const BathParams& b, const RootOptions& opt = {}) {
    if (p.g2 == 0.0) throw std::invalid_argument("revival_condition: g2 = 0 leaves the condition undefined");
    RootSet r = characteristic_roots(p, b, opt);
    if (r.revival_ratio < opt.preserved_below) {
        r.classification = RevivalClass::Preserved;
    } else if (r.revival_ratio < opt.destroyed_from) {
        r.classification = RevivalClass::Degraded;
    } else {
        r.classification = RevivalClass::Destroyed;
    }
    return r;
}

}  // namespace qdephase
