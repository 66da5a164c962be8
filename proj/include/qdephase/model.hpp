// model.hpp - Parameters, derived frequencies, truncated Fock-space operators
// and thermal weights for a qubit dephasing through g1*x + g2*x^2/2 coupling.
//
// Units: hbar = k_B = 1. Energies, frequencies and temperatures are expressed
// in units of omega0 (default omega0 = 1); times in units of 1/omega0. The
// oscillator coordinate is mass-rescaled so that H0 = omega0 (x^2 + p^2) / 2.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdephase {

using cplx = std::complex<double>;

struct SystemParams {
    double omega0{1.0};       // oscillator frequency (unit of energy)
    double g1{0.0};           // linear coupling
    double g2{0.0};           // quadratic coupling
    double temperature{1.0};  // k_B T
    double omega_q{0.0};      // qubit splitting; only a global phase, never used in L(t)

    double beta() const noexcept { return 1.0 / temperature; }

    // Throws std::invalid_argument when the parameters leave the model regime.
    void validate() const {
        if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
            throw std::invalid_argument("SystemParams: omega0 must be positive and finite");
        }
        if (!(temperature > 0.0) || !std::isfinite(temperature)) {
            throw std::invalid_argument("SystemParams: temperature must be positive and finite");
        }
        if (!std::isfinite(g1) || !std::isfinite(g2)) {
            throw std::invalid_argument("SystemParams: couplings must be finite");
        }
        if (!(std::abs(g2) < omega0)) {
            throw std::invalid_argument("SystemParams: |g2| must be smaller than omega0");
        }
        if (!std::isfinite(beta()) || !(beta() > 0.0)) {
            throw std::invalid_argument("SystemParams: beta must be finite and positive");
        }
    }
};

struct DerivedFrequencies {
    double omega1{1.0};  // sqrt(omega0 (omega0 + g2)), frequency seen by the |1> branch
    double omega2{1.0};  // sqrt(omega0 (omega0 - g2)), frequency seen by the |0> branch
    double beat{0.0};    // omega1 - omega2
};

inline DerivedFrequencies derived_frequencies(const SystemParams& p) {
    p.validate();
    DerivedFrequencies f;
    f.omega1 = std::sqrt(p.omega0 * (p.omega0 + p.g2));
    f.omega2 = std::sqrt(p.omega0 * (p.omega0 - p.g2));
    // omega1 - omega2 = 2 omega0 g2 / (omega1 + omega2), free of cancellation.
    f.beat = 2.0 * p.omega0 * p.g2 / (f.omega1 + f.omega2);
    return f;
}

// coth(beta*omega0/2), the thermal enhancement factor that appears in every closed form.
inline double thermal_coth(const SystemParams& p) {
    return 1.0 / std::tanh(0.5 * p.beta() * p.omega0);
}

// ---------------------------------------------------------------------------
// Truncated Fock-space operators
// ---------------------------------------------------------------------------

struct OperatorSet {
    std::size_t dim{0};
    Eigen::MatrixXd x_matrix;   // (a + a^dag)/sqrt(2)
    Eigen::MatrixXcd p_matrix;  // i (a^dag - a)/sqrt(2)
    Eigen::MatrixXd h0;         // omega0 (x^2 + p^2)/2
    Eigen::MatrixXd h_plus;     // h0 + g1 x + g2 x^2/2
    Eigen::MatrixXd h_minus;    // h0 - g1 x - g2 x^2/2
};

// x^2 and p^2 are squares of the truncated matrices, so H+ - H- = 2 g1 x + g2 x^2
// and H+ + H- = 2 H0 hold exactly at every dimension. Only the last Fock level
// carries the truncation artefact.
inline OperatorSet build_operators(const SystemParams& p, std::size_t dim) {
    p.validate();
    if (dim < 2) {
        throw std::invalid_argument("build_operators: dim must be >= 2");
    }
    const auto n = static_cast<Eigen::Index>(dim);

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd p_imag = Eigen::MatrixXd::Zero(n, n);  // p = i * p_imag
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const double e = std::sqrt(0.5 * static_cast<double>(k + 1));
        x(k, k + 1) = e;
        x(k + 1, k) = e;
        // p = i(a^dag - a)/sqrt(2): <k|p|k+1> = -i e, <k+1|p|k> = +i e
        p_imag(k, k + 1) = -e;
        p_imag(k + 1, k) = e;
    }

    OperatorSet ops;
    ops.dim = dim;
    ops.x_matrix = x;
    ops.p_matrix = cplx(0.0, 1.0) * p_imag.cast<cplx>();

    const Eigen::MatrixXd x2 = x * x;
    const Eigen::MatrixXd p2 = -(p_imag * p_imag);  // (i P)(i P) = -P P, real
    ops.h0 = 0.5 * p.omega0 * (x2 + p2);
    const Eigen::MatrixXd coupling = p.g1 * x + 0.5 * p.g2 * x2;
    ops.h_plus = ops.h0 + coupling;
    ops.h_minus = ops.h0 - coupling;
    return ops;
}

// ---------------------------------------------------------------------------
// Thermal weights over the retained Fock levels
// ---------------------------------------------------------------------------

struct ThermalWeights {
    std::size_t dim{0};
    Eigen::VectorXd weights;  // e^{-beta omega0 (n+1/2)} / z_trunc
    double z_trunc{0.0};
    double z_exact{0.0};      // 1 / (2 sinh(beta omega0 / 2))

    // Relative partition-function gap (z_exact - z_trunc)/z_exact = e^{-beta omega0 dim}.
    double tail() const noexcept { return z_exact > 0.0 ? (z_exact - z_trunc) / z_exact : 0.0; }
};

inline ThermalWeights thermal_weights(const SystemParams& p, std::size_t dim) {
    p.validate();
    if (dim < 1) {
        throw std::invalid_argument("thermal_weights: dim must be >= 1");
    }
    const double x = p.beta() * p.omega0;
    const double q = std::exp(-x);
    const double tail = std::exp(-x * static_cast<double>(dim));  // q^dim

    ThermalWeights tw;
    tw.dim = dim;
    tw.z_exact = 1.0 / (2.0 * std::sinh(0.5 * x));
    tw.z_trunc = tw.z_exact * (1.0 - tail);

    // Written relative to the ground level so that large beta does not underflow.
    tw.weights.resize(static_cast<Eigen::Index>(dim));
    const double w0 = -std::expm1(-x) / (1.0 - tail);
    double qn = 1.0;
    double sum = 0.0;
    for (std::size_t n = 0; n < dim; ++n) {
        tw.weights(static_cast<Eigen::Index>(n)) = w0 * qn;
        sum += w0 * qn;
        qn *= q;
    }
    tw.weights /= sum;
    return tw;
}

// Largest element of |A - A^dag|.
template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace qdephase
