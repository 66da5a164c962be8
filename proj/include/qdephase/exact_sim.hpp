// exact_sim.hpp - Numerically exact qubit coherence in a truncated Fock space.
//
// Both branch Hamiltonians H+ and H- are diagonalised once,
//   e^{-iHt} = V e^{-i Lambda t} V^T   (H real symmetric),
// and every time point is then evaluated from the eigenphases alone:
//
//   free: L(t) = Tr(W U-^dag(t) U+(t))                     = sum_ab K_ab e^{i(l-_a - l+_b)t}
//   echo: L(t) = Tr(W U-^dag U+^dag U-(t/2) U+(t/2))       (all at t/2)
//
// with W the thermal weights, C = V-^T V+, G = V+^T W V-, K_ab = C_ab G_ba.
// C, G and K are near-banded in the Fock basis for weak coupling; they are
// stored as pruned row segments so one time point costs O(N b^2) or less.

#pragma once

#include "qdephase/model.hpp"
#include "qdephase/parallel.hpp"
#include "qdephase/trace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdephase {

// Raised when the truncation procedure cannot reach the requested tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::size_t last_dim, double last_drift, double last_tail)
        : std::runtime_error(what), last_dim_(last_dim), last_drift_(last_drift), last_tail_(last_tail) {}
    std::size_t last_dim() const noexcept { return last_dim_; }
    double last_drift() const noexcept { return last_drift_; }
    double last_tail() const noexcept { return last_tail_; }

private:
    std::size_t last_dim_;
    double last_drift_;
    double last_tail_;
};

struct ExactSimOptions {
    double prune_tol{1e-15};        // entries of C, G, K below this magnitude are dropped
    std::size_t drift_probes{16};   // grid points re-evaluated at dim/2 for the drift diagnostic
    double drift_tol{1e-4};         // drift above this marks the trace as not converged
    double tail_tol{1e-10};         // thermal weight tail above this marks the trace as not converged
    bool diagnostics{true};
};

// ---------------------------------------------------------------------------
// Spectral data
// ---------------------------------------------------------------------------

struct Spectrum {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd vectors;   // columns, orthonormal
};

inline Spectrum diagonalize(const Eigen::MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("diagonalize: eigen decomposition failed");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// Dense e^{-iHt}; used for checks, not in the hot loops.
inline Eigen::MatrixXcd propagator(const Spectrum& s, double t) {
    const Eigen::Index n = s.energies.size();
    Eigen::VectorXcd phase(n);
    for (Eigen::Index k = 0; k < n; ++k) phase(k) = std::polar(1.0, -s.energies(k) * t);
    const Eigen::MatrixXcd v = s.vectors.cast<cplx>();
    return v * phase.asDiagonal() * v.transpose();
}

// Max element of |U^dag U - I|.
inline double unitarity_defect(const Eigen::MatrixXcd& u) {
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

// Row-wise contiguous storage of a pruned dense matrix. Row i keeps columns
// [lo[i], lo[i] + values[i].size()).
struct RowSegments {
    std::size_t n{0};
    std::vector<std::size_t> lo;
    std::vector<std::vector<double>> values;

    static RowSegments from_dense(const Eigen::MatrixXd& m, double tol) {
        RowSegments r;
        r.n = static_cast<std::size_t>(m.rows());
        r.lo.assign(r.n, 0);
        r.values.assign(r.n, {});
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            Eigen::Index first = -1, last = -1;
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (std::abs(m(i, j)) > tol) {
                    if (first < 0) first = j;
                    last = j;
                }
            }
            if (first < 0) continue;
            r.lo[static_cast<std::size_t>(i)] = static_cast<std::size_t>(first);
            auto& row = r.values[static_cast<std::size_t>(i)];
            row.resize(static_cast<std::size_t>(last - first + 1));
            for (Eigen::Index j = first; j <= last; ++j) row[static_cast<std::size_t>(j - first)] = m(i, j);
        }
        return r;
    }

    std::size_t stored() const {
        std::size_t s = 0;
        for (const auto& v : values) s += v.size();
        return s;
    }
};

// ---------------------------------------------------------------------------
// Propagation kernels
// ---------------------------------------------------------------------------

// Everything that depends on (params, dim) but not on time.
class CoherenceKernel {
public:
    CoherenceKernel(const SystemParams& params, std::size_t dim, double prune_tol = 1e-15)
        : params_(params), dim_(dim) {
        const OperatorSet ops = build_operators(params, dim);
        weights_ = thermal_weights(params, dim);
        plus_ = diagonalize(ops.h_plus);
        minus_ = diagonalize(ops.h_minus);

        const Eigen::MatrixXd c = minus_.vectors.transpose() * plus_.vectors;
        const Eigen::MatrixXd g =
            plus_.vectors.transpose() * weights_.weights.asDiagonal() * minus_.vectors;
        const Eigen::MatrixXd k = c.cwiseProduct(g.transpose());

        c_rows_ = RowSegments::from_dense(c, prune_tol);
        c_cols_ = RowSegments::from_dense(c.transpose(), prune_tol);
        g_rows_ = RowSegments::from_dense(g, prune_tol);
        k_rows_ = RowSegments::from_dense(k, prune_tol);
    }

    std::size_t dim() const noexcept { return dim_; }
    const ThermalWeights& weights() const noexcept { return weights_; }
    const Spectrum& plus() const noexcept { return plus_; }
    const Spectrum& minus() const noexcept { return minus_; }
    const RowSegments& overlap() const noexcept { return c_rows_; }

    // Free evolution, L(t) = Tr(W e^{iH-t} e^{-iH+t}).
    cplx free(double t, std::vector<cplx>& scratch_m, std::vector<cplx>& scratch_p) const {
        fill_phases(minus_.energies, +t, scratch_m);  // e^{+i l- t}
        fill_phases(plus_.energies, -t, scratch_p);   // e^{-i l+ t}
        cplx total{0.0, 0.0};
        for (std::size_t a = 0; a < dim_; ++a) {
            const auto& row = k_rows_.values[a];
            if (row.empty()) continue;
            const std::size_t lo = k_rows_.lo[a];
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * scratch_p[lo + j];
            total += scratch_m[a] * acc;
        }
        return total;
    }

    struct EchoScratch {
        std::vector<cplx> dp, dm, u, v;
    };

    // Hahn echo with the qubit flipped at t/2:
    //   L = sum_a dp_a sum_d conj(dp_d) u_ad v_ad,
    //   u_ad = sum_b G_ab conj(dm_b) C_bd,  v_ad = sum_c C_ca dm_c C_cd,
    // where dp, dm are the eigenphases e^{-i l t/2} of H+ and H-.
    cplx echo(double t, EchoScratch& s) const {
        const double tau = 0.5 * t;
        fill_phases(plus_.energies, -tau, s.dp);
        fill_phases(minus_.energies, -tau, s.dm);
        s.u.assign(dim_, cplx{0.0, 0.0});
        s.v.assign(dim_, cplx{0.0, 0.0});

        cplx total{0.0, 0.0};
        for (std::size_t a = 0; a < dim_; ++a) {
            std::size_t ulo = dim_, uhi = 0, vlo = dim_, vhi = 0;
            accumulate(g_rows_, a, s.dm, true, s.u, ulo, uhi);
            accumulate(c_cols_, a, s.dm, false, s.v, vlo, vhi);
            const std::size_t lo = std::max(ulo, vlo);
            const std::size_t hi = std::min(uhi, vhi);
            cplx acc{0.0, 0.0};
            for (std::size_t d = lo; d < hi; ++d) acc += std::conj(s.dp[d]) * s.u[d] * s.v[d];
            total += s.dp[a] * acc;
            for (std::size_t d = ulo; d < uhi; ++d) s.u[d] = 0.0;
            for (std::size_t d = vlo; d < vhi; ++d) s.v[d] = 0.0;
        }
        return total;
    }

private:
    static void fill_phases(const Eigen::VectorXd& energies, double t, std::vector<cplx>& out) {
        out.resize(static_cast<std::size_t>(energies.size()));
        for (Eigen::Index k = 0; k < energies.size(); ++k) out[static_cast<std::size_t>(k)] = std::polar(1.0, energies(k) * t);
    }

    // out[d] += sum_{b in row a of left} left_ab * phase_b * C_bd over the
    // stored segment of C; [lo, hi) tracks the touched columns.
    void accumulate(const RowSegments& left, std::size_t a, const std::vector<cplx>& phase, bool conjugate,
                    std::vector<cplx>& out, std::size_t& lo, std::size_t& hi) const {
        const auto& lrow = left.values[a];
        const std::size_t lstart = left.lo[a];
        for (std::size_t j = 0; j < lrow.size(); ++j) {
            const std::size_t b = lstart + j;
            const cplx f = lrow[j] * (conjugate ? std::conj(phase[b]) : phase[b]);
            const auto& crow = c_rows_.values[b];
            if (crow.empty()) continue;
            const std::size_t cstart = c_rows_.lo[b];
            lo = std::min(lo, cstart);
            hi = std::max(hi, cstart + crow.size());
            for (std::size_t k = 0; k < crow.size(); ++k) out[cstart + k] += f * crow[k];
        }
    }

    SystemParams params_;
    std::size_t dim_;
    ThermalWeights weights_;
    Spectrum plus_;
    Spectrum minus_;
    RowSegments c_rows_;  // C = V-^T V+
    RowSegments c_cols_;  // C^T
    RowSegments g_rows_;  // G = V+^T W V-
    RowSegments k_rows_;  // K_ab = C_ab G_ba
};

// ---------------------------------------------------------------------------
// Trace-level operations
// ---------------------------------------------------------------------------

namespace detail {

enum class Protocol { Free, Echo };

inline std::vector<cplx> evaluate(const CoherenceKernel& kernel, std::span<const double> times, Protocol protocol) {
    std::vector<cplx> out(times.size());
    parallel_for_chunks(times.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<cplx> sm, sp;
        CoherenceKernel::EchoScratch es;
        for (std::size_t k = begin; k < end; ++k) {
            if (times[k] == 0.0) {
                out[k] = cplx{1.0, 0.0};
                continue;
            }
            out[k] = protocol == Protocol::Free ? kernel.free(times[k], sm, sp) : kernel.echo(times[k], es);
        }
    });
    return out;
}

// Evenly spread subset of at most n grid points (always including the last).
inline std::vector<double> probe_subset(std::span<const double> times, std::size_t n) {
    if (times.size() <= n) return {times.begin(), times.end()};
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = (i + 1) * (times.size() - 1) / n;
        out.push_back(times[k]);
    }
    return out;
}

inline CoherenceTrace run(const SystemParams& params, std::span<const double> times, std::size_t dim,
                          Protocol protocol, const ExactSimOptions& opt) {
    params.validate();
    validate_grid(times, protocol == Protocol::Free ? "coherence_free" : "coherence_echo");
    if (dim < 2) throw std::invalid_argument("exact_sim: dim must be >= 2");

    const CoherenceKernel kernel(params, dim, opt.prune_tol);
    CoherenceTrace trace;
    trace.times.assign(times.begin(), times.end());
    trace.values = evaluate(kernel, times, protocol);
    trace.method = protocol == Protocol::Free ? Method::NumericFree : Method::NumericEcho;
    trace.params = params;
    trace.trunc_dim = dim;

    if (opt.diagnostics) {
        TruncationDiagnostic diag;
        diag.weight_tail = kernel.weights().tail();
        if (dim / 2 >= 2) {
            const auto probe = probe_subset(times, opt.drift_probes);
            const CoherenceKernel half(params, dim / 2, opt.prune_tol);
            const auto coarse = evaluate(half, probe, protocol);
            const auto fine = evaluate(kernel, probe, protocol);
            for (std::size_t i = 0; i < probe.size(); ++i) {
                diag.drift = std::max(diag.drift, std::abs(coarse[i] - fine[i]));
            }
        }
        diag.converged = diag.weight_tail < opt.tail_tol && diag.drift < opt.drift_tol;
        if (!diag.converged) {
            std::ostringstream msg;
            msg << "truncation not converged at dim=" << dim << ": weight tail " << diag.weight_tail
                << ", drift vs dim/2 " << diag.drift;
            trace.notes.push_back(msg.str());
        }
        trace.truncation = diag;
    }
    return trace;
}

}  // namespace detail

// Free-evolution coherence L(t) = Tr(e^{-iH+t} rho0 e^{iH-t}).
inline CoherenceTrace coherence_free(const SystemParams& params, std::span<const double> times, std::size_t dim,
                                     const ExactSimOptions& opt = {}) {
    return detail::run(params, times, dim, detail::Protocol::Free, opt);
}

// Hahn-echo coherence, qubit flipped at t/2.
inline CoherenceTrace coherence_echo(const SystemParams& params, std::span<const double> times, std::size_t dim,
                                     const ExactSimOptions& opt = {}) {
    return detail::run(params, times, dim, detail::Protocol::Echo, opt);
}

struct ConvergenceOptions {
    std::size_t start_dim{32};
    std::size_t cap{4096};
    std::size_t probe_points{64};
    double tail_floor{1e-10};
    double prune_tol{1e-15};
};

// Smallest dim in the doubling sequence start, 2 start, ... (<= cap) whose
// free-evolution coherence agrees with the doubled dimension to `tol` on a
// uniform probe grid over [0, t_max], and whose thermal tail is below the floor.
inline std::size_t converge_truncation(const SystemParams& params, double t_max, double tol,
                                       const ConvergenceOptions& opt = {}) {
    params.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("converge_truncation: tol must be positive");
    if (!(t_max > 0.0)) throw std::invalid_argument("converge_truncation: t_max must be positive");
    if (opt.start_dim < 2) throw std::invalid_argument("converge_truncation: start_dim must be >= 2");

    const auto probe = uniform_grid(0.0, t_max, std::max<std::size_t>(opt.probe_points, 2));
    std::vector<cplx> previous;  // coherence at the current candidate dim, once computed
    double last_drift = std::numeric_limits<double>::infinity();
    double last_tail = 1.0;
    std::size_t dim = opt.start_dim;
    for (; dim <= opt.cap; dim *= 2) {
        last_tail = thermal_weights(params, dim).tail();
        if (last_tail >= opt.tail_floor) {
            previous.clear();
            continue;
        }
        if (previous.empty()) {
            previous = detail::evaluate(CoherenceKernel(params, dim, opt.prune_tol), probe, detail::Protocol::Free);
        }
        auto doubled = detail::evaluate(CoherenceKernel(params, 2 * dim, opt.prune_tol), probe, detail::Protocol::Free);
        last_drift = 0.0;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            last_drift = std::max(last_drift, std::abs(doubled[i] - previous[i]));
        }
        if (last_drift < tol) return dim;
        previous = std::move(doubled);
    }
    std::ostringstream msg;
    msg << "converge_truncation: cap " << opt.cap << " exceeded without reaching tol " << tol
        << " (last weight tail " << last_tail << ", last drift " << last_drift << ")";
    throw ConvergenceError(msg.str(), dim / 2, last_drift, last_tail);
}

}  // namespace qdephase
