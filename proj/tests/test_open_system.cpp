// test_open_system.cpp - Characteristic roots, residuals and revival classification.

#include "qdephase/open_system.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace qdephase;

namespace {

SystemParams make(double g2, double temp) {
    SystemParams p;
    p.g2 = g2;
    p.temperature = temp;
    return p;
}

// Independent oracle: eigenvalues of the companion matrix of the quartic.
std::vector<cplx> companion_roots(const SystemParams& p, const BathParams& b) {
    const double w2 = p.omega0 * p.omega0;
    const cplx c2 = 2.0 * w2 - 4.0 * b.gamma * b.gamma;
    const cplx c0(w2 * w2 - p.g2 * p.g2 * w2, p.g2 * b.lambda * w2);
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(1, 0) = m(2, 1) = m(3, 2) = 1.0;
    m(0, 3) = -c0;
    m(2, 3) = -c2;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m);
    std::vector<cplx> r(4);
    for (int i = 0; i < 4; ++i) r[i] = es.eigenvalues()(i);
    return r;
}

}  // namespace

TEST(NoiseKernel, Lambda) {
    EXPECT_DOUBLE_EQ(noise_kernel_lambda(0.01, 10.0, 1.0), 0.8);
    EXPECT_DOUBLE_EQ(noise_kernel_lambda(0.0, 10.0, 1.0), 0.0);
    EXPECT_THROW(noise_kernel_lambda(-1.0, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(noise_kernel_lambda(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(Roots, UndampedLimit) {
    for (double g2 : {0.002, 0.1, 0.2, -0.3}) {
        const auto p = make(g2, 10.0);
        const auto r = characteristic_roots(p, BathParams{0.0, 10.0, 0.0});
        const cplx a(0.0, std::sqrt(1.0 - g2));
        const cplx b(0.0, std::sqrt(1.0 + g2));
        for (const cplx& want : {a, -a, b, -b}) {
            const double best = std::min({std::abs(r.roots[0] - want), std::abs(r.roots[1] - want),
                                          std::abs(r.roots[2] - want), std::abs(r.roots[3] - want)});
            EXPECT_LT(best, 1e-10) << g2;
        }
        EXPECT_LT(r.max_real, 1e-10);
    }
}

TEST(Roots, PlusMinusPairing) {
    const auto p = make(0.1, 1.0);
    const auto r = characteristic_roots(p, make_bath(0.05, 1.0, 1.0));
    EXPECT_LT(std::abs(r.roots[0] + r.roots[1]), 1e-12);
    EXPECT_LT(std::abs(r.roots[2] + r.roots[3]), 1e-12);
}

TEST(Roots, AgreeWithCompanionMatrix) {
    for (double g2 : {0.002, 0.1, 0.5}) {
        for (double gamma : {1e-6, 1e-3, 0.05, 0.3, 2.0}) {
            for (double temp : {0.1, 1.0, 100.0}) {
                const auto p = make(g2, temp);
                const auto b = make_bath(gamma, temp, 1.0);
                const auto r = characteristic_roots(p, b);
                const auto ref = companion_roots(p, b);
                const double scale = std::max(1.0, std::abs(ref[0]));
                for (const auto& z : r.roots) {
                    double best = 1e300;
                    for (const auto& w : ref) best = std::min(best, std::abs(z - w));
                    EXPECT_LT(best, 1e-8 * scale) << g2 << " " << gamma << " " << temp;
                }
                EXPECT_LT(r.max_residual, 1e-10);
            }
        }
    }
}

TEST(Roots, ContinuityTowardUndamped) {
    const auto p = make(0.1, 1.0);
    const auto r0 = characteristic_roots(p, BathParams{0.0, 1.0, 0.0});
    double prev = 1e300;
    for (double gamma : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const auto r = characteristic_roots(p, make_bath(gamma, 1.0, 1.0));
        double d = 0.0;
        for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(r.roots[i] - r0.roots[i]));
        EXPECT_LT(d, prev);
        prev = d;
    }
    EXPECT_LT(prev, 1e-6);
}

TEST(Roots, MaxRealMonotoneInGamma) {
    const auto p = make(0.1, 1.0);
    for (double lambda : {0.0, 0.01, 0.5}) {
        double prev = -1.0;
        for (int i = 0; i <= 60; ++i) {
            const double gamma = 1e-4 * std::pow(10.0, i / 15.0);
            const auto r = characteristic_roots(p, BathParams{gamma, 1.0, lambda});
            EXPECT_GE(r.max_real, prev - 1e-12) << gamma;
            prev = r.max_real;
        }
    }
}

TEST(RevivalCondition, Examples) {
    {
        // gamma = g2 with T chosen so that lambda = g2.
        const double g2 = 0.1;
        const auto p = make(g2, 1.0 / 8.0);
        const auto r = revival_condition(p, make_bath(g2, 1.0 / 8.0, 1.0));
        EXPECT_NEAR(r.lambda_ratio, 1.0, 1e-12);
        EXPECT_NE(r.classification, RevivalClass::Preserved);
        EXPECT_GT(r.revival_ratio, 0.5);
    }
    {
        const double g2 = 0.1;
        const auto p = make(g2, 10.0);
        const auto b = make_bath(1e-3 * g2, 10.0, 1.0);
        const auto r = revival_condition(p, b);
        EXPECT_LT(r.lambda_ratio, 0.1);
        EXPECT_EQ(r.classification, RevivalClass::Preserved);
    }
    EXPECT_THROW(revival_condition(make(0.0, 1.0), make_bath(0.1, 1.0, 1.0)), std::invalid_argument);
    EXPECT_EQ(revival_class_name(RevivalClass::Destroyed), "revival-destroyed");
}

TEST(RevivalCondition, ThresholdsConfigurable) {
    const auto p = make(0.1, 1.0 / 8.0);
    const auto b = make_bath(0.1, 1.0 / 8.0, 1.0);
    RootOptions strict;
    strict.destroyed_from = 0.5;
    EXPECT_EQ(revival_condition(p, b, strict).classification, RevivalClass::Destroyed);
}
