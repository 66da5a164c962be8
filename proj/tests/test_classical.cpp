// test_classical.cpp - Classical closed forms and the Boltzmann Monte Carlo.

#include "qdephase/classical.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

using namespace qdephase;

namespace {

SystemParams make(double g1, double g2, double temp) {
    SystemParams p;
    p.g1 = g1;
    p.g2 = g2;
    p.temperature = temp;
    return p;
}

}  // namespace

TEST(ClassicalLinear, ClosedForm) {
    const auto p = make(0.04, 0.0, 10.0);
    const auto tr = classical_linear(p, std::vector<double>{0.0, std::numbers::pi});
    EXPECT_NEAR(std::abs(tr.values[0]), 1.0, 1e-15);
    EXPECT_NEAR(tr.values[1].real(), std::exp(-8.0 * 0.0016 * 10.0), 1e-14);
}

TEST(ClassicalQuadratic, ApproxValueAtRevivalTime) {
    const auto p = make(0.0, 0.002, 10.0);
    const double t1 = 2.0 * std::numbers::pi / derived_frequencies(p).beat;
    const auto q = classical_quadratic(p, std::vector<double>{t1});
    EXPECT_NEAR(std::abs(q.approx.values[0]), 0.0159, 1e-4);
    EXPECT_NEAR(std::abs(q.exact.values[0]), std::abs(q.approx.values[0]), 1e-4);
}

TEST(ClassicalQuadratic, ExactIsContinuousAndBounded) {
    const auto p = make(0.0, 0.1, 1.0);
    const auto t = uniform_grid(0.0, 200.0, 4001);
    const auto q = classical_quadratic(p, t);
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_LE(std::abs(q.exact.values[k]), 1.0 + 1e-12);
        if (k > 0) {
            EXPECT_LT(std::abs(q.exact.values[k] - q.exact.values[k - 1]), 0.05);
        }
    }
}

TEST(QuantumClassicalGap, LargeAtRevival) {
    const auto p = make(0.0, 0.002, 10.0);
    const double t1 = 2.0 * std::numbers::pi / derived_frequencies(p).beat;
    const auto gap = quantum_classical_gap(p, std::vector<double>{0.0, t1});
    EXPECT_NEAR(gap[0], 0.0, 1e-15);
    EXPECT_GT(gap[1], 0.9);
}

TEST(MonteCarlo, ReproducibleForFixedSeed) {
    const auto p = make(0.04, 0.002, 10.0);
    const auto t = uniform_grid(0.0, 500.0, 21);
    const auto a = classical_mc(p, t, 20000, 7, Coupling::Both);
    const auto b = classical_mc(p, t, 20000, 7, Coupling::Both);
    const auto c = classical_mc(p, t, 20000, 8, Coupling::Both);
    bool differs = false;
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_EQ(a[k].value, b[k].value);
        EXPECT_EQ(a[k].std_error, b[k].std_error);
        if (k > 0 && a[k].value != c[k].value) differs = true;
    }
    EXPECT_TRUE(differs);
}

TEST(MonteCarlo, IndependentOfThreadCount) {
    const auto p = make(0.04, 0.002, 10.0);
    const auto t = uniform_grid(0.0, 500.0, 11);
    McOptions opt;
    opt.batch_size = 1000;
    setenv("QDEPHASE_THREADS", "1", 1);
    const auto a = classical_mc(p, t, 10000, 3, Coupling::Both, opt);
    setenv("QDEPHASE_THREADS", "3", 1);
    const auto b = classical_mc(p, t, 10000, 3, Coupling::Both, opt);
    unsetenv("QDEPHASE_THREADS");
    for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(a[k].value, b[k].value);
}

TEST(MonteCarlo, MatchesClosedForms) {
    const auto t = uniform_grid(0.0, 3000.0, 31);
    {
        const auto p = make(0.04, 0.0, 10.0);
        const auto mc = classical_mc(p, t, 50000, 11, Coupling::Linear);
        const auto ref = classical_linear(p, t);
        for (std::size_t k = 0; k < t.size(); ++k) {
            EXPECT_LT(std::abs(mc[k].value - ref.values[k]), 5.0 * mc[k].std_error + 1e-12) << t[k];
        }
    }
    {
        const auto p = make(0.0, 0.002, 10.0);
        const auto mc = classical_mc(p, t, 50000, 12, Coupling::Quadratic);
        const auto ref = classical_quadratic(p, t).exact;
        for (std::size_t k = 0; k < t.size(); ++k) {
            EXPECT_LT(std::abs(mc[k].value - ref.values[k]), 5.0 * mc[k].std_error + 1e-12) << t[k];
        }
    }
}

TEST(MonteCarlo, StandardErrorScaling) {
    const auto p = make(0.0, 0.002, 10.0);
    const std::vector<double> t = {100.0, 500.0, 1000.0};
    const auto a = classical_mc(p, t, 10000, 5, Coupling::Quadratic);
    const auto b = classical_mc(p, t, 40000, 5, Coupling::Quadratic);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = a[k].std_error / b[k].std_error;
        EXPECT_GT(r, 1.5);
        EXPECT_LT(r, 2.5);
    }
}

TEST(MonteCarlo, Errors) {
    const auto p = make(0.0, 0.002, 10.0);
    EXPECT_THROW(classical_mc(p, std::vector<double>{1.0}, 99, 1, Coupling::Both), std::invalid_argument);
    EXPECT_THROW(classical_mc(p, std::vector<double>{2.0, 1.0}, 1000, 1, Coupling::Both), std::invalid_argument);
}

TEST(Correlation, MatchesClosedForm) {
    const auto p = make(0.0, 0.0, 10.0);
    const auto lags = uniform_grid(0.0, 10.0, 21);
    const auto c = correlation_check(p, lags, 100000, 99);
    for (const auto& e : c) {
        EXPECT_LT(std::abs(e.value - e.closed_form), 5.0 * e.std_error) << e.lag;
    }
    EXPECT_NEAR(c[0].closed_form, 10.0, 1e-12);
}
