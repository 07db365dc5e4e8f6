#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pbcs/search.hpp"
#include "test_support.hpp"

using namespace pbcs;
namespace tu = pbcs::test_util;

namespace {

// A + B has eigenvalues (3 +- sqrt 19) / 2, A has eigenvalues 3 and -1
PBCSystem symmetric_example(double T) {
    return {Matrix{{2.2, 1.6}, {1.6, -0.2}}, Matrix{{-1.1, 0.2}, {0.95, 2.1}}, T};
}

PBCSystem four_arc_system() {
    return {Matrix{{-2.5, 1.5}, {3, -2.5}}, Matrix{{1.5, -0.5}, {1, -1.5}}, 4.0};
}

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

double direct_rho(const PBCSystem& sys, const BangBangControl& u) {
    return perron_pair(transition_matrix(sys, Control{u})).rho;
}

}  // namespace

TEST(GridSearch, CompositionsAreCompleteAndOrdered) {
    for (std::size_t k = 1; k <= 4; ++k) {
        for (int d = 2; d <= 7; ++d) {
            const auto comps = detail::weak_compositions(k, d);
            EXPECT_EQ(static_cast<double>(comps.size()), binomial(d + static_cast<int>(k) - 1, static_cast<int>(k) - 1));
            EXPECT_EQ(grid_size(k, static_cast<std::size_t>(d)), 2.0 * static_cast<double>(comps.size()));
            EXPECT_TRUE(std::is_sorted(comps.begin(), comps.end()));
            EXPECT_EQ(std::adjacent_find(comps.begin(), comps.end()), comps.end());
            for (const auto& c : comps) {
                EXPECT_EQ(c.size(), k);
                EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), d);
                for (int x : c) EXPECT_GE(x, 0);
            }
        }
    }
}

TEST(GridSearch, ConstantControlsPickLargerRoot) {
    for (double T : {0.5, 1.0, 2.0}) {
        const auto res = grid_search(symmetric_example(T), 1, 2);
        EXPECT_EQ(res.evaluations, 2u);
        EXPECT_EQ(res.best_control.first_sign(), 1);
        EXPECT_TRUE(res.best_control.switch_times().empty());
        const double expected = std::exp(T * (3.0 + std::sqrt(19.0)) / 2.0);
        EXPECT_LT(tu::relative_error(res.best_rho, expected), 1e-12);
        EXPECT_GT(res.best_rho, std::exp(3.0 * T));
    }
}

TEST(GridSearch, FourArcCandidateIsBeaten) {
    const auto sys = four_arc_system();
    const double candidate = direct_rho(sys, BangBangControl(1, {1, 2, 3}, 4));
    EXPECT_NEAR(candidate, 0.5238042324788527, 1e-12);
    for (std::size_t d : {4u, 8u, 9u}) {
        const auto res = grid_search(sys, 4, d);
        EXPECT_GE(res.best_rho, 1.0 - 1e-9) << "grid " << d;
        EXPECT_GT(res.best_rho, candidate);
    }
}

TEST(GridSearch, TieBreakPrefersNegativeSign) {
    const PBCSystem sys{Matrix{{-1, 0.5}, {0.3, -2}}, Matrix(2), 1.0};
    const auto res = grid_search(sys, 1, 2);
    EXPECT_EQ(res.best_control.first_sign(), -1);
    EXPECT_DOUBLE_EQ(res.best_rho, perron_pair(expm(sys.A)).rho);
}

TEST(GridSearch, DeterministicAcrossThreadCounts) {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 6; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 3, 1.0 + 0.3 * trial);
        const std::size_t k = 1 + trial % 4;
        SearchOptions one, many;
        one.threads = 1;
        many.threads = 5;
        const auto a = grid_search(sys, k, 6, one);
        const auto b = grid_search(sys, k, 6, many);
        const auto c = grid_search(sys, k, 6, many);
        EXPECT_EQ(a.best_rho, b.best_rho);
        EXPECT_EQ(b.best_rho, c.best_rho);
        EXPECT_EQ(a.best_control.first_sign(), b.best_control.first_sign());
        EXPECT_EQ(a.best_control.switch_times(), b.best_control.switch_times());
        EXPECT_EQ(a.evaluations, b.evaluations);
    }
}

TEST(GridSearch, ReportedRhoMatchesReevaluation) {
    std::mt19937 rng(32);
    for (int trial = 0; trial < 8; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 3, 1.5);
        const auto res = grid_search(sys, 1 + trial % 4, 5);
        EXPECT_LT(tu::relative_error(res.best_rho, direct_rho(sys, res.best_control)), 1e-12);
        EXPECT_DOUBLE_EQ(res.best_control.horizon(), 1.5);
    }
}

TEST(GridSearch, BudgetAndArguments) {
    const auto sys = four_arc_system();
    SearchOptions opt;
    opt.budget = 10;
    EXPECT_THROW((void)grid_search(sys, 4, 9, opt), budget_exceeded_error);
    opt.budget = static_cast<std::uint64_t>(grid_size(2, 4));
    EXPECT_NO_THROW((void)grid_search(sys, 2, 4, opt));
    EXPECT_THROW((void)grid_search(sys, 0, 4), invalid_control_error);
    EXPECT_THROW((void)grid_search(sys, 2, 1), invalid_control_error);
    const PBCSystem bad{Matrix{{-1, -1}, {0, -1}}, Matrix(2), 1.0};
    EXPECT_THROW((void)grid_search(bad, 2, 4), invalid_system_error);
}

TEST(Refine, TraceIsStrictlyIncreasing) {
    std::mt19937 rng(33);
    for (int trial = 0; trial < 6; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 2, 2.0);
        const auto seed = tu::random_bang_bang(rng, 2 + trial % 3, 2.0);
        const auto res = refine(sys, seed);
        ASSERT_FALSE(res.trace.empty());
        EXPECT_LT(tu::relative_error(res.trace.front(), direct_rho(sys, seed)), 1e-12);
        for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_GT(res.trace[i], res.trace[i - 1]);
        EXPECT_GE(res.best_rho, res.trace.front() * (1 - 1e-12));
        EXPECT_LE(res.evaluations, RefineOptions{}.max_evaluations);
    }
}

TEST(Refine, FixedPointIsKept) {
    std::mt19937 rng(34);
    const auto sys = tu::random_system(rng, 3, 2.0);
    const auto first = refine(sys, tu::random_bang_bang(rng, 3, 2.0));
    const auto again = refine(sys, first.best_control);
    EXPECT_NEAR(again.best_rho, first.best_rho, 1e-10 * first.best_rho);
    EXPECT_EQ(again.trace.size(), 1u);
}

TEST(Refine, FourArcCandidateDoesNotGetWorse) {
    const auto sys = four_arc_system();
    const BangBangControl seed(1, {1, 2, 3}, 4);
    const auto res = refine(sys, seed);
    EXPECT_GE(res.best_rho, direct_rho(sys, seed));
}

TEST(Refine, SwitchesCollapseToConstantControl) {
    // rho over two-arc controls is a valley between u = -1 and u = +1, so
    // every seed collapses to one of the two constants
    const auto sys = symmetric_example(1.0);
    const double plus = std::exp((3.0 + std::sqrt(19.0)) / 2.0);
    const double minus = perron_pair(expm(sys.generator(-1))).rho;
    std::mt19937 rng(35);
    for (int trial = 0; trial < 8; ++trial) {
        const auto seed = tu::random_bang_bang(rng, 2 + trial % 3, 1.0);
        const auto res = refine(sys, seed);
        EXPECT_EQ(res.best_control.durations().size(), 1u) << "trial " << trial;
        const double target = res.best_control.first_sign() > 0 ? plus : minus;
        EXPECT_LT(tu::relative_error(res.best_rho, target), 1e-9) << "trial " << trial;
    }
    for (double t : {0.55, 0.7, 0.9}) {
        for (const auto& seed : {BangBangControl(1, {t}, 1.0), BangBangControl(-1, {1.0 - t}, 1.0)}) {
            const auto res = refine(sys, seed);
            EXPECT_EQ(res.best_control.first_sign(), 1);
            EXPECT_TRUE(res.best_control.switch_times().empty());
            EXPECT_LT(tu::relative_error(res.best_rho, plus), 1e-12);
        }
    }
}

TEST(RhoTCurve, UnstableSystemIsCertified) {
    const auto v = rho_t_curve(symmetric_example(1.0), {0.5, 1.0, 2.0}, 2, 4);
    EXPECT_EQ(v.status, GASStatus::not_gas_certified);
    ASSERT_TRUE(v.witness.has_value());
    EXPECT_GE(v.witness->rho, 1.0 + not_gas_margin);
    ASSERT_EQ(v.curve.size(), 3u);
    for (const auto& s : v.curve) {
        EXPECT_NEAR(s.rate, std::exp((3.0 + std::sqrt(19.0)) / 2.0), 1e-9 * s.rate);
        EXPECT_NEAR(s.rate, std::pow(s.rho, 1.0 / s.horizon), 1e-12 * s.rate);
    }
}

TEST(RhoTCurve, StableDiagonalIsUndetermined) {
    const PBCSystem sys{Matrix::identity(2) * -10.0, Matrix(2), 1.0};
    const auto v = rho_t_curve(sys, {0.5, 1.0, 3.0}, 2, 4);
    EXPECT_EQ(v.status, GASStatus::undetermined);
    EXPECT_FALSE(v.witness.has_value());
    for (const auto& s : v.curve) EXPECT_NEAR(s.rate, std::exp(-10.0), 1e-9 * std::exp(-10.0));
    EXPECT_STREQ(to_string(v.status), "undetermined");
    EXPECT_STREQ(to_string(GASStatus::not_gas_certified), "not_GAS_certified");
}

TEST(RhoTCurve, BudgetCoversAllHorizons) {
    SearchOptions opt;
    opt.budget = static_cast<std::uint64_t>(2 * grid_size(2, 4));
    EXPECT_NO_THROW((void)rho_t_curve(symmetric_example(1.0), {1.0, 2.0}, 2, 4, opt));
    EXPECT_THROW((void)rho_t_curve(symmetric_example(1.0), {1.0, 2.0, 3.0}, 2, 4, opt), budget_exceeded_error);
}

TEST(PeriodicExtension, PowersOfRho) {
    std::mt19937 rng(36);
    for (int trial = 0; trial < 12; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 3, 1.0);
        const auto u = tu::random_bang_bang(rng, 1 + trial % 4, 1.0);
        for (std::size_t m = 1; m <= 4; ++m) {
            const auto chk = periodic_extension_check(sys, u, m);
            EXPECT_LT(chk.relative_residual, 1e-8) << "trial " << trial << " m " << m;
        }
    }
}

TEST(PeriodicExtension, WitnessOfUnstableSystem) {
    const auto v = rho_t_curve(symmetric_example(1.0), {1.0}, 3, 6);
    ASSERT_TRUE(v.witness.has_value());
    const auto chk = periodic_extension_check(symmetric_example(1.0), v.witness->control, 3);
    EXPECT_LT(chk.relative_residual, 1e-8);
}
