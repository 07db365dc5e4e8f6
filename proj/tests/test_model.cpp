#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/system.hpp"
#include "pbcs/transition.hpp"
#include "test_support.hpp"

using namespace pbcs;
namespace tu = pbcs::test_util;

namespace {

PBCSystem four_arc_system() {
    return {Matrix{{-2.5, 1.5}, {3, -2.5}}, Matrix{{1.5, -0.5}, {1, -1.5}}, 4.0};
}

}  // namespace

TEST(Validate, AcceptsPositiveSystem) {
    const auto r = validate(four_arc_system());
    EXPECT_TRUE(r.valid());
    EXPECT_TRUE(r.problems.empty());
}

TEST(Validate, FlagsEachProblem) {
    PBCSystem s = four_arc_system();
    s.B(0, 1) = 2.0;  // A - B gets -0.5 off the diagonal
    auto r = validate(s);
    EXPECT_FALSE(r.valid());
    EXPECT_TRUE(r.a_plus_b_metzler);
    EXPECT_FALSE(r.a_minus_b_metzler);
    EXPECT_THROW(require_valid(s), invalid_system_error);

    s = four_arc_system();
    s.horizon = 0.0;
    EXPECT_FALSE(validate(s).horizon_positive);

    s = four_arc_system();
    s.B = Matrix::identity(3);
    EXPECT_FALSE(validate(s).dimensions_agree);

    s = four_arc_system();
    s.A(1, 1) = std::nan("");
    EXPECT_FALSE(validate(s).finite);
}

TEST(Validate, EndpointCheckMatchesIntermediateValues) {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = tu::random_system(rng, 3, 1.0);
        ASSERT_TRUE(validate(s).valid());
        for (double k = -1.0; k <= 1.0; k += 0.125) EXPECT_TRUE(is_metzler(s.generator(k)));
    }
}

TEST(BangBangControl, ConstructionAndAccessors) {
    const BangBangControl u(1, {1, 2, 3}, 4);
    EXPECT_EQ(u.arc_count(), 4u);
    EXPECT_EQ(u.sign_of_arc(0), 1);
    EXPECT_EQ(u.sign_of_arc(3), -1);
    EXPECT_EQ(u.durations(), (std::vector<double>{1, 1, 1, 1}));
    EXPECT_EQ(value_at(Control{u}, 0.5), 1.0);
    EXPECT_EQ(value_at(Control{u}, 1.0), -1.0);  // later arc at a boundary
    EXPECT_EQ(value_at(Control{u}, 3.5), -1.0);
    EXPECT_EQ(arc_boundaries(Control{u}), (std::vector<double>{0, 1, 2, 3, 4}));
}

TEST(BangBangControl, RejectsBadInput) {
    EXPECT_THROW(BangBangControl(0, {}, 1), invalid_control_error);
    EXPECT_THROW(BangBangControl(1, {0.5, 0.5}, 1), invalid_control_error);
    EXPECT_THROW(BangBangControl(1, {0.7, 0.6}, 1), invalid_control_error);
    EXPECT_THROW(BangBangControl(1, {1.0}, 1), invalid_control_error);
    EXPECT_THROW(BangBangControl(1, {0.0}, 1), invalid_control_error);
    EXPECT_THROW(BangBangControl(1, {}, -1), invalid_control_error);
    EXPECT_THROW(BangBangControl(1, {0.5, 0.5 + 1e-13}, 1), invalid_control_error);
}

TEST(BangBangControl, FromDurationsDropsAndMerges) {
    const std::vector<double> d{0.0, 1.0, 0.0, 2.0, 0.5};
    const auto u = BangBangControl::from_durations(1, d);
    // arcs: +0 (dropped), -1, +0 (dropped) so -1 and -2 merge, then +0.5
    EXPECT_EQ(u.first_sign(), -1);
    EXPECT_EQ(u.switch_times(), (std::vector<double>{3.0}));
    EXPECT_DOUBLE_EQ(u.horizon(), 3.5);
    EXPECT_THROW((void)BangBangControl::from_durations(1, std::vector<double>{0.0, 0.0}), invalid_control_error);
    EXPECT_THROW((void)BangBangControl::from_durations(1, std::vector<double>{1.0, -1.0}), invalid_control_error);
}

TEST(PiecewiseControl, ValidationAndConversion) {
    EXPECT_THROW(PiecewiseConstantControl({0, 1}, {1.5}), invalid_control_error);
    EXPECT_THROW(PiecewiseConstantControl({0.1, 1}, {0}), invalid_control_error);
    EXPECT_THROW(PiecewiseConstantControl({0, 1, 1}, {0, 0}), invalid_control_error);
    EXPECT_THROW(PiecewiseConstantControl({0, 1}, {0, 1}), invalid_control_error);

    const BangBangControl u(-1, {0.3, 0.9}, 2.0);
    const auto pw = to_piecewise(u);
    EXPECT_EQ(pw.values(), (std::vector<double>{-1, 1, -1}));
    EXPECT_EQ(to_bang_bang(pw), u);

    const PiecewiseConstantControl repeated({0, 1, 2, 3}, {1, 1, -1});
    EXPECT_EQ(to_bang_bang(repeated), BangBangControl(1, {2.0}, 3.0));
    EXPECT_THROW((void)to_bang_bang(PiecewiseConstantControl({0, 1}, {0.5})), invalid_control_error);
}

TEST(CyclicShift, RotatesArcs) {
    const BangBangControl u(1, {1, 3, 3.5}, 4);  // durations 1, 2, 0.5, 0.5
    EXPECT_EQ(cyclic_shift(u, 0), u);
    const auto s1 = cyclic_shift(u, 1);
    EXPECT_EQ(s1.first_sign(), -1);
    EXPECT_EQ(s1.durations(), (std::vector<double>{2, 0.5, 0.5, 1}));
    EXPECT_THROW((void)cyclic_shift(u, 4), bad_index_error);

    // odd arc count: first and last arcs fuse across the seam
    const BangBangControl odd(1, {1, 2}, 4);  // +1, -1, +2
    const auto s = cyclic_shift(odd, 1);
    EXPECT_EQ(s.arc_count(), 2u);
    EXPECT_EQ(s.first_sign(), -1);
    EXPECT_EQ(s.durations(), (std::vector<double>{1, 3}));
}

TEST(CyclicShift, PreservesSpectralRadius) {
    std::mt19937 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 3, 1.5);
        const auto u = tu::random_bang_bang(rng, 2 + trial % 4, 1.5);
        const double rho = spectral_radius(transition_matrix(sys, Control{u}));
        for (std::size_t p = 0; p < u.arc_count(); ++p) {
            const auto s = cyclic_shift(u, p);
            const auto sys_s = sys.with_horizon(s.horizon());
            const double rs = spectral_radius(transition_matrix(sys_s, Control{s}));
            EXPECT_LT(tu::relative_error(rs, rho), 1e-10) << "trial " << trial << " pivot " << p;
        }
    }
}

TEST(PeriodicExtension, RepeatsArcs) {
    const BangBangControl u(1, {1}, 2);
    const auto e = periodic_extension(u, 3);
    EXPECT_EQ(e.arc_count(), 6u);
    EXPECT_DOUBLE_EQ(e.horizon(), 6.0);
    const BangBangControl odd(1, {1, 2}, 3);  // +, -, + : repeats fuse
    EXPECT_EQ(periodic_extension(odd, 2).arc_count(), 5u);
    EXPECT_THROW((void)periodic_extension(u, 0), invalid_control_error);
}

TEST(Transition, ConstantControlIsExponential) {
    const auto sys = four_arc_system();
    const Control u = BangBangControl::constant(1, 4.0);
    EXPECT_LT(tu::relative_error(transition_matrix(sys, u), expm((sys.A + sys.B) * 4.0)), 1e-14);
    const Control zero = PiecewiseConstantControl::constant(0.0, 4.0);
    EXPECT_LT(tu::relative_error(transition_matrix(sys, zero), expm(sys.A * 4.0)), 1e-14);
}

TEST(Transition, FourArcProductOrder) {
    const auto sys = four_arc_system();
    const Control u = BangBangControl(1, {1, 2, 3}, 4);
    const Matrix p = expm(sys.A + sys.B), q = expm(sys.A - sys.B);
    EXPECT_LT(tu::relative_error(transition_matrix(sys, u), q * p * q * p), 1e-14);
    EXPECT_LT(tu::relative_error(transition_matrix(sys, u, 0.5, 2.5), expm((sys.A + sys.B) * 0.5) * q *
                                                                          expm((sys.A + sys.B) * 0.5)),
              1e-14);
    EXPECT_EQ(transition_matrix(sys, u, 1.5, 1.5), Matrix::identity(2));
}

TEST(Transition, Errors) {
    const auto sys = four_arc_system();
    const Control u = BangBangControl(1, {1, 2, 3}, 4);
    EXPECT_THROW((void)transition_matrix(sys, u, 2.0, 1.0), invalid_interval_error);
    EXPECT_THROW((void)transition_matrix(sys, u, -1.0, 1.0), invalid_interval_error);
    EXPECT_THROW((void)transition_matrix(sys, u, 0.0, 5.0), invalid_interval_error);
    EXPECT_THROW((void)transition_matrix(sys.with_horizon(3.0), u), invalid_control_error);
    PBCSystem bad = sys;
    bad.B(1, 0) = 10.0;
    EXPECT_THROW((void)transition_matrix(bad, u), invalid_system_error);
}

TEST(Transition, FlowCompositionAndPositivity) {
    std::mt19937 rng(6);
    for (int trial = 0; trial < 25; ++trial) {
        const double T = 2.0;
        const auto sys = tu::random_system(rng, 2 + trial % 4, T);
        const Control u = tu::random_bang_bang(rng, 1 + trial % 5, T);
        std::uniform_real_distribution<double> d(0.0, T);
        double a = d(rng), b = d(rng), c = d(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const Matrix cab = transition_matrix(sys, u, a, b);
        const Matrix cbc = transition_matrix(sys, u, b, c);
        const Matrix cac = transition_matrix(sys, u, a, c);
        EXPECT_LT(tu::relative_error(cbc * cab, cac), 1e-10) << "trial " << trial;
        EXPECT_GE(min_entry(cac), -1e-10);
        EXPECT_GE(min_entry(transition_matrix(sys, u)), -1e-10);
    }
}

TEST(TransitionCache, MatchesDirectEvaluation) {
    std::mt19937 rng(8);
    const double T = 3.0;
    const auto sys = tu::random_system(rng, 3, T);
    const Control u = tu::random_bang_bang(rng, 4, T);
    const TransitionCache cache(sys, u);
    EXPECT_LT(tu::relative_error(cache.total(), transition_matrix(sys, u)), 1e-14);
    for (double t : {0.0, 0.3, 1.0, 1.7, 2.2, 3.0}) {
        EXPECT_LT(tu::relative_error(cache.from_start(t), transition_matrix(sys, u, 0.0, t)), 1e-13);
        EXPECT_LT(tu::relative_error(cache.to_end(t), transition_matrix(sys, u, t, T)), 1e-13);
    }
    for (const double t : arc_boundaries(u)) {
        EXPECT_LT(tu::relative_error(cache.from_start(t), transition_matrix(sys, u, 0.0, t)), 1e-13);
    }
    EXPECT_THROW((void)cache.from_start(3.5), invalid_interval_error);
}

TEST(Simulate, StateFollowsTransition) {
    const auto sys = four_arc_system();
    const Control u = BangBangControl(1, {1, 2, 3}, 4);
    const Vector x0{1.0, 2.0};
    const auto traj = simulate(sys, u, x0, {0.0, 1.0, 4.0});
    EXPECT_EQ(traj.states[0], x0);
    const Vector x4 = transition_matrix(sys, u) * x0;
    EXPECT_NEAR(traj.states[2][0], x4[0], 1e-14);
    EXPECT_NEAR(traj.states[2][1], x4[1], 1e-14);
    for (const auto& x : traj.states)
        for (double xi : x) EXPECT_GE(xi, 0.0);
    EXPECT_THROW((void)simulate(sys, u, Vector{1.0}, {0.0}), dimension_error);
}
