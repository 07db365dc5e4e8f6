#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "pbcs/io.hpp"
#include "pbcs/reproduce.hpp"
#include "test_support.hpp"

using namespace pbcs;
namespace tu = pbcs::test_util;
using io::json;

namespace {

std::string data_file(const char* name) { return std::string(PBCS_DATA_DIR) + "/" + name; }

}  // namespace

TEST(Json, SystemRoundTripIsExact) {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 3, 0.1 + std::exp(0.3 * trial));
        const auto text = io::to_json(sys).dump();
        const auto back = io::system_from_json(json::parse(text));
        EXPECT_EQ(back.A, sys.A);
        EXPECT_EQ(back.B, sys.B);
        EXPECT_EQ(back.horizon, sys.horizon);
    }
}

TEST(Json, ControlRoundTrip) {
    const Control bb = BangBangControl(-1, {0.1, 1.0 / 3.0, 2.0}, 2.5);
    const auto bb_back = io::control_from_json(json::parse(io::to_json(bb).dump()), 2.5);
    ASSERT_TRUE(std::holds_alternative<BangBangControl>(bb_back));
    EXPECT_EQ(std::get<BangBangControl>(bb_back).switch_times(), std::get<BangBangControl>(bb).switch_times());
    EXPECT_EQ(std::get<BangBangControl>(bb_back).first_sign(), -1);

    const Control pw = PiecewiseConstantControl({0.0, 0.7, 2.5}, {0.25, -1.0});
    const auto pw_back = io::control_from_json(json::parse(io::to_json(pw).dump()), 2.5);
    ASSERT_TRUE(std::holds_alternative<PiecewiseConstantControl>(pw_back));
    EXPECT_EQ(std::get<PiecewiseConstantControl>(pw_back).values(), (std::vector<double>{0.25, -1.0}));
    EXPECT_EQ(std::get<PiecewiseConstantControl>(pw_back).breakpoints(), (std::vector<double>{0.0, 0.7, 2.5}));
}

TEST(Json, SerializedSearchResultReproducesRho) {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 6; ++trial) {
        const auto sys = tu::random_system(rng, 2 + trial % 3, 1.3);
        const auto res = grid_search(sys, 1 + trial % 4, 5);
        const auto j = json::parse(io::to_json(res).dump());
        const auto u = io::control_from_json(j["best_control"], j["horizon"].get<double>());
        const double again = perron_pair(transition_matrix(sys, u)).rho;
        EXPECT_LT(tu::relative_error(again, j["best_rho"].get<double>()), 1e-12);
        EXPECT_EQ(j["best_rho"].get<double>(), res.best_rho);
    }
}

TEST(Json, ParseErrors) {
    EXPECT_THROW((void)io::system_from_json(json::array()), input_error);
    EXPECT_THROW((void)io::system_from_json(json::parse(R"({"A": [[1]], "B": [[0]]})")), input_error);
    EXPECT_THROW((void)io::system_from_json(json::parse(R"({"A": [[1, 2]], "B": [[0]], "T": 1})")), input_error);
    EXPECT_THROW((void)io::system_from_json(json::parse(R"({"A": [["x"]], "B": [[0]], "T": 1})")), input_error);
    EXPECT_THROW((void)io::system_from_json(json::parse(R"({"A": [[1]], "B": [[0]], "T": "1"})")), input_error);
    EXPECT_THROW((void)io::control_from_json(json::parse(R"({"type": "smooth"})"), 1.0), input_error);
    EXPECT_THROW((void)io::control_from_json(json::parse(R"({"type": "bangbang", "r": 0})"), 1.0), input_error);
    EXPECT_THROW((void)io::control_from_json(json::parse(R"({"type": "piecewise", "breakpoints": [0, 0.5],
                                                              "values": [1]})"),
                                             1.0),
                 invalid_control_error);
    EXPECT_THROW((void)io::control_from_json(json::parse(R"({"type": "bangbang", "r": 1, "switch_times": [2]})"), 1.0),
                 invalid_control_error);
    EXPECT_THROW((void)io::read_json_file(data_file("malformed.json")), input_error);
    EXPECT_THROW((void)io::read_json_file(data_file("does_not_exist.json")), input_error);
}

TEST(Json, SampleInputsParse) {
    const auto p = io::problem_from_json(io::read_json_file(data_file("four_arc.json")));
    EXPECT_TRUE(validate(p.system).valid());
    ASSERT_TRUE(p.control.has_value());
    EXPECT_LT(tu::relative_error(perron_pair(transition_matrix(p.system, *p.control)).rho, 0.5238042324788527),
              1e-12);
    const auto bad = io::problem_from_json(io::read_json_file(data_file("not_metzler.json")));
    EXPECT_FALSE(validate(bad.system).valid());
    for (const char* name : {"singular_u0.json", "unstable_2x2.json", "stable_diagonal.json"})
        EXPECT_TRUE(validate(io::problem_from_json(io::read_json_file(data_file(name))).system).valid()) << name;
}

TEST(Csv, FullPrecisionNumbers) {
    EXPECT_EQ(io::format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_number(1.0), "1");
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (int i = 0; i < 200; ++i) {
        const double x = d(rng);
        EXPECT_EQ(std::strtod(io::format_number(x).c_str(), nullptr), x);
    }
}

TEST(Csv, SwitchingFunctionTable) {
    const auto sys = reproduce::four_arc_example();
    const Control u = reproduce::four_arc_candidate();
    const auto s = switching_function(sys, u, default_grid(u, 16));
    const auto csv = io::switching_csv(s);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,m");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        ASSERT_NE(comma, std::string::npos);
        EXPECT_EQ(std::strtod(line.substr(0, comma).c_str(), nullptr), s.times[rows]);
        EXPECT_EQ(std::strtod(line.substr(comma + 1).c_str(), nullptr), s.values[rows]);
        ++rows;
    }
    EXPECT_EQ(rows, s.times.size());
}

TEST(Csv, RhoCurveTable) {
    const auto v = rho_t_curve(reproduce::singular_example(1.0), {0.5, 1.0}, 1, 2);
    EXPECT_EQ(io::rho_t_csv(v).substr(0, 15), "t,rho,rho_root\n");
    const auto j = io::to_json(v);
    EXPECT_EQ(j["status"], "not_GAS_certified");
    EXPECT_EQ(j["curve"].size(), 2u);
}

TEST(Reproduce, AllChecksPass) {
    for (const auto& id : reproduce::example_ids()) {
        const auto checks = reproduce::run(id);
        EXPECT_FALSE(checks.empty());
        for (const auto& c : checks) EXPECT_TRUE(c.passed) << id << ": " << c.name << " = " << c.value;
    }
    EXPECT_THROW((void)reproduce::run("ex9"), input_error);
}

TEST(Reproduce, ClosedFormPerronData) {
    const auto sys = reproduce::four_arc_example();
    const auto pp = perron_pair(transition_matrix(sys, reproduce::four_arc_candidate()));
    EXPECT_LT(tu::relative_error(pp.rho, reproduce::four_arc_rho()), 1e-13);
    EXPECT_LT(angle_sine(pp.v, reproduce::four_arc_right_vector()), 1e-12);
    EXPECT_LT(angle_sine(pp.w, reproduce::four_arc_left_vector()), 1e-12);
}
