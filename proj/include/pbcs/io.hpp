#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/first_order.hpp"
#include "pbcs/high_order.hpp"
#include "pbcs/matrix.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/search.hpp"
#include "pbcs/system.hpp"

/*
 * Input document:
 *
 *   {
 *     "A": [[...], ...],            square, array of rows
 *     "B": [[...], ...],
 *     "T": 4,
 *     "control": {"type": "bangbang", "r": 1, "switch_times": [1, 2, 3]}
 *              | {"type": "piecewise", "breakpoints": [0, ..., T], "values": [...]}
 *   }
 *
 * "control" is optional; its horizon is T.
 */

namespace pbcs::io {

using json = nlohmann::json;

struct ProblemFile {
    PBCSystem system;
    std::optional<Control> control;
};

[[nodiscard]] inline Matrix matrix_from_json(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) throw input_error(name + " must be a nonempty array of rows");
    const std::size_t n = j.size();
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != n) throw input_error(name + " must be square");
        for (std::size_t c = 0; c < n; ++c) {
            if (!row[c].is_number()) throw input_error(name + " entries must be numbers");
            m(i, c) = row[c].get<double>();
        }
    }
    return m;
}

[[nodiscard]] inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json row = json::array();
        for (std::size_t c = 0; c < m.size(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

inline std::vector<double> numbers(const json& j, const std::string& name) {
    if (!j.is_array()) throw input_error(name + " must be an array");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number()) throw input_error(name + " entries must be numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline const json& field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw input_error(std::string("missing field \"") + key + "\"");
    return *it;
}

}  // namespace detail

/// Parses a control object; the control horizon is `horizon`.
[[nodiscard]] inline Control control_from_json(const json& j, double horizon) {
    if (!j.is_object()) throw input_error("control must be an object");
    const auto& type = detail::field(j, "type");
    if (!type.is_string()) throw input_error("control type must be a string");
    const auto t = type.get<std::string>();
    if (t == "bangbang") {
        const auto& r = detail::field(j, "r");
        if (!r.is_number() || (r.get<double>() != 1.0 && r.get<double>() != -1.0)) {
            throw input_error("bang-bang r must be 1 or -1");
        }
        std::vector<double> sw;
        if (j.contains("switch_times")) sw = detail::numbers(j["switch_times"], "switch_times");
        return BangBangControl(r.get<double>() > 0 ? 1 : -1, std::move(sw), horizon);
    }
    if (t == "piecewise") {
        auto bp = detail::numbers(detail::field(j, "breakpoints"), "breakpoints");
        auto vals = detail::numbers(detail::field(j, "values"), "values");
        if (bp.empty() || std::abs(bp.back() - horizon) > 1e-12 * std::max(1.0, horizon)) {
            throw invalid_control_error("last breakpoint must equal T");
        }
        bp.back() = horizon;
        return PiecewiseConstantControl(std::move(bp), std::move(vals));
    }
    throw input_error("unknown control type \"" + t + "\"");
}

[[nodiscard]] inline json to_json(const Control& u) {
    if (const auto* bb = std::get_if<BangBangControl>(&u)) {
        return {{"type", "bangbang"}, {"r", bb->first_sign()}, {"switch_times", bb->switch_times()}};
    }
    const auto& pw = std::get<PiecewiseConstantControl>(u);
    return {{"type", "piecewise"}, {"breakpoints", pw.breakpoints()}, {"values", pw.values()}};
}

[[nodiscard]] inline json to_json(const BangBangControl& u) { return to_json(Control{u}); }

/// System part only; control parsing errors surface from parse_control.
[[nodiscard]] inline PBCSystem system_from_json(const json& j) {
    if (!j.is_object()) throw input_error("document must be a JSON object");
    PBCSystem sys;
    sys.A = matrix_from_json(detail::field(j, "A"), "A");
    sys.B = matrix_from_json(detail::field(j, "B"), "B");
    const auto& t = detail::field(j, "T");
    if (!t.is_number()) throw input_error("T must be a number");
    sys.horizon = t.get<double>();
    return sys;
}

[[nodiscard]] inline ProblemFile problem_from_json(const json& j) {
    ProblemFile p{system_from_json(j), std::nullopt};
    if (j.contains("control")) p.control = control_from_json(j["control"], p.system.horizon);
    return p;
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw input_error(std::string("malformed JSON: ") + e.what());
    }
}

[[nodiscard]] inline json to_json(const PBCSystem& sys) {
    return {{"A", to_json(sys.A)}, {"B", to_json(sys.B)}, {"T", sys.horizon}};
}

[[nodiscard]] inline json to_json(const ValidationReport& r) {
    return {{"valid", r.valid()},
            {"dimensions_agree", r.dimensions_agree},
            {"finite", r.finite},
            {"horizon_positive", r.horizon_positive},
            {"a_plus_b_metzler", r.a_plus_b_metzler},
            {"a_minus_b_metzler", r.a_minus_b_metzler},
            {"problems", r.problems}};
}

[[nodiscard]] inline json to_json(const PerronPair& pp) {
    return {{"rho", pp.rho}, {"v", pp.v}, {"w", pp.w}, {"gap", pp.gap}, {"simple", pp.simple()}};
}

[[nodiscard]] inline json to_json(const MPReport& r) {
    json arcs = json::array();
    for (const auto& a : r.arc_margins) {
        arcs.push_back({{"start", a.start}, {"end", a.end}, {"value", a.value}, {"margin", a.margin},
                        {"samples", a.samples}});
    }
    json sw = json::array();
    for (const auto& s : r.switch_residuals) sw.push_back({{"time", s.time}, {"relative_abs_m", s.relative_abs_m}});
    json changes = json::array();
    for (const auto& c : r.samples.sign_changes) changes.push_back({{"time", c.time}, {"from", c.from}, {"to", c.to}});
    return {{"verdict", to_string(r.verdict)},
            {"tolerance", r.tolerance},
            {"max_abs_m", r.samples.max_abs},
            {"reference_scale", r.samples.reference_scale},
            {"m_start", r.samples.m_start},
            {"m_end", r.samples.m_end},
            {"periodicity_residual", r.samples.periodicity_residual()},
            {"grid_points", r.samples.times.size()},
            {"sign_changes", changes},
            {"arc_margins", arcs},
            {"switch_residuals", sw}};
}

[[nodiscard]] inline json to_json(const SingularTestResult& r) {
    return {{"value", r.value},         {"scale", r.scale},
            {"tolerance", r.tolerance}, {"bracket", to_json(r.bracket)},
            {"perron", to_json(r.perron)}, {"verdict", to_string(r.verdict)}};
}

[[nodiscard]] inline json to_json(const SecondOrderResult& r) {
    json coeffs = json::array();
    for (std::size_t i = 0; i < r.form_coeffs.size(); ++i)
        for (std::size_t j = i + 1; j < r.form_coeffs.size(); ++j)
            coeffs.push_back({{"i", i + 1}, {"j", j + 1}, {"c", r.form_coeffs(i, j)}});
    return {{"first_order_residual", r.first_order_residual},
            {"first_order_satisfied", r.first_order_satisfied},
            {"qk_basis", r.qk_basis},
            {"form_coeffs", coeffs},
            {"restricted_max_eig", r.restricted_max_eig},
            {"maximizer", r.maximizer},
            {"scale", r.scale},
            {"tolerance", r.tolerance},
            {"verdict", to_string(r.verdict)}};
}

[[nodiscard]] inline json to_json(const BangArcDecomposition& d) {
    json h = json::array();
    for (const auto& m : d.H) h.push_back(to_json(m));
    return {{"r", d.r}, {"durations", d.durations}, {"H", h}, {"p_t1", d.p1}, {"q_t1", d.q1}};
}

[[nodiscard]] inline json to_json(const SearchResult& r) {
    return {{"best_control", to_json(r.best_control)},
            {"horizon", r.best_control.horizon()},
            {"best_rho", r.best_rho},
            {"evaluations", r.evaluations},
            {"trace", r.trace}};
}

[[nodiscard]] inline json to_json(const RhoTSample& s) {
    return {{"t", s.horizon}, {"rho", s.rho}, {"rho_root", s.rate}, {"control", to_json(s.control)}};
}

[[nodiscard]] inline json to_json(const GASVerdict& v) {
    json curve = json::array();
    for (const auto& s : v.curve) curve.push_back(to_json(s));
    return {{"status", to_string(v.status)},
            {"witness", v.witness ? to_json(*v.witness) : json(nullptr)},
            {"curve", curve}};
}

/// "%.17g" formatting, enough digits to round-trip a double.
[[nodiscard]] inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

[[nodiscard]] inline std::string switching_csv(const SwitchingFunctionSamples& s) {
    std::ostringstream out;
    out << "t,m\n";
    for (std::size_t i = 0; i < s.times.size(); ++i)
        out << format_number(s.times[i]) << ',' << format_number(s.values[i]) << '\n';
    return out.str();
}

[[nodiscard]] inline std::string rho_t_csv(const GASVerdict& v) {
    std::ostringstream out;
    out << "t,rho,rho_root\n";
    for (const auto& s : v.curve)
        out << format_number(s.horizon) << ',' << format_number(s.rho) << ',' << format_number(s.rate) << '\n';
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << text;
    if (!out) throw input_error("failed writing " + path);
}

}  // namespace pbcs::io
