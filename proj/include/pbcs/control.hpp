#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pbcs/error.hpp"

namespace pbcs {

/// Arcs shorter than this are rejected (or dropped by the canonicalizing
/// constructors).
inline constexpr double min_arc_duration = 1e-12;

/// A constant-control segment of a control signal.
struct Arc {
    double value = 0.0;
    double duration = 0.0;
};

/**
 * Bang-bang control on [0, T]: u = r on (0, t1), -r on (t1, t2), ...
 * Switch times are the interior points t1 < ... < t_{k-1}; the convention
 * t0 = 0 and tk = T applies, so the control has k = switch_times.size() + 1
 * arcs with alternating signs.
 */
class BangBangControl {
public:
    BangBangControl(int first_sign, std::vector<double> switch_times, double horizon)
        : sign_(first_sign), switches_(std::move(switch_times)), horizon_(horizon) {
        if (sign_ != 1 && sign_ != -1) throw invalid_control_error("bang-bang sign must be +1 or -1");
        if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
            throw invalid_control_error("bang-bang horizon must be positive and finite");
        }
        double prev = 0.0;
        for (double t : switches_) {
            if (!std::isfinite(t) || t - prev < min_arc_duration) {
                throw invalid_control_error("switch times must be strictly increasing in (0, T) "
                                            "with arcs of at least 1e-12");
            }
            prev = t;
        }
        if (horizon_ - prev < min_arc_duration) {
            throw invalid_control_error("last switch time must lie before T");
        }
    }

    static BangBangControl constant(int sign, double horizon) { return {sign, {}, horizon}; }

    /**
     * Build from arc durations, dropping arcs shorter than min_arc_duration
     * and merging the neighbours they separated. The horizon is the sum of
     * the durations.
     */
    static BangBangControl from_durations(int first_sign, std::span<const double> durations) {
        std::vector<double> merged;
        int sign = first_sign;
        int merged_first = 0;
        int last = 0;
        for (double d : durations) {
            if (d < 0.0 || !std::isfinite(d)) throw invalid_control_error("negative arc duration");
            if (d >= min_arc_duration) {
                if (merged.empty()) {
                    merged_first = sign;
                    merged.push_back(d);
                } else if (sign == last) {
                    merged.back() += d;
                } else {
                    merged.push_back(d);
                }
                last = sign;
            }
            sign = -sign;
        }
        if (merged.empty()) throw invalid_control_error("all arcs have zero duration");
        std::vector<double> switches;
        double t = 0.0;
        for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
            t += merged[i];
            switches.push_back(t);
        }
        return {merged_first, std::move(switches), t + merged.back()};
    }

    [[nodiscard]] int first_sign() const noexcept { return sign_; }
    [[nodiscard]] const std::vector<double>& switch_times() const noexcept { return switches_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t arc_count() const noexcept { return switches_.size() + 1; }

    [[nodiscard]] int sign_of_arc(std::size_t i) const noexcept { return i % 2 == 0 ? sign_ : -sign_; }

    [[nodiscard]] std::vector<double> durations() const {
        std::vector<double> d;
        d.reserve(arc_count());
        double prev = 0.0;
        for (double t : switches_) {
            d.push_back(t - prev);
            prev = t;
        }
        d.push_back(horizon_ - prev);
        return d;
    }

    [[nodiscard]] std::vector<Arc> arcs() const {
        std::vector<Arc> out;
        const auto d = durations();
        for (std::size_t i = 0; i < d.size(); ++i) out.push_back({double(sign_of_arc(i)), d[i]});
        return out;
    }

    friend bool operator==(const BangBangControl&, const BangBangControl&) = default;

private:
    int sign_;
    std::vector<double> switches_;
    double horizon_;
};

/// Piecewise-constant control with values in [-1, 1] on the arcs between
/// consecutive breakpoints 0 = s0 < s1 < ... < sm = T.
class PiecewiseConstantControl {
public:
    PiecewiseConstantControl(std::vector<double> breakpoints, std::vector<double> values)
        : breaks_(std::move(breakpoints)), values_(std::move(values)) {
        if (breaks_.size() < 2 || values_.size() + 1 != breaks_.size()) {
            throw invalid_control_error("piecewise control needs m+1 breakpoints for m values");
        }
        if (breaks_.front() != 0.0) throw invalid_control_error("first breakpoint must be 0");
        for (std::size_t i = 1; i < breaks_.size(); ++i) {
            if (!std::isfinite(breaks_[i]) || breaks_[i] - breaks_[i - 1] < min_arc_duration) {
                throw invalid_control_error("breakpoints must be strictly increasing");
            }
        }
        for (double v : values_) {
            if (!(v >= -1.0 && v <= 1.0)) throw invalid_control_error("control values must lie in [-1, 1]");
        }
    }

    static PiecewiseConstantControl constant(double value, double horizon) {
        return {{0.0, horizon}, {value}};
    }

    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breaks_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] double horizon() const noexcept { return breaks_.back(); }

    [[nodiscard]] std::vector<Arc> arcs() const {
        std::vector<Arc> out;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            out.push_back({values_[i], breaks_[i + 1] - breaks_[i]});
        }
        return out;
    }

    friend bool operator==(const PiecewiseConstantControl&, const PiecewiseConstantControl&) = default;

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

using Control = std::variant<BangBangControl, PiecewiseConstantControl>;

[[nodiscard]] inline std::vector<Arc> arcs(const Control& u) {
    return std::visit([](const auto& c) { return c.arcs(); }, u);
}

[[nodiscard]] inline double horizon(const Control& u) {
    return std::visit([](const auto& c) { return c.horizon(); }, u);
}

/// Control value at time t; at an arc boundary the later arc wins.
[[nodiscard]] inline double value_at(const Control& u, double t) {
    double start = 0.0;
    const auto a = arcs(u);
    for (const auto& arc : a) {
        if (t < start + arc.duration) return arc.value;
        start += arc.duration;
    }
    return a.back().value;
}

/// Arc start times s0 = 0, s1, ..., plus the horizon as the last entry.
[[nodiscard]] inline std::vector<double> arc_boundaries(const Control& u) {
    std::vector<double> b{0.0};
    if (const auto* pw = std::get_if<PiecewiseConstantControl>(&u)) return pw->breakpoints();
    const auto& bb = std::get<BangBangControl>(u);
    b.insert(b.end(), bb.switch_times().begin(), bb.switch_times().end());
    b.push_back(bb.horizon());
    return b;
}

[[nodiscard]] inline PiecewiseConstantControl to_piecewise(const BangBangControl& u) {
    std::vector<double> breaks{0.0};
    breaks.insert(breaks.end(), u.switch_times().begin(), u.switch_times().end());
    breaks.push_back(u.horizon());
    std::vector<double> values;
    for (std::size_t i = 0; i < u.arc_count(); ++i) values.push_back(u.sign_of_arc(i));
    return {std::move(breaks), std::move(values)};
}

/// Throws invalid_control_error if any value is not exactly +1 or -1.
/// Neighbouring arcs with equal values are merged.
[[nodiscard]] inline BangBangControl to_bang_bang(const PiecewiseConstantControl& u) {
    const auto& v = u.values();
    for (double x : v) {
        if (x != 1.0 && x != -1.0) throw invalid_control_error("control is not bang-bang");
    }
    std::vector<double> switches;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] != v[i - 1]) switches.push_back(u.breakpoints()[i]);
    }
    return {v.front() > 0.0 ? 1 : -1, std::move(switches), u.horizon()};
}

/**
 * Rotate the arc sequence so that switching point `pivot` becomes time 0.
 * Switching points are indexed t0 = 0, t1, ..., t_{k-1}; pivot 0 is the
 * identity. If the old last and first arcs carry the same sign (odd k) they
 * fuse into one arc in the result.
 */
[[nodiscard]] inline BangBangControl cyclic_shift(const BangBangControl& u, std::size_t pivot) {
    if (pivot >= u.arc_count()) {
        throw bad_index_error("cyclic_shift: pivot " + std::to_string(pivot) + " out of range [0, " +
                              std::to_string(u.arc_count()) + ")");
    }
    if (pivot == 0) return u;
    const auto d = u.durations();
    std::vector<double> rotated(d.begin() + static_cast<std::ptrdiff_t>(pivot), d.end());
    // Keep alternation explicit: if the seam joins equal signs, insert a zero arc
    // so from_durations merges them.
    const int last_sign = u.sign_of_arc(d.size() - 1);
    if (last_sign == u.first_sign()) rotated.push_back(0.0);
    rotated.insert(rotated.end(), d.begin(), d.begin() + static_cast<std::ptrdiff_t>(pivot));
    return BangBangControl::from_durations(u.sign_of_arc(pivot), rotated);
}

/// Concatenate `repeats` copies of u, giving a control on [0, repeats * T].
[[nodiscard]] inline BangBangControl periodic_extension(const BangBangControl& u, std::size_t repeats) {
    if (repeats == 0) throw invalid_control_error("periodic_extension: repeats must be positive");
    const auto d = u.durations();
    const int last_sign = u.sign_of_arc(d.size() - 1);
    std::vector<double> all;
    for (std::size_t r = 0; r < repeats; ++r) {
        if (r > 0 && last_sign == u.first_sign()) all.push_back(0.0);
        all.insert(all.end(), d.begin(), d.end());
    }
    return BangBangControl::from_durations(u.first_sign(), all);
}

}  // namespace pbcs
