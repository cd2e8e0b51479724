#pragma once

// Regularization schedules alpha(t): positive, decreasing to zero, with a
// nondecreasing logarithmic derivative.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>

#include <fmt/format.h>

#include "gnflow/errors.hpp"

namespace gnflow {

/// alpha0 / (a + t)^m
struct InversePower {
    double alpha0;
    double a;
    double m;
};

/// alpha0 * exp(-beta t)
struct Exponential {
    double alpha0;
    double beta;
};

/// alpha0 * 2^(-beta t)
struct Base2 {
    double alpha0;
    double beta;
};

using ScheduleFamily = std::variant<InversePower, Exponential, Base2>;

namespace detail {

inline void require_positive(double value, std::string_view name, std::string_view family)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw InvalidArgument(fmt::format("{} schedule: parameter '{}' must be positive and finite, got {}",
                                          family, name, value));
    }
}

inline void check_family(const InversePower& p)
{
    require_positive(p.alpha0, "alpha0", "invpow");
    require_positive(p.a, "a", "invpow");
    require_positive(p.m, "m", "invpow");
}

inline void check_family(const Exponential& p)
{
    require_positive(p.alpha0, "alpha0", "exp");
    require_positive(p.beta, "beta", "exp");
}

inline void check_family(const Base2& p)
{
    require_positive(p.alpha0, "alpha0", "base2");
    require_positive(p.beta, "beta", "base2");
}

inline void require_nonnegative_time(double t)
{
    if (!(t >= 0.0)) {
        throw InvalidArgument(fmt::format("schedule evaluated at negative time t = {}", t));
    }
}

} // namespace detail

class Schedule {
public:
    /// Raw construction; parameters are checked by validate_rate_function().
    explicit Schedule(ScheduleFamily family) : family_(family) {}

    static Schedule inverse_power(double alpha0, double a, double m)
    {
        InversePower p{alpha0, a, m};
        detail::check_family(p);
        return Schedule(p);
    }

    static Schedule exponential(double alpha0, double beta)
    {
        Exponential p{alpha0, beta};
        detail::check_family(p);
        return Schedule(p);
    }

    static Schedule base2(double alpha0, double beta)
    {
        Base2 p{alpha0, beta};
        detail::check_family(p);
        return Schedule(p);
    }

    const ScheduleFamily& family() const noexcept { return family_; }

    double operator()(double t) const;

private:
    ScheduleFamily family_;
};

inline double alpha(const Schedule& s, double t)
{
    detail::require_nonnegative_time(t);
    return std::visit(
        [t](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, InversePower>) {
                return p.alpha0 * std::pow(p.a + t, -p.m);
            } else if constexpr (std::is_same_v<P, Exponential>) {
                return p.alpha0 * std::exp(-p.beta * t);
            } else {
                return p.alpha0 * std::exp2(-p.beta * t);
            }
        },
        s.family());
}

inline double Schedule::operator()(double t) const { return alpha(*this, t); }

/// d/dt ln alpha(t)
inline double log_derivative(const Schedule& s, double t)
{
    detail::require_nonnegative_time(t);
    return std::visit(
        [t](const auto& p) -> double {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, InversePower>) {
                return -p.m / (p.a + t);
            } else if constexpr (std::is_same_v<P, Exponential>) {
                return -p.beta;
            } else {
                return -p.beta * std::numbers::ln2;
            }
        },
        s.family());
}

struct RateFunctionVerdict {
    double alpha0;     ///< alpha(0)
    double logderiv0;  ///< alpha'(0)/alpha(0)
    /// True when alpha'/alpha is strictly increasing. Exponential and base-2
    /// schedules have a constant log-derivative and pass only weakly.
    bool strict;
};

/// Throws InvalidArgument when a parameter is nonpositive.
inline RateFunctionVerdict validate_rate_function(const Schedule& s)
{
    std::visit([](const auto& p) { detail::check_family(p); }, s.family());
    const bool strict = std::holds_alternative<InversePower>(s.family());
    return {alpha(s, 0.0), log_derivative(s, 0.0), strict};
}

/// Canonical string form, e.g. "exp:alpha0=0.1,beta=3.5". Round-trips through parse_schedule.
inline std::string to_string(const Schedule& s)
{
    return std::visit(
        [](const auto& p) -> std::string {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, InversePower>) {
                return fmt::format("invpow:alpha0={},a={},m={}", p.alpha0, p.a, p.m);
            } else if constexpr (std::is_same_v<P, Exponential>) {
                return fmt::format("exp:alpha0={},beta={}", p.alpha0, p.beta);
            } else {
                return fmt::format("base2:alpha0={},beta={}", p.alpha0, p.beta);
            }
        },
        s.family());
}

namespace detail {

inline std::string lowercase(std::string_view in)
{
    std::string out(in);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view in)
{
    const auto first = in.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = in.find_last_not_of(" \t");
    return std::string(in.substr(first, last - first + 1));
}

inline double parse_number(const std::string& text, const std::string& key)
{
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw InvalidArgument(fmt::format("schedule parameter '{}' is not a number: '{}'", key, text));
    }
    return value;
}

} // namespace detail

/// Parses "invpow:alpha0=..,a=..,m=..", "exp:alpha0=..,beta=..", "base2:alpha0=..,beta=..".
/// Case-insensitive. Unknown or missing keys and nonpositive values are rejected.
inline Schedule parse_schedule(std::string_view text)
{
    const std::string lower = detail::lowercase(detail::trim(text));
    const auto colon = lower.find(':');
    if (colon == std::string::npos) {
        throw InvalidArgument(fmt::format("malformed schedule '{}': expected '<family>:key=value,...'", text));
    }
    const std::string family = detail::trim(std::string_view(lower).substr(0, colon));

    std::map<std::string, double> params;
    std::string_view rest = std::string_view(lower).substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string item = detail::trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument(fmt::format("malformed schedule parameter '{}' in '{}'", item, text));
        }
        const std::string key = detail::trim(std::string_view(item).substr(0, eq));
        const std::string value = detail::trim(std::string_view(item).substr(eq + 1));
        if (!params.emplace(key, detail::parse_number(value, key)).second) {
            throw InvalidArgument(fmt::format("duplicate schedule parameter '{}'", key));
        }
    }

    auto take = [&](const char* key) {
        const auto it = params.find(key);
        if (it == params.end()) {
            throw InvalidArgument(fmt::format("{} schedule: missing parameter '{}'", family, key));
        }
        const double v = it->second;
        params.erase(it);
        return v;
    };
    auto finish = [&](Schedule s) {
        if (!params.empty()) {
            throw InvalidArgument(fmt::format("{} schedule: unknown parameter '{}'", family,
                                              params.begin()->first));
        }
        return s;
    };

    if (family == "invpow") {
        const double a0 = take("alpha0");
        const double a = take("a");
        const double m = take("m");
        return finish(Schedule::inverse_power(a0, a, m));
    }
    if (family == "exp") {
        const double a0 = take("alpha0");
        const double b = take("beta");
        return finish(Schedule::exponential(a0, b));
    }
    if (family == "base2") {
        const double a0 = take("alpha0");
        const double b = take("beta");
        return finish(Schedule::base2(a0, b));
    }
    throw InvalidArgument(fmt::format("unknown schedule family '{}' (expected invpow, exp or base2)", family));
}

} // namespace gnflow
