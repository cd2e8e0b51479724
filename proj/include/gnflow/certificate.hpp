#pragma once

// Convergence certificate for the regularized Gauss-Newton flow.
//
// With C1 = N1 N2 / 2, C2 = 1 - 2 N1 N2 |v| + alpha'(0)/alpha(0), C3 = |v|,
// the ratio w(t) = |x(t) - x_hat| / alpha(t) is dominated by the solution of
// the Riccati problem u' = C1 u^2 - C2 u + C3, u(0) = u0, which for
// u1 < u0 < u2 (the roots of the right-hand side) is
//
//   u(t) = u1 + (u2 - u1) / ((u2 - u0)/(u0 - u1) * exp(c t) + 1),  c = sqrt(C2^2 - 4 C1 C3).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gnflow/errors.hpp"
#include "gnflow/flow_solver.hpp"

namespace gnflow {

/// How the range condition x0 - x_hat in Ran(phi'* phi') is known to hold.
enum class SourceCondition {
    Assumed,      ///< not checkable for a general compact operator
    Constructed,  ///< v was built explicitly, e.g. in a synthetic instance
};

struct CertificateInputs {
    double n1;         ///< bound on |phi'(x)| in the ball
    double n2;         ///< bound on |phi''(x)| in the ball
    double v_norm;     ///< |v| with x_hat - x0 = phi'*(x_hat) phi'(x_hat) v
    double alpha0;     ///< alpha(0)
    double logderiv0;  ///< alpha'(0)/alpha(0)
    double radius;     ///< R
    std::optional<double> w0;  ///< |x0 - x_hat| / alpha(0), when known
    SourceCondition source = SourceCondition::Assumed;

    void validate() const
    {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw InvalidArgument(fmt::format("certificate input {} must be positive, got {}", name, v));
            }
        };
        positive(n1, "N1");
        positive(n2, "N2");
        positive(alpha0, "alpha0");
        positive(radius, "R");
        if (!(v_norm >= 0.0) || !std::isfinite(v_norm)) {
            throw InvalidArgument(fmt::format("certificate input |v| must be nonnegative, got {}", v_norm));
        }
        if (!std::isfinite(logderiv0)) {
            throw InvalidArgument("certificate input alpha'(0)/alpha(0) must be finite");
        }
        if (w0 && (!(*w0 >= 0.0) || !std::isfinite(*w0))) {
            throw InvalidArgument(fmt::format("certificate input w0 must be nonnegative, got {}", *w0));
        }
    }
};

enum class VerdictStatus { Pass, Fail, Assumed, Constructed, NotChecked };

inline std::string to_string(VerdictStatus s)
{
    switch (s) {
    case VerdictStatus::Pass: return "pass";
    case VerdictStatus::Fail: return "fail";
    case VerdictStatus::Assumed: return "assumed";
    case VerdictStatus::Constructed: return "constructed";
    case VerdictStatus::NotChecked: return "not-checked";
    }
    return "unknown";
}

struct ConditionVerdict {
    std::string name;
    VerdictStatus status;
    double value;  ///< the quantity that was compared (margin or left-hand side)
};

struct Certificate {
    double c1;
    double c2;
    double c3;
    double rate_cap;  ///< C2 / (2 C1)
    std::optional<double> c;
    std::optional<double> u1;
    std::optional<double> u2;
    std::vector<ConditionVerdict> conditions;

    /// True when no checked condition failed.
    bool passes() const
    {
        return std::none_of(conditions.begin(), conditions.end(),
                            [](const ConditionVerdict& v) { return v.status == VerdictStatus::Fail; });
    }

    bool has_roots() const { return u1.has_value(); }
};

inline Certificate build_certificate(const CertificateInputs& in)
{
    in.validate();
    const double nn = in.n1 * in.n2;
    Certificate cert{};
    cert.c1 = 0.5 * nn;
    cert.c2 = 1.0 - 2.0 * nn * in.v_norm + in.logderiv0;
    cert.c3 = in.v_norm;
    cert.rate_cap = cert.c2 / (2.0 * cert.c1);

    const bool decay_positive = cert.c2 > 0.0;
    const double discriminant = cert.c2 * cert.c2 - 2.0 * nn * in.v_norm;
    const bool roots_separated = discriminant > 0.0;
    const double radius_lhs = in.alpha0 / nn * cert.c2;

    auto verdict = [](bool ok) { return ok ? VerdictStatus::Pass : VerdictStatus::Fail; };
    cert.conditions.push_back({"C2 > 0", verdict(decay_positive), cert.c2});
    cert.conditions.push_back({"C2^2 - 2 N1 N2 |v| > 0", verdict(roots_separated), discriminant});
    cert.conditions.push_back({"alpha0 C2 / (N1 N2) <= R", verdict(radius_lhs <= in.radius), radius_lhs});
    if (in.w0) {
        cert.conditions.push_back({"w0 < C2 / (2 C1)", verdict(*in.w0 < cert.rate_cap), *in.w0});
    } else {
        cert.conditions.push_back({"w0 < C2 / (2 C1)", VerdictStatus::NotChecked, 0.0});
    }
    cert.conditions.push_back({"x0 - x_hat in Ran(phi'* phi')",
                               in.source == SourceCondition::Constructed ? VerdictStatus::Constructed
                                                                         : VerdictStatus::Assumed,
                               in.v_norm});

    if (decay_positive && roots_separated) {
        const double c = std::sqrt(discriminant);
        cert.c = c;
        // Cancellation-free pair: u1 u2 = C3/C1, u1 + u2 = C2/C1.
        cert.u2 = (cert.c2 + c) / (2.0 * cert.c1);
        cert.u1 = 2.0 * cert.c3 / (cert.c2 + c);
    }
    return cert;
}

inline double bound_curve(const Certificate& cert, double u0, double t)
{
    if (!cert.has_roots()) {
        throw InvalidArgument("bound curve needs a certificate with two separated positive-decay roots");
    }
    const double u1 = *cert.u1;
    const double u2 = *cert.u2;
    if (!(u0 > u1 && u0 < u2)) {
        throw InvalidArgument(fmt::format("bound curve start u0 = {} must lie in ({}, {})", u0, u1, u2));
    }
    if (!(t >= 0.0)) {
        throw InvalidArgument(fmt::format("bound curve evaluated at negative time {}", t));
    }
    const double ratio = (u2 - u0) / (u0 - u1);
    return u1 + (u2 - u1) / (ratio * std::exp(*cert.c * t) + 1.0);
}

/// Starting value max(1.01 w0, (u1 + u2)/2), kept strictly inside (u1, u2).
inline double default_u0(const Certificate& cert, std::optional<double> w0 = std::nullopt)
{
    if (!cert.has_roots()) {
        throw InvalidArgument("default u0 needs a certificate with roots");
    }
    const double u1 = *cert.u1;
    const double u2 = *cert.u2;
    double u0 = 0.5 * (u1 + u2);
    if (w0) {
        u0 = std::max(u0, 1.01 * *w0);
    }
    const double inset = 1e-9 * (u2 - u1);
    return std::clamp(u0, u1 + inset, u2 - inset);
}

/// A certificate paired with its starting value, evaluable as t -> u(t).
struct BoundCurve {
    Certificate cert;
    double u0;

    double operator()(double t) const { return bound_curve(cert, u0, t); }
};

struct ComparisonVerdict {
    bool passed;
    std::optional<int> first_violation;  ///< step index of the first w_k above the curve
    double min_margin;                   ///< min over samples of u(t_k) - w_k
};

/// Checks w_k <= u(t_k) + tolerance along a recorded trajectory.
inline ComparisonVerdict comparison_check(const Certificate& cert, const RunReport& report, double u0,
                                          double tolerance = 1e-9)
{
    if (report.trajectory.empty()) {
        throw InvalidArgument("comparison check needs a recorded trajectory");
    }
    ComparisonVerdict out{true, std::nullopt, std::numeric_limits<double>::infinity()};
    for (const auto& s : report.trajectory) {
        if (!s.w) {
            throw InvalidArgument("comparison check needs w samples; run the flow with a reference solution");
        }
        const double margin = bound_curve(cert, u0, s.t) - *s.w;
        out.min_margin = std::min(out.min_margin, margin);
        if (margin < -tolerance && out.passed) {
            out.passed = false;
            out.first_violation = s.step;
        }
    }
    return out;
}

} // namespace gnflow
