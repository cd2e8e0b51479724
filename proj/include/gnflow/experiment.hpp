#pragma once

// Parameter sweeps over the gravimetry benchmark and their CSV output.
//
// A sweep is described by a flat JSON document, e.g.
//
//   {
//     "schedules": ["exp:alpha0=0.1,beta=2", "exp:alpha0=0.1,beta=3"],
//     "tau": [0.1],
//     "steppers": ["euler", "rk"],
//     "stop": "increase:3",
//     "replay_steps": [156, 100],
//     "max_steps": 1000,
//     "grid_n": 201, "l": 1, "H": 2, "rho": 1, "epsilon": 0.001,
//     "out": "table.csv",
//     "seed": 0
//   }
//
// Rows are (schedule, tau) pairs in schedule-major order.  When
// "replay_steps" is present it holds one step count per row and each row runs
// exactly that many steps instead of the "stop" rule.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "gnflow/certificate.hpp"
#include "gnflow/errors.hpp"
#include "gnflow/flow_solver.hpp"
#include "gnflow/gravimetry.hpp"
#include "gnflow/regularization.hpp"

namespace gnflow {

struct ExperimentSpec {
    gravimetry::Params problem;
    std::vector<Schedule> schedules;
    std::vector<double> tau_values;
    std::vector<Stepper> steppers{Stepper::Euler, Stepper::RungeKuttaMidpoint};
    StopRule stop_rule = FirstDiscrepancyIncrease{3};
    std::vector<int> replay_steps;
    int max_steps = 1000;
    std::string output_path;
    std::uint64_t seed = 0;  ///< carried for randomized suites; the gravimetry sweep is deterministic

    std::size_t row_count() const { return schedules.size() * tau_values.size(); }

    void validate() const
    {
        problem.validate();
        if (schedules.empty()) throw InvalidArgument("experiment needs at least one schedule");
        if (tau_values.empty()) throw InvalidArgument("experiment needs at least one tau value");
        if (steppers.empty()) throw InvalidArgument("experiment needs at least one stepper");
        for (const auto& s : schedules) {
            validate_rate_function(s);
        }
        for (double tau : tau_values) {
            if (!(tau > 0.0) || !std::isfinite(tau)) {
                throw InvalidArgument(fmt::format("tau values must be positive, got {}", tau));
            }
        }
        if (!replay_steps.empty() && replay_steps.size() != row_count()) {
            throw InvalidArgument(fmt::format("replay_steps has {} entries for {} rows", replay_steps.size(),
                                              row_count()));
        }
        for (int n : replay_steps) {
            if (n < 0) throw InvalidArgument("replay step counts must be nonnegative");
        }
        SolverConfig probe;
        probe.max_steps = max_steps;
        probe.stop_rule = stop_rule;
        probe.validate();
    }
};

struct StepperResult {
    int steps;
    double delta_sup;
    double delta_l2;
    double sigma;
    bool diverged;
};

struct TableRow {
    std::string schedule;
    double tau;
    std::optional<StepperResult> euler;
    std::optional<StepperResult> rk;
};

namespace detail {

inline std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string csv_number(double v) { return fmt::format("{:.6e}", v); }

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) {
        throw Error(fmt::format("cannot open '{}' for writing", path));
    }
    return out;
}

inline void finish_output(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out) {
        throw Error(fmt::format("failed writing '{}'", path));
    }
}

} // namespace detail

inline const char* table_header()
{
    return "schedule,tau,N_euler,delta_E_sup,delta_E_l2,sigma_E,diverged_E,"
           "N_rk,delta_R_sup,delta_R_l2,sigma_R,diverged_R";
}

inline void write_table_csv(std::ostream& out, const std::vector<TableRow>& rows)
{
    out << table_header() << '\n';
    auto cells = [](const std::optional<StepperResult>& r) -> std::string {
        if (!r) return ",,,,";
        return fmt::format("{},{},{},{},{}", r->steps, detail::csv_number(r->delta_sup),
                           detail::csv_number(r->delta_l2), detail::csv_number(r->sigma), r->diverged ? 1 : 0);
    };
    for (const auto& row : rows) {
        out << detail::csv_quote(row.schedule) << ',' << fmt::format("{}", row.tau) << ',' << cells(row.euler)
            << ',' << cells(row.rk) << '\n';
    }
}

inline StepperResult summarize(const RunReport& report)
{
    return {report.steps_taken, report.error_sup.value_or(0.0), report.error_l2.value_or(0.0), report.discrepancy,
            report.diverged};
}

/// Runs every (schedule, tau) row with each requested stepper from the constant
/// initial guess on synthesized data.  Rows run concurrently; output order
/// follows the spec.  Writes CSV to spec.output_path when it is set.
inline std::vector<TableRow> run_table(const ExperimentSpec& spec)
{
    spec.validate();
    std::optional<std::ofstream> out;
    if (!spec.output_path.empty()) {
        out.emplace(detail::open_output(spec.output_path));
    }

    const gravimetry::Model model = gravimetry::Model::synthetic(spec.problem);
    const GridFunction x0 = gravimetry::initial_guess(spec.problem);
    const GridFunction reference = gravimetry::model_interface_on(spec.problem.grid);

    auto run_row = [&](const Schedule& schedule, double tau, std::optional<int> replay) {
        TableRow row{to_string(schedule), tau, std::nullopt, std::nullopt};
        for (Stepper stepper : spec.steppers) {
            SolverConfig cfg;
            cfg.stepper = stepper;
            cfg.tau = tau;
            cfg.max_steps = spec.max_steps;
            cfg.stop_rule = spec.stop_rule;
            if (replay) {
                cfg.stop_rule = FixedSteps{*replay};
                cfg.max_steps = std::max(cfg.max_steps, std::max(*replay, 1));
            }
            const StepperResult r = summarize(run_flow(model, schedule, x0, cfg, reference));
            (stepper == Stepper::Euler ? row.euler : row.rk) = r;
        }
        return row;
    };

    std::vector<std::future<TableRow>> pending;
    std::size_t index = 0;
    for (const auto& schedule : spec.schedules) {
        for (double tau : spec.tau_values) {
            std::optional<int> replay;
            if (!spec.replay_steps.empty()) {
                replay = spec.replay_steps[index];
            }
            pending.push_back(std::async(std::launch::async, run_row, std::cref(schedule), tau, replay));
            ++index;
        }
    }
    std::vector<TableRow> rows;
    rows.reserve(pending.size());
    for (auto& f : pending) {
        rows.push_back(f.get());
    }

    if (out) {
        write_table_csv(*out, rows);
        detail::finish_output(*out, spec.output_path);
    }
    return rows;
}

// --- configuration -----------------------------------------------------------

inline ExperimentSpec spec_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object()) {
        throw InvalidArgument("experiment config must be a JSON object");
    }
    static const std::vector<std::string> known{"schedules", "tau",  "steppers", "stop", "replay_steps",
                                                "max_steps", "grid_n", "l",      "H",    "rho",
                                                "epsilon",   "out",    "seed"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw InvalidArgument(fmt::format("unknown experiment config key '{}'", key));
        }
    }

    try {
        ExperimentSpec spec;
        double l = doc.value("l", 1.0);
        const auto n = doc.value("grid_n", std::int64_t{201});
        if (n < 3) throw InvalidArgument(fmt::format("grid_n must be at least 3, got {}", n));
        spec.problem.grid = Grid(l, static_cast<std::size_t>(n));
        spec.problem.depth = doc.value("H", 2.0);
        spec.problem.density = doc.value("rho", 1.0);
        spec.problem.epsilon = doc.value("epsilon", 1e-3);

        for (const auto& s : doc.at("schedules")) {
            spec.schedules.push_back(parse_schedule(s.get<std::string>()));
        }
        const auto& tau = doc.at("tau");
        if (tau.is_array()) {
            spec.tau_values = tau.get<std::vector<double>>();
        } else {
            spec.tau_values = {tau.get<double>()};
        }
        if (doc.contains("steppers")) {
            spec.steppers.clear();
            for (const auto& s : doc.at("steppers")) {
                spec.steppers.push_back(parse_stepper(s.get<std::string>()));
            }
        }
        if (doc.contains("stop")) spec.stop_rule = parse_stop_rule(doc.at("stop").get<std::string>());
        if (doc.contains("replay_steps")) spec.replay_steps = doc.at("replay_steps").get<std::vector<int>>();
        spec.max_steps = doc.value("max_steps", 1000);
        spec.output_path = doc.value("out", std::string{});
        spec.seed = doc.value("seed", std::uint64_t{0});
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("malformed experiment config: {}", e.what()));
    }
}

inline nlohmann::json spec_to_json(const ExperimentSpec& spec)
{
    nlohmann::json doc;
    std::vector<std::string> schedules;
    for (const auto& s : spec.schedules) schedules.push_back(to_string(s));
    std::vector<std::string> steppers;
    for (auto s : spec.steppers) steppers.push_back(to_string(s));
    doc["schedules"] = schedules;
    doc["tau"] = spec.tau_values;
    doc["steppers"] = steppers;
    doc["stop"] = to_string(spec.stop_rule);
    if (!spec.replay_steps.empty()) doc["replay_steps"] = spec.replay_steps;
    doc["max_steps"] = spec.max_steps;
    doc["grid_n"] = spec.problem.grid.node_count();
    doc["l"] = spec.problem.half_width();
    doc["H"] = spec.problem.depth;
    doc["rho"] = spec.problem.density;
    doc["epsilon"] = spec.problem.epsilon;
    if (!spec.output_path.empty()) doc["out"] = spec.output_path;
    doc["seed"] = spec.seed;
    return doc;
}

inline ExperimentSpec load_experiment_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument(fmt::format("cannot read experiment config '{}'", path));
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("experiment config '{}' is not valid JSON: {}", path, e.what()));
    }
    return spec_from_json(doc);
}

// --- single runs -------------------------------------------------------------

inline const char* run_summary_header() { return "stepper,schedule,tau,N,delta_sup,delta_l2,sigma,diverged"; }

inline void write_run_summary(std::ostream& out, const RunReport& report, Stepper stepper,
                              const Schedule& schedule, double tau)
{
    out << run_summary_header() << '\n';
    out << to_string(stepper) << ',' << detail::csv_quote(to_string(schedule)) << ',' << fmt::format("{}", tau)
        << ',' << report.steps_taken << ',' << (report.error_sup ? detail::csv_number(*report.error_sup) : "")
        << ',' << (report.error_l2 ? detail::csv_number(*report.error_l2) : "") << ','
        << detail::csv_number(report.discrepancy) << ',' << (report.diverged ? 1 : 0) << '\n';
}

/// Columns: k, t, alpha, sigma, w, sup_error and, when a bound is given, the
/// certificate curve u(t_k).  Missing quantities are left empty.
inline void write_trajectory(std::ostream& out, const RunReport& report,
                             const std::optional<BoundCurve>& bound = std::nullopt)
{
    out << "k,t,alpha,sigma,w,sup_error" << (bound ? ",bound" : "") << '\n';
    for (const auto& s : report.trajectory) {
        out << s.step << ',' << detail::csv_number(s.t) << ',' << detail::csv_number(s.alpha) << ','
            << detail::csv_number(s.sigma) << ',' << (s.w ? detail::csv_number(*s.w) : "") << ','
            << (s.error_sup ? detail::csv_number(*s.error_sup) : "");
        if (bound) {
            out << ',' << detail::csv_number((*bound)(s.t));
        }
        out << '\n';
    }
}

inline void trajectory_export(const RunReport& report, const std::string& path,
                              const std::optional<BoundCurve>& bound = std::nullopt)
{
    auto out = detail::open_output(path);
    write_trajectory(out, report, bound);
    detail::finish_output(out, path);
}

} // namespace gnflow
