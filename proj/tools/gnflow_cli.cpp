// Command-line driver: single runs, table sweeps, certificates and schedule checks.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or validation error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "gnflow/gnflow.hpp"

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct SolveOptions {
    std::string schedule;
    double tau = 0.1;
    std::string stepper = "euler";
    int max_steps = 1000;
    std::string stop = "increase:3";
    int record_every = 1;
    std::size_t grid_n = 201;
    double depth = 2.0;
    double half_width = 1.0;
    double density = 1.0;
    double epsilon = 1e-3;
    std::string out;
    std::string trajectory;
};

struct TableOptions {
    std::string config;
    std::string out;
};

struct CertifyOptions {
    double n1 = 0.0;
    double n2 = 0.0;
    double vnorm = 0.0;
    double alpha0 = 0.0;
    double logderiv0 = 0.0;
    double radius = 0.0;
    std::optional<double> w0;
    bool constructed = false;
};

int run_solve(const SolveOptions& o)
{
    gnflow::gravimetry::Params params;
    params.grid = gnflow::Grid(o.half_width, o.grid_n);
    params.depth = o.depth;
    params.density = o.density;
    params.epsilon = o.epsilon;
    params.validate();

    const gnflow::Schedule schedule = gnflow::parse_schedule(o.schedule);
    gnflow::SolverConfig cfg;
    cfg.stepper = gnflow::parse_stepper(o.stepper);
    cfg.tau = o.tau;
    cfg.max_steps = o.max_steps;
    cfg.stop_rule = gnflow::parse_stop_rule(o.stop);
    cfg.record_every = o.record_every;
    cfg.validate();

    const auto model = gnflow::gravimetry::Model::synthetic(params);
    const auto report = gnflow::run_flow(model, schedule, gnflow::gravimetry::initial_guess(params), cfg,
                                         gnflow::gravimetry::model_interface_on(params.grid));

    if (o.out.empty()) {
        gnflow::write_run_summary(std::cout, report, cfg.stepper, schedule, cfg.tau);
    } else {
        std::ofstream out(o.out);
        if (!out) throw gnflow::Error(fmt::format("cannot open '{}' for writing", o.out));
        gnflow::write_run_summary(out, report, cfg.stepper, schedule, cfg.tau);
    }
    if (!o.trajectory.empty()) {
        gnflow::trajectory_export(report, o.trajectory);
    }
    if (report.diverged) {
        std::cerr << "note: run stopped early: " << report.diagnostic << '\n';
    }
    return 0;
}

int run_table_command(const TableOptions& o)
{
    auto spec = gnflow::load_experiment_spec(o.config);
    if (!o.out.empty()) spec.output_path = o.out;
    const auto rows = gnflow::run_table(spec);
    if (spec.output_path.empty()) {
        gnflow::write_table_csv(std::cout, rows);
    }
    return 0;
}

int run_certify(const CertifyOptions& o)
{
    gnflow::CertificateInputs in{o.n1, o.n2, o.vnorm, o.alpha0, o.logderiv0, o.radius, o.w0,
                                 o.constructed ? gnflow::SourceCondition::Constructed
                                               : gnflow::SourceCondition::Assumed};
    const auto cert = gnflow::build_certificate(in);
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : std::string{}; };
    std::cout << "quantity,value\n";
    std::cout << fmt::format("C1,{:.6g}\nC2,{:.6g}\nC3,{:.6g}\n", cert.c1, cert.c2, cert.c3);
    std::cout << fmt::format("rate_cap,{:.6g}\nc,{}\nu1,{}\nu2,{}\n", cert.rate_cap, opt(cert.c), opt(cert.u1),
                             opt(cert.u2));
    std::cout << "condition,status,value\n";
    for (const auto& v : cert.conditions) {
        std::cout << fmt::format("\"{}\",{},{:.6g}\n", v.name, gnflow::to_string(v.status), v.value);
    }
    std::cout << "overall," << (cert.passes() ? "pass" : "fail") << '\n';
    return 0;
}

int run_validate_schedule(const std::string& text)
{
    const auto schedule = gnflow::parse_schedule(text);
    const auto verdict = gnflow::validate_rate_function(schedule);
    std::cout << "schedule,alpha0,logderiv0,verdict\n";
    std::cout << fmt::format("\"{}\",{:.6g},{:.6g},{}\n", gnflow::to_string(schedule), verdict.alpha0,
                             verdict.logderiv0, verdict.strict ? "pass-strict" : "pass-weak");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Regularized Gauss-Newton flow solver and inverse-gravimetry experiments"};
    app.require_subcommand(1);

    SolveOptions solve;
    auto* solve_cmd = app.add_subcommand("solve", "one gravimetry run from the constant initial guess");
    solve_cmd->add_option("--schedule", solve.schedule, "e.g. exp:alpha0=0.1,beta=3.5")->required();
    solve_cmd->add_option("--tau", solve.tau, "step size");
    solve_cmd->add_option("--stepper", solve.stepper, "euler | rk");
    solve_cmd->add_option("--max-steps", solve.max_steps);
    solve_cmd->add_option("--stop", solve.stop, "fixed:N | floor:tol | increase:patience");
    solve_cmd->add_option("--record-every", solve.record_every);
    solve_cmd->add_option("--grid-n", solve.grid_n, "odd node count");
    solve_cmd->add_option("--H", solve.depth, "depth");
    solve_cmd->add_option("--l", solve.half_width, "half-width of the strip");
    solve_cmd->add_option("--rho", solve.density, "density contrast");
    solve_cmd->add_option("--epsilon", solve.epsilon, "admissibility margin below H");
    solve_cmd->add_option("--out", solve.out, "summary CSV (stdout if omitted)");
    solve_cmd->add_option("--trajectory", solve.trajectory, "per-step trajectory CSV");

    TableOptions table;
    auto* table_cmd = app.add_subcommand("table", "parameter sweep from a JSON config");
    table_cmd->add_option("--config", table.config, "JSON experiment config")->required();
    table_cmd->add_option("--out", table.out, "CSV output (overrides the config)");

    CertifyOptions certify;
    auto* certify_cmd = app.add_subcommand("certify", "convergence certificate constants and conditions");
    certify_cmd->add_option("--n1", certify.n1, "bound on |phi'|")->required();
    certify_cmd->add_option("--n2", certify.n2, "bound on |phi''|")->required();
    certify_cmd->add_option("--vnorm", certify.vnorm, "source norm |v|")->required();
    certify_cmd->add_option("--alpha0", certify.alpha0, "alpha(0)")->required();
    certify_cmd->add_option("--logderiv0", certify.logderiv0, "alpha'(0)/alpha(0)")->required();
    certify_cmd->add_option("--R", certify.radius, "ball radius")->required();
    certify_cmd->add_option("--w0", certify.w0, "|x0 - x_hat| / alpha(0)");
    certify_cmd->add_flag("--constructed", certify.constructed, "source representation built explicitly");

    std::string schedule_text;
    auto* validate_cmd = app.add_subcommand("validate-schedule", "check a schedule is a convergence rate function");
    validate_cmd->add_option("--schedule", schedule_text)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (*solve_cmd) return run_solve(solve);
        if (*table_cmd) return run_table_command(table);
        if (*certify_cmd) return run_certify(certify);
        if (*validate_cmd) return run_validate_schedule(schedule_text);
    } catch (const gnflow::InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}
