// Experiment driver for the WPD-GMRES laboratory.
//
// Subcommands:
//   run     sweep deflation ranks for one problem/preconditioner config
//   pencil  print and export the sorted pencil spectrum
//   bundle  assemble the model problem and write M.mtx, N.mtx, b.txt, meta
//
// Exit codes: 0 success, 2 non-convergence, 3 bound violation under
// --strict, 4 configuration error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wpdg/wpdg.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int threads = 0;
    bool strict = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_config = true) {
    auto* opt = cmd->add_option("--config", args.config_path, "experiment config file")
                    ->envname("WPDG_CONFIG");
    if (need_config) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory override")
        ->envname("WPDG_OUT");
    cmd->add_option("--seed", args.seed, "seed override")->envname("WPDG_SEED");
    cmd->add_option("--threads", args.threads, "parallel runs within a sweep")
        ->envname("WPDG_THREADS");
    cmd->add_flag("--strict", args.strict,
                  "nonzero exit on bound violation")
        ->envname("WPDG_STRICT");
}

wpdg::ExperimentConfig make_config(const CommonArgs& args) {
    wpdg::ExperimentConfig cfg = wpdg::experiment_config_from_file(args.config_path);
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (args.threads > 0) cfg.threads = args.threads;
    cfg.strict = args.strict;
    return cfg;
}

int cmd_run(const CommonArgs& args) {
    wpdg::ExperimentConfig cfg = make_config(args);
    auto records = wpdg::run_experiment(cfg);
    wpdg::emit_plots(records, cfg.output_dir);

    bool all_converged = true, bounds_ok = true;
    std::printf("%6s %10s %12s %12s %12s %10s %6s\n", "m", "iter", "theta_th",
                "theta_exp", "kappa_HM", "tau", "ok");
    for (const auto& rec : records) {
        bool ok = !rec.bound_applicable ||
                  (rec.bound.bound_satisfied && rec.bound.per_step_satisfied);
        std::printf("%6lld %10lld %12.4e %12.4e %12.4e %10.4f %6s\n",
                    static_cast<long long>(rec.m),
                    static_cast<long long>(rec.solve.iterations),
                    rec.bound.theta_th, rec.bound.theta_exp, rec.bound.kappa_hm,
                    rec.bound.tau, ok ? "yes" : "NO");
        all_converged = all_converged && rec.solve.converged;
        bounds_ok = bounds_ok && ok;
    }
    std::printf("artifacts: %s\n", cfg.output_dir.c_str());
    if (cfg.strict && !bounds_ok) return 3;
    if (!all_converged) return 2;
    return 0;
}

int cmd_pencil(const CommonArgs& args) {
    wpdg::ExperimentConfig cfg = make_config(args);
    auto rows = wpdg::inspect_pencil(cfg);
    std::printf("%6s %16s %14s\n", "index", "|mu|", "residual");
    for (const auto& r : rows)
        std::printf("%6lld %16.8e %14.4e\n", static_cast<long long>(r.index),
                    r.mu_abs, r.residual);
    std::printf("spectrum table: %s/spectrum.csv\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_bundle(const CommonArgs& args) {
    wpdg::ExperimentConfig cfg = make_config(args);
    wpdg::AssembledProblem prob = wpdg::load_problem(cfg.problem);
    wpdg::save_problem_bundle(cfg.output_dir, prob);
    std::printf("bundle written to %s (n = %lld)\n", cfg.output_dir.c_str(),
                static_cast<long long>(prob.n_dofs()));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted, preconditioned, deflated GMRES laboratory"};
    app.require_subcommand(1);

    CommonArgs run_args, pencil_args, bundle_args;
    auto* run = app.add_subcommand("run", "run a deflation-rank sweep");
    add_common(run, run_args);
    auto* pencil = app.add_subcommand("pencil", "inspect the pencil spectrum");
    add_common(pencil, pencil_args);
    auto* bundle = app.add_subcommand("bundle", "export the assembled problem");
    add_common(bundle, bundle_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (pencil->parsed()) return cmd_pencil(pencil_args);
        if (bundle->parsed()) return cmd_bundle(bundle_args);
    } catch (const wpdg::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 4;
    } catch (const wpdg::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
