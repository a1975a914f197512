/// @file experiment.hpp
/// @brief Experiment driver: config file parsing, preconditioner and
/// deflation sweeps, bound verification per run, CSV artifacts, and
/// plot-script generation.

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wpdg/assemble.hpp"
#include "wpdg/deflation.hpp"
#include "wpdg/diagnostics.hpp"
#include "wpdg/gmres.hpp"
#include "wpdg/io.hpp"
#include "wpdg/operators.hpp"
#include "wpdg/pencil.hpp"
#include "wpdg/schwarz.hpp"

namespace wpdg {

struct ProblemSpec {
    enum class Source { generated, matrix_market } source = Source::generated;
    index_t k = 32;
    double c0 = 1.0;
    double nu = 1.0;
    double eta = 1.0;
    std::string m_file, n_file, b_file; // matrix_market source
};

struct PrecondSpec {
    enum class Kind { identity, inv_hermitian, schwarz } kind = Kind::identity;
    index_t n_subdomains = 16;
    index_t overlap = 1;
    enum class Coarse { none, partition_of_unity, file } coarse = Coarse::none;
    std::string coarse_file;
    index_t grid_nx = 0; // 0: take from the problem (loaded problems: n x 1)
    index_t grid_ny = 0;

    std::string label() const {
        switch (kind) {
        case Kind::identity: return "identity";
        case Kind::inv_hermitian: return "inv_hermitian";
        case Kind::schwarz: return "schwarz";
        }
        return "?";
    }
};

enum class WeightKind { preconditioner, identity };

struct ExperimentConfig {
    ProblemSpec problem;
    PrecondSpec precond;
    std::vector<index_t> ranks = {0};
    WeightKind weight = WeightKind::preconditioner;
    SolverConfig solver;
    std::uint64_t seed = 1234;
    std::string output_dir = "out";
    int threads = 1;
    bool strict = false;
    index_t theta_samples = 0; // 0: skip the sampled theta estimate

    void validate() const {
        for (index_t m : ranks)
            require(m >= 0 && m % 2 == 0, "config: deflation ranks must be even");
        solver.validate();
    }
};

struct RunRecord {
    index_t m = 0;
    SolveReport solve;
    BoundReport bound;
    double lambda1_abs = 0.0;
    double lambda_m_plus_1_abs = 0.0;
    bool bound_applicable = false; // weighted run with W = H
    std::string residual_csv;
};

// ---------------------------------------------------------------------------
// config file: flat key = value entries grouped by [section]

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    long lineno = 0;
    auto trim = [](std::string s) {
        auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
        while (!s.empty() && issp(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
        while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section", lineno);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

namespace detail {

inline double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + s + "'");
    }
}

inline index_t to_index(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<index_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + s + "'");
    }
}

inline std::string format_fixed(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

inline std::string format_compact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace detail

inline ExperimentConfig experiment_config_from_map(
    const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    if (auto v = get("problem.source")) {
        if (*v == "generated")
            cfg.problem.source = ProblemSpec::Source::generated;
        else if (*v == "matrix_market")
            cfg.problem.source = ProblemSpec::Source::matrix_market;
        else
            throw ConfigError("config: unknown problem.source '" + *v + "'");
    }
    if (auto v = get("problem.k")) cfg.problem.k = detail::to_index(*v, "problem.k");
    if (auto v = get("problem.c0")) cfg.problem.c0 = detail::to_double(*v, "problem.c0");
    if (auto v = get("problem.nu")) cfg.problem.nu = detail::to_double(*v, "problem.nu");
    if (auto v = get("problem.eta")) cfg.problem.eta = detail::to_double(*v, "problem.eta");
    if (auto v = get("problem.m_file")) cfg.problem.m_file = *v;
    if (auto v = get("problem.n_file")) cfg.problem.n_file = *v;
    if (auto v = get("problem.b_file")) cfg.problem.b_file = *v;

    if (auto v = get("preconditioner.kind")) {
        if (*v == "identity")
            cfg.precond.kind = PrecondSpec::Kind::identity;
        else if (*v == "inv_hermitian")
            cfg.precond.kind = PrecondSpec::Kind::inv_hermitian;
        else if (*v == "schwarz")
            cfg.precond.kind = PrecondSpec::Kind::schwarz;
        else
            throw ConfigError("config: unknown preconditioner.kind '" + *v + "'");
    }
    if (auto v = get("preconditioner.n_subdomains"))
        cfg.precond.n_subdomains = detail::to_index(*v, "preconditioner.n_subdomains");
    if (auto v = get("preconditioner.overlap"))
        cfg.precond.overlap = detail::to_index(*v, "preconditioner.overlap");
    if (auto v = get("preconditioner.coarse")) {
        if (*v == "none")
            cfg.precond.coarse = PrecondSpec::Coarse::none;
        else if (*v == "partition_of_unity")
            cfg.precond.coarse = PrecondSpec::Coarse::partition_of_unity;
        else if (*v == "file")
            cfg.precond.coarse = PrecondSpec::Coarse::file;
        else
            throw ConfigError("config: unknown preconditioner.coarse '" + *v + "'");
    }
    if (auto v = get("preconditioner.coarse_file")) cfg.precond.coarse_file = *v;
    if (auto v = get("preconditioner.grid_nx"))
        cfg.precond.grid_nx = detail::to_index(*v, "preconditioner.grid_nx");
    if (auto v = get("preconditioner.grid_ny"))
        cfg.precond.grid_ny = detail::to_index(*v, "preconditioner.grid_ny");

    if (auto v = get("deflation.ranks")) {
        cfg.ranks.clear();
        std::stringstream ss(*v);
        std::string tok;
        while (std::getline(ss, tok, ','))
            cfg.ranks.push_back(detail::to_index(tok, "deflation.ranks"));
        if (cfg.ranks.empty()) throw ConfigError("config: deflation.ranks is empty");
    }

    if (auto v = get("solver.tol")) cfg.solver.tol = detail::to_double(*v, "solver.tol");
    if (auto v = get("solver.max_iter"))
        cfg.solver.max_iter = detail::to_index(*v, "solver.max_iter");
    if (auto v = get("solver.restart"))
        cfg.solver.restart = detail::to_index(*v, "solver.restart");
    if (auto v = get("solver.weight")) {
        if (*v == "preconditioner")
            cfg.weight = WeightKind::preconditioner;
        else if (*v == "identity")
            cfg.weight = WeightKind::identity;
        else
            throw ConfigError("config: unknown solver.weight '" + *v + "'");
    }

    if (auto v = get("run.seed"))
        cfg.seed = static_cast<std::uint64_t>(detail::to_index(*v, "run.seed"));
    if (auto v = get("run.threads"))
        cfg.threads = static_cast<int>(detail::to_index(*v, "run.threads"));
    if (auto v = get("run.theta_samples"))
        cfg.theta_samples = detail::to_index(*v, "run.theta_samples");
    if (auto v = get("output.dir")) cfg.output_dir = *v;

    cfg.validate();
    return cfg;
}

inline ExperimentConfig experiment_config_from_file(const std::string& path) {
    return experiment_config_from_map(parse_config_file(path));
}

// ---------------------------------------------------------------------------
// problem bundle: M.mtx, N.mtx, b.txt, meta

inline void save_problem_bundle(const std::string& dir, const AssembledProblem& prob) {
    std::filesystem::create_directories(dir);
    save_matrix_market(dir + "/M.mtx", prob.m, MmSymmetry::symmetric);
    save_matrix_market(dir + "/N.mtx", prob.n_tilde, MmSymmetry::skew_symmetric);
    save_vector(dir + "/b.txt", prob.b);
    std::ofstream meta(dir + "/meta");
    meta << "c0 = " << detail::format_double(prob.c0) << "\n"
         << "nu = " << detail::format_double(prob.nu) << "\n"
         << "eta = " << detail::format_double(prob.eta) << "\n"
         << "grid_nx = " << prob.grid_nx << "\n"
         << "grid_ny = " << prob.grid_ny << "\n";
}

inline AssembledProblem load_problem(const ProblemSpec& spec) {
    if (spec.source == ProblemSpec::Source::generated)
        return model_problem(spec.k, spec.c0, spec.nu, spec.eta);
    require(!spec.m_file.empty() && !spec.n_file.empty(),
            "config: matrix_market source requires m_file and n_file");
    AssembledProblem prob;
    prob.m = load_matrix_market(spec.m_file);
    prob.n_tilde = load_matrix_market(spec.n_file);
    prob.eta = spec.eta;
    prob.c0 = spec.c0;
    prob.nu = spec.nu;
    require(prob.m.n_rows == prob.n_tilde.n_rows &&
                prob.m.n_cols == prob.n_tilde.n_cols,
            "loaded M and N differ in shape");
    if (!spec.b_file.empty())
        prob.b = load_vector(spec.b_file);
    else
        prob.b = Vector(static_cast<std::size_t>(prob.m.n_rows), 1.0);
    require(static_cast<index_t>(prob.b.size()) == prob.m.n_rows,
            "loaded b length mismatch");
    prob.grid_nx = prob.m.n_rows;
    prob.grid_ny = 1;
    return prob;
}

// ---------------------------------------------------------------------------
// sweep machinery

struct ExperimentSetup {
    AssembledProblem problem;
    LinearOperator a_op;
    LinearOperator h_op;
    std::vector<std::vector<index_t>> partition; // when schwarz
    KappaEstimate kappa;
    PencilEigenSet eigen_set; // of (eta N_tilde, M), sorted
};

/// Assembles the problem, preconditioner, kappa estimate, and the pencil
/// eigen set (dense below the cap, Lanczos above). A precomputed eigen
/// set for the same problem can be passed to skip the pencil solve.
inline ExperimentSetup prepare_experiment(const ExperimentConfig& cfg,
                                          const PencilEigenSet* precomputed = nullptr,
                                          const AssembledProblem* preassembled = nullptr) {
    cfg.validate();
    ExperimentSetup setup;
    setup.problem = preassembled ? *preassembled : load_problem(cfg.problem);
    const AssembledProblem& prob = setup.problem;
    const index_t n = prob.n_dofs();

    setup.a_op = csr_op(prob.full_matrix(), false, "A");

    switch (cfg.precond.kind) {
    case PrecondSpec::Kind::identity:
        setup.h_op = identity_op(n);
        break;
    case PrecondSpec::Kind::inv_hermitian:
        setup.h_op = inverse_hermitian_op(prob.m);
        break;
    case PrecondSpec::Kind::schwarz: {
        index_t nx = cfg.precond.grid_nx > 0 ? cfg.precond.grid_nx : prob.grid_nx;
        index_t ny = cfg.precond.grid_ny > 0 ? cfg.precond.grid_ny : prob.grid_ny;
        if (nx <= 0 || ny <= 0) {
            nx = n;
            ny = 1;
        }
        setup.partition = partition_structured(prob.m, nx, ny,
                                               cfg.precond.n_subdomains,
                                               cfg.precond.overlap);
        DenseMatrix coarse;
        if (cfg.precond.coarse == PrecondSpec::Coarse::partition_of_unity)
            coarse = pou_coarse_rows(setup.partition, n);
        else if (cfg.precond.coarse == PrecondSpec::Coarse::file)
            coarse = load_dense_matrix(cfg.precond.coarse_file);
        setup.h_op = additive_schwarz_op(prob.m, setup.partition, std::move(coarse));
        break;
    }
    }

    setup.kappa = estimate_kappa_HM(setup.h_op, prob.m, 1e-10, 200, cfg.seed + 1);

    if (precomputed) {
        setup.eigen_set = *precomputed;
        return setup;
    }

    index_t k_max = 0;
    for (index_t m : cfg.ranks) k_max = std::max(k_max, m);
    k_max = std::min(n, k_max + 2);

    if (prob.eta == 0.0) {
        // symmetric problem: the pencil is identically zero
        SparseMatrixCsr zero;
        zero.n_rows = zero.n_cols = n;
        zero.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
        setup.eigen_set = pencil_dense(zero, prob.m, k_max);
    } else {
        // eigenpairs of (eta N_tilde, M) are those of (N_tilde, M) with
        // mu and residual scaled by eta
        PencilEigenSet base;
        if (n <= 2000) {
            base = pencil_dense(prob.n_tilde, prob.m, k_max);
        } else {
            CholeskyFactor mfac(prob.m);
            base = pencil_lanczos(prob.m, mfac, prob.n_tilde, k_max, 1e-10,
                                  std::max<index_t>(400, 4 * k_max), cfg.seed + 2);
        }
        for (auto& p : base.pairs) {
            p.mu *= prob.eta;
            p.residual *= std::abs(prob.eta);
        }
        setup.eigen_set = std::move(base);
    }
    return setup;
}

namespace detail {

inline RunRecord execute_rank(const ExperimentConfig& cfg, const ExperimentSetup& s,
                              index_t m) {
    RunRecord rec;
    rec.m = m;
    DenseMatrix basis = real_deflation_basis(s.eigen_set, m);
    DeflationPair pair =
        m == 0 ? null_pair(s.a_op)
               : build_h_orthogonal(s.a_op, s.h_op, std::move(basis));

    TauValue tau = tau_of(s.eigen_set, m);
    rec.lambda1_abs = s.eigen_set.size() > 0
                          ? std::abs(s.eigen_set.pairs.front().mu)
                          : 0.0;
    rec.lambda_m_plus_1_abs = tau.value;

    if (cfg.weight == WeightKind::preconditioner) {
        auto [x, rep] = solve_full(s.a_op, s.problem.b, s.h_op, s.h_op, pair,
                                   cfg.solver);
        (void)x;
        rec.solve = std::move(rep);
        rec.bound = verify_run(rec.solve, s.kappa, tau.value, s.a_op, s.h_op,
                               s.h_op, pair, cfg.theta_samples, cfg.seed + 17);
        rec.bound_applicable = true;
    } else {
        auto [x, rep] = gmres_unweighted_left(s.a_op, s.problem.b, s.h_op, pair,
                                              cfg.solver);
        (void)x;
        rec.solve = std::move(rep);
        rec.bound.kappa_hm = s.kappa.kappa();
        rec.bound.lambda_min_hm = s.kappa.lambda_min;
        rec.bound.lambda_max_hm = s.kappa.lambda_max;
        rec.bound.tau = tau.value;
        rec.bound.theta_th = theta_th(std::max(rec.bound.kappa_hm, 1.0), tau.value);
        rec.bound.theta_exp = rec.solve.theta_exp;
        rec.bound_applicable = false;
    }
    return rec;
}

inline void write_residual_csv(const std::string& path, const SolveReport& rep) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw ConfigError("cannot open for writing: " + tmp);
        out << "iteration,residual,residual_h_euclidean\n";
        for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
            out << i << "," << format_fixed(rep.residual_history[i]) << ",";
            if (i < rep.h_euclidean_history.size())
                out << format_fixed(rep.h_euclidean_history[i]);
            out << "\n";
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

/// Runs the deflation-rank sweep: one pencil solve, then per rank a
/// deflation pair (Y = H A Z), a solve, and a bound report. Records come
/// back in config order; CSV artifacts land in cfg.output_dir.
inline std::vector<RunRecord>
run_experiment(const ExperimentConfig& cfg,
               const PencilEigenSet* precomputed = nullptr,
               const AssembledProblem* preassembled = nullptr) {
    ExperimentSetup setup = prepare_experiment(cfg, precomputed, preassembled);
    std::filesystem::create_directories(cfg.output_dir);
    if (!setup.partition.empty())
        write_partition(cfg.output_dir + "/partition.txt", setup.partition);

    std::vector<RunRecord> records(cfg.ranks.size());
    if (cfg.threads > 1) {
        std::vector<std::future<RunRecord>> futures;
        futures.reserve(cfg.ranks.size());
        for (index_t m : cfg.ranks)
            futures.push_back(std::async(std::launch::async, [&, m] {
                return detail::execute_rank(cfg, setup, m);
            }));
        for (std::size_t i = 0; i < futures.size(); ++i) records[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < cfg.ranks.size(); ++i)
            records[i] = detail::execute_rank(cfg, setup, cfg.ranks[i]);
    }

    for (auto& rec : records) {
        std::string name = "residuals_" + cfg.precond.label() + "_eta" +
                           detail::format_compact(setup.problem.eta) + "_m" +
                           std::to_string(rec.m) + ".csv";
        rec.residual_csv = name;
        detail::write_residual_csv(cfg.output_dir + "/" + name, rec.solve);
    }

    // summary with the fixed column set
    {
        std::string path = cfg.output_dir + "/summary.csv";
        std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp);
            out << "m,iterations,theta_th,theta_exp,kappa_HM,tau,converged\n";
            for (const auto& rec : records)
                out << rec.m << "," << rec.solve.iterations << ","
                    << detail::format_fixed(rec.bound.theta_th) << ","
                    << detail::format_fixed(rec.bound.theta_exp) << ","
                    << detail::format_fixed(rec.bound.kappa_hm) << ","
                    << detail::format_fixed(rec.bound.tau) << ","
                    << (rec.solve.converged ? 1 : 0) << "\n";
        }
        std::filesystem::rename(tmp, path);
    }
    return records;
}

/// Writes one python plot script per experiment directory, reading only
/// the emitted CSVs. Returns the script paths.
inline std::vector<std::string>
emit_plots(const std::vector<RunRecord>& records, const std::string& output_dir) {
    std::vector<std::string> scripts;
    if (records.empty()) return scripts;
    std::filesystem::create_directories(output_dir);
    std::string path = output_dir + "/plot_convergence.py";
    std::ofstream out(path);
    out << "import csv\n"
           "import matplotlib.pyplot as plt\n\n"
           "curves = [\n";
    for (const auto& rec : records)
        out << "    (\"m=" << rec.m << "\", \"" << rec.residual_csv << "\"),\n";
    out << "]\n"
           "for label, fname in curves:\n"
           "    it, res = [], []\n"
           "    with open(fname) as f:\n"
           "        for row in csv.DictReader(f):\n"
           "            it.append(int(row['iteration']))\n"
           "            res.append(float(row['residual']))\n"
           "    r0 = res[0] if res and res[0] > 0 else 1.0\n"
           "    plt.semilogy(it, [r / r0 for r in res], label=label)\n"
           "plt.xlabel('iteration')\n"
           "plt.ylabel('relative residual')\n"
           "plt.legend()\n"
           "plt.grid(True, which='both', alpha=0.3)\n"
           "plt.savefig('convergence.png', dpi=150, bbox_inches='tight')\n";
    scripts.push_back(path);
    return scripts;
}

struct SpectrumRow {
    index_t index;
    double mu_abs;
    double residual;
};

/// Sorted |mu| table of the problem pencil (top 200 entries at most),
/// written to spectrum.csv in the output directory.
inline std::vector<SpectrumRow> inspect_pencil(const ExperimentConfig& cfg) {
    AssembledProblem prob = load_problem(cfg.problem);
    const index_t n = prob.n_dofs();
    index_t k = std::min<index_t>(n, 200);

    PencilEigenSet set;
    if (prob.eta == 0.0) {
        SparseMatrixCsr zero;
        zero.n_rows = zero.n_cols = n;
        zero.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
        set = pencil_dense(zero, prob.m, k);
    } else if (n <= 2000) {
        set = pencil_dense(prob.n_tilde, prob.m, k);
        for (auto& p : set.pairs) {
            p.mu *= prob.eta;
            p.residual *= std::abs(prob.eta);
        }
    } else {
        CholeskyFactor mfac(prob.m);
        set = pencil_lanczos(prob.m, mfac, prob.n_tilde, k, 1e-10,
                             std::max<index_t>(400, 4 * k), cfg.seed + 2);
        for (auto& p : set.pairs) {
            p.mu *= prob.eta;
            p.residual *= std::abs(prob.eta);
        }
    }

    std::vector<SpectrumRow> rows;
    for (index_t i = 0; i < set.size(); ++i)
        rows.push_back({i + 1, std::abs(set.pairs[static_cast<std::size_t>(i)].mu),
                        set.pairs[static_cast<std::size_t>(i)].residual});

    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir + "/spectrum.csv");
    out << "index,mu_abs,residual\n";
    for (const auto& r : rows)
        out << r.index << "," << detail::format_fixed(r.mu_abs) << ","
            << detail::format_fixed(r.residual) << "\n";
    return rows;
}

} // namespace wpdg
