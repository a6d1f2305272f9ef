// adapod: snapshot generation, POD, reduced models and benchmark pipelines.

#include "adapod/bench.hpp"
#include "adapod/config.hpp"
#include "adapod/error.hpp"
#include "adapod/io.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace adapod;
namespace fs = std::filesystem;

namespace {

enum ExitCode
{
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_solver = 3,
    exit_io = 4,
};

struct Flags
{
    std::string config;
    std::optional<std::string> out;
    bool quick = false;
    std::optional<unsigned> threads;
    std::optional<double> mu;
    std::optional<std::size_t> r;
    bool static_mode = false;
    std::optional<std::string> strategy;
    std::string field;
    bool verbose = false;
};

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text(const std::string & path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(path, "cannot open config file");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void ensure_parent(const std::string & file)
{
    const fs::path parent = fs::path(file).parent_path();
    if (parent.empty())
        return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec)
        throw IoError(parent.string(), "cannot create directory: " + ec.message());
}

std::string out_file(const RunConfig & cfg, const std::string & name)
{
    const std::string f = (fs::path(cfg.out_dir) / name).string();
    ensure_parent(f);
    return f;
}

RunConfig make_config(const std::string & command, const Flags & flags)
{
    const std::string text = flags.config.empty() ? std::string() : read_text(flags.config);
    RunConfig cfg = parse_config(text, command, flags.quick, flags.config.empty() ? "<flags>" : flags.config);
    // flags override the file
    if (flags.out)
        cfg.out_dir = *flags.out;
    if (flags.threads)
    {
        if (*flags.threads == 0)
            throw ConfigError("threads must be positive");
        cfg.experiment.threads = *flags.threads;
    }
    if (flags.r)
        cfg.rom_dim = *flags.r;
    if (flags.static_mode)
        cfg.experiment.static_mode = true;
    if (flags.strategy)
        cfg.experiment.strategy = gramian_strategy_from_string(*flags.strategy);
    if (flags.verbose)
        cfg.verbose = true;
    validate_config(cfg);
    return cfg;
}

ProgressLog progress(const RunConfig & cfg)
{
    if (!cfg.verbose)
        return {};
    return [](const std::string & msg) { std::cerr << "[adapod] " << msg << '\n'; };
}

SnapshotSet adaptive_overlay_snapshots(const RunConfig & cfg, const ProgressLog & log)
{
    const SnapshotSet adaptive = generate_snapshots(cfg.experiment, cfg.experiment.adapt.tol, log);
    std::vector<const Mesh *> meshes;
    for (const auto & u : adaptive.snapshots)
        meshes.push_back(&u.space->mesh());
    const auto mesh = std::make_shared<const Mesh>(overlay(std::span<const Mesh * const>(meshes)));
    return generate_static_snapshots(cfg.experiment, mesh, log);
}

int cmd_snapshots(const RunConfig & cfg)
{
    const ProgressLog log = progress(cfg);
    const SnapshotSet snaps = cfg.experiment.static_mode ? adaptive_overlay_snapshots(cfg, log)
                                                         : generate_snapshots(cfg.experiment, cfg.experiment.adapt.tol, log);
    const std::string path = cfg.snapshots_file();
    ensure_parent(path);
    save_snapshots(path, snaps);
    std::cout << "snapshots " << snaps.size() << " mean_dof " << real(mean_dof(snaps)) << " -> " << path << '\n';
    return exit_ok;
}

int cmd_pod(const RunConfig & cfg)
{
    const SnapshotSet snaps = load_snapshots(cfg.snapshots_file());
    const PodBasis basis = compute_pod(snaps, cfg.experiment.strategy, cfg.experiment.eps_rank, cfg.experiment.threads);
    const std::string path = cfg.basis_file();
    ensure_parent(path);
    save_basis(path, basis);
    std::cout << "rank " << basis.rank << " of " << snaps.size() << " -> " << path << '\n';
    for (std::size_t r = 0; r < std::min<std::size_t>(basis.rank, 10); ++r)
        std::cout << "lambda_" << r + 1 << ' ' << real(basis.eigenvalues[Eigen::Index(r)]) << '\n';
    return exit_ok;
}

/// Burgers snapshots carry time levels; a mismatch means a wrong `problem`.
void check_problem(const RunConfig & cfg, const SnapshotSet & snaps)
{
    const bool timed = !snaps.labels.empty() && snaps.labels.front().k > 0;
    if (timed != (cfg.experiment.problem == ProblemKind::burgers))
        throw ConfigError(std::string("problem: snapshots in ") + cfg.snapshots_file() + " are "
                          + (timed ? "time-dependent; set problem = burgers" : "stationary; set problem = convection_diffusion"));
}

int cmd_rom(const RunConfig & cfg)
{
    const SnapshotSet snaps = load_snapshots(cfg.snapshots_file());
    check_problem(cfg, snaps);
    PodBasis basis = load_basis(cfg.basis_file());
    if (basis.gramian.rows() != static_cast<Eigen::Index>(snaps.size()))
        throw IoError(cfg.basis_file(), "basis was built from a different snapshot set");
    const std::size_t r = cfg.rom_dim ? cfg.rom_dim : basis.rank;
    if (r > basis.rank)
        throw ConfigError("R: " + std::to_string(r) + " exceeds the POD rank " + std::to_string(basis.rank));
    const std::string path = cfg.rom_file();
    ensure_parent(path);
    const auto & e = cfg.experiment;
    if (e.problem == ProblemKind::convection_diffusion)
    {
        EllipticProblem problem;
        problem.nu = e.nu;
        const RomStrategy rs = e.strategy == GramianStrategy::common ? RomStrategy::common : RomStrategy::snapshot_pairs;
        if (rs == RomStrategy::common)
            attach_common(basis, snaps, e.threads);
        save_rom(path, assemble_elliptic_rom(basis, snaps, r, rs, problem, e.threads));
    }
    else
    {
        attach_common(basis, snaps, e.threads);
        save_rom(path, assemble_burgers_rom(basis, burgers_initial, r, e.tau, e.nu));
    }
    std::cout << "rom " << to_string(e.problem) << " R " << r << " -> " << path << '\n';
    return exit_ok;
}

int cmd_solve(const RunConfig & cfg, const Flags & flags)
{
    if (!flags.mu)
        throw ConfigError("mu: --mu is required for solve");
    const RomFile rom = load_rom(cfg.rom_file());
    const std::size_t dim = rom.elliptic ? rom.elliptic->dim() : rom.burgers->dim();
    const std::size_t r = cfg.rom_dim ? cfg.rom_dim : dim;
    if (r > dim)
        throw ConfigError("R: " + std::to_string(r) + " exceeds the ROM dimension " + std::to_string(dim));

    Vector b;
    if (rom.elliptic)
        b = solve_elliptic_rom(*rom.elliptic, *flags.mu, r);
    else
    {
        const BurgersRom use = r == dim ? *rom.burgers : rom.burgers->truncated(r);
        ExperimentConfig e = cfg.experiment;
        e.tau = use.tau;
        b = integrate_burgers_rom(use, *flags.mu, e.levels()).coefficients.back();
    }
    for (Eigen::Index i = 0; i < b.size(); ++i)
        std::cout << real(b[i]) << '\n';

    if (!flags.field.empty())
    {
        const SnapshotSet snaps = load_snapshots(cfg.snapshots_file());
        PodBasis basis = load_basis(cfg.basis_file());
        if (basis.rank < r)
            throw IoError(cfg.basis_file(), "basis rank is smaller than R");
        attach_common(basis, snaps, cfg.experiment.threads);
        const auto space = build_space(basis.common_mesh, snaps.ip);
        const Vector values = basis.common_values.leftCols(Eigen::Index(r)) * b;
        ensure_parent(flags.field);
        save_mesh(flags.field + ".mesh", *basis.common_mesh);
        save_function(flags.field, FeFunction(space, space->restrict_values(values)));
        std::cerr << "field -> " << flags.field << " (mesh " << flags.field << ".mesh)\n";
    }
    return exit_ok;
}

int cmd_bench(const RunConfig & cfg)
{
    const std::string prefix = cfg.experiment.problem == ProblemKind::burgers ? "burgers" : "cd";
    const ExperimentResult res = run_experiment(cfg.experiment, progress(cfg));
    const std::string files[] = {out_file(cfg, prefix + "_adaptive.csv"), out_file(cfg, prefix + "_sweep.csv"),
                                 out_file(cfg, prefix + "_static.csv")};
    auto write = [](const std::string & path, auto && body) {
        std::ofstream out(path);
        if (!out)
            throw IoError(path, "cannot open for writing");
        body(out);
        out.flush();
        if (!out)
            throw IoError(path, "write failed");
    };
    write(files[0], [&](std::ostream & o) { write_error_csv(o, res.adaptive); });
    write(files[1], [&](std::ostream & o) { write_sweep_csv(o, res.sweep); });
    write(files[2], [&](std::ostream & o) { write_error_csv(o, res.static_table); });
    std::cout << "adaptive: rank " << res.adaptive.rank << ", mean dofs " << real(res.adaptive.mean_dof)
              << ", e_fem " << real(res.adaptive.e_fem) << '\n';
    for (const auto & f : files)
        std::cout << "wrote " << f << '\n';
    return exit_ok;
}

int dispatch(const std::string & command, const Flags & flags)
{
    const RunConfig cfg = make_config(command, flags);
    if (command == "snapshots")
        return cmd_snapshots(cfg);
    if (command == "pod")
        return cmd_pod(cfg);
    if (command == "rom")
        return cmd_rom(cfg);
    if (command == "solve")
        return cmd_solve(cfg, flags);
    return cmd_bench(cfg);
}

std::string defaults_help()
{
    std::string s = config_keys_help();
    s += "\nDefaults (bench-cd):\n" + format_experiment(experiment_defaults(ProblemKind::convection_diffusion, false));
    s += "\nDefaults (bench-burgers):\n" + format_experiment(experiment_defaults(ProblemKind::burgers, false));
    s += "\n--quick: 9 parameters (convection-diffusion); tau = 0.02, K = 61 and a looser tolerance (Burgers).\n";
    s += "Exit codes: 0 ok, 1 other failure, 2 config error, 3 solver failure, 4 I/O error.\n";
    return s;
}

} // namespace

int main(int argc, char ** argv)
{
    CLI::App app{"POD-Galerkin reduced-order models from adaptive finite element snapshots"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.footer(defaults_help());

    Flags flags;
    app.add_option("--config", flags.config, "key = value config file");
    app.add_option("--out", flags.out, "output directory");
    app.add_flag("--quick", flags.quick, "reduced-cost profile");
    app.add_option("--threads", flags.threads, "worker threads");
    app.add_option("--mu", flags.mu, "parameter value (solve)");
    app.add_option("-R", flags.r, "reduced dimension");
    app.add_flag("--static", flags.static_mode, "snapshots on the overlay of an adaptive run");
    app.add_option("--strategy", flags.strategy, "Gramian and ROM assembly strategy")
        ->check(CLI::IsMember({"common", "pairs"}));
    app.add_option("--field", flags.field, "write the reconstructed field (solve)");
    app.add_flag("-v,--verbose", flags.verbose, "progress on stderr");

    app.add_subcommand("snapshots", "generate adaptive (or --static) snapshots and save them");
    app.add_subcommand("pod", "compute the POD basis of saved snapshots");
    app.add_subcommand("rom", "assemble and save the reduced model");
    app.add_subcommand("solve", "evaluate the reduced model at --mu and print its coefficients");
    app.add_subcommand("bench-cd", "convection-diffusion benchmark, three CSV tables");
    app.add_subcommand("bench-burgers", "Burgers benchmark, three CSV tables");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError & e)
    {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try
    {
        return dispatch(command, flags);
    }
    catch (const ConfigError & e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const SolverError & e)
    {
        std::cerr << "solver error: " << e.what() << '\n';
        return exit_solver;
    }
    catch (const IoError & e)
    {
        std::cerr << "I/O error: " << e.what() << '\n';
        return exit_io;
    }
    catch (const std::invalid_argument & e)
    {
        std::cerr << "invalid input: " << e.what() << '\n';
        return exit_config;
    }
    catch (const std::exception & e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
}
