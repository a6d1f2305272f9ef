#include "adapod/bench.hpp"

#include "adapod/error.hpp"
#include "adapod/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace adapod {

namespace {

void say(const ProgressLog & log, const std::string & msg)
{
    if (log)
        log(msg);
}

std::string format_label(const SnapshotLabel & l)
{
    std::ostringstream s;
    s << "mu=" << l.mu;
    if (l.k)
        s << " k=" << l.k;
    return s.str();
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

/// Relative error over the training set for reconstructions u^R_n = sum_m
/// c(m, n) u_m: ||u_n - u^R_n||^2 = d^T G d with d = e_n - c(:, n).
double combination_error(const Matrix & gramian, const Matrix & c)
{
    const Matrix d = Matrix::Identity(gramian.rows(), gramian.cols()) - c;
    const Matrix gd = gramian * d;
    double num = 0.0;
    for (Eigen::Index n = 0; n < d.cols(); ++n)
        num += std::max(0.0, d.col(n).dot(gd.col(n)));
    const double den = gramian.trace();
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

std::vector<std::size_t> clip_r(const std::vector<std::size_t> & values, std::size_t rank)
{
    std::vector<std::size_t> out;
    for (std::size_t r : values)
        if (r >= 1 && r <= rank)
            out.push_back(r);
    return out;
}

} // namespace

double burgers_initial(double x, double y)
{
    constexpr double pi = std::numbers::pi;
    return 0.5 + 0.5 * std::sin((x - y - 0.75) * pi) * std::sin((x + y + 0.25) * pi);
}

std::string_view to_string(ProblemKind p)
{
    return p == ProblemKind::convection_diffusion ? "convection_diffusion" : "burgers";
}

ExperimentConfig ExperimentConfig::convection_diffusion_defaults(bool quick)
{
    ExperimentConfig c;
    c.problem = ProblemKind::convection_diffusion;
    c.n_params = quick ? 9 : 33;
    c.nu = 0.01;
    c.nx = c.ny = 4;
    c.adapt.tol = 1e-3;
    c.adapt.max_dof = 50000;
    c.adapt.max_rounds = 60;
    c.r_star = 10;
    for (std::size_t r = 1; r <= 20; ++r)
        c.r_values.push_back(r);
    c.strategy = GramianStrategy::pairwise;
    return c;
}

ExperimentConfig ExperimentConfig::burgers_defaults(bool quick)
{
    ExperimentConfig c;
    c.problem = ProblemKind::burgers;
    c.mus = {0.0, 0.5, 1.0};
    c.nu = 0.001;
    c.tau = quick ? 0.02 : 0.005;
    c.t_end = 1.2;
    c.nx = 8;
    c.ny = 4;
    c.adapt.tol = quick ? 3e-5 : 1e-5;
    c.adapt.max_dof = 5000;
    c.adapt.max_rounds = 60;
    c.r_star = 64;
    c.r_values = {1, 2, 4, 8, 16, 32, 48, 64, 80, 96};
    c.strategy = GramianStrategy::common;
    return c;
}

int ExperimentConfig::levels() const
{
    return static_cast<int>(std::lround(t_end / tau)) + 1;
}

std::vector<double> ExperimentConfig::training_parameters() const
{
    if (problem == ProblemKind::burgers)
        return mus;
    std::vector<double> out(n_params);
    for (std::size_t i = 0; i < n_params; ++i)
        out[i] = n_params == 1 ? mu_min : mu_min + (mu_max - mu_min) * double(i) / double(n_params - 1);
    return out;
}

Mesh ExperimentConfig::initial_mesh() const
{
    if (problem == ProblemKind::burgers)
        return Mesh::structured(nx, ny, {0.0, 0.0, 1.0, 0.5}, SideTags::periodic_x());
    return Mesh::structured(nx, ny, {0.0, 0.0, 1.0, 1.0}, SideTags::all(BoundaryTag::dirichlet));
}

InnerProduct ExperimentConfig::inner_product() const
{
    return problem == ProblemKind::burgers ? InnerProduct::h1_full : InnerProduct::h1_semi;
}

void ExperimentConfig::validate() const
{
    if (!(nu > 0.0))
        throw ConfigError("nu must be positive");
    if (problem == ProblemKind::convection_diffusion)
    {
        if (n_params < 2)
            throw ConfigError("params must be at least 2");
        if (!(mu_min <= mu_max))
            throw ConfigError("mu_min must not exceed mu_max");
    }
    else
    {
        if (mus.size() < 2)
            throw ConfigError("mus must list at least 2 parameters");
        if (!(tau > 0.0))
            throw ConfigError("tau must be positive");
        if (!(t_end > 0.0))
            throw ConfigError("t_end must be positive");
        if (std::abs(t_end / tau - std::round(t_end / tau)) > 1e-9 * (t_end / tau))
            throw ConfigError("tau must divide t_end");
    }
    if (nx < 1)
        throw ConfigError("nx must be positive");
    if (ny < 1)
        throw ConfigError("ny must be positive");
    if (!(reference_factor > 0.0 && reference_factor < 1.0))
        throw ConfigError("reference_factor must lie in (0, 1)");
    if (r_values.empty())
        throw ConfigError("r_values must not be empty");
    if (r_star == 0)
        throw ConfigError("r_star must be positive");
    if (sweep_factors.empty())
        throw ConfigError("sweep must not be empty");
    for (double f : sweep_factors)
        if (!(f > 0.0))
            throw ConfigError("sweep entries must be positive");
    if (!(eps_rank > 0.0 && eps_rank < 1.0))
        throw ConfigError("eps_rank must lie in (0, 1)");
    if (!std::isfinite(adapt.tol))
        throw ConfigError("tol must be finite");
    adapt.validate();
}

SnapshotSet generate_snapshots(const ExperimentConfig & cfg, double tol, const ProgressLog & log)
{
    cfg.validate();
    AdaptConfig adapt = cfg.adapt;
    adapt.tol = tol;
    const Mesh initial = cfg.initial_mesh();
    const std::vector<double> mus = cfg.training_parameters();
    const InnerProduct ip = cfg.inner_product();

    SnapshotSet set;
    set.ip = ip;
    if (cfg.problem == ProblemKind::convection_diffusion)
    {
        EllipticProblem problem;
        problem.nu = cfg.nu;
        std::vector<FeFunction> out(mus.size());
        parallel_for(mus.size(), cfg.threads, [&](std::size_t i) {
            try
            {
                out[i] = adaptive_solve_elliptic(initial, mus[i], problem, adapt, ip).solution;
            }
            catch (const SolverError & e)
            {
                throw SolverError(std::string(e.what()) + " (mu=" + std::to_string(mus[i]) + ")", e.residual());
            }
        });
        for (std::size_t i = 0; i < mus.size(); ++i)
        {
            set.snapshots.push_back(std::move(out[i]));
            set.labels.push_back({mus[i], 0});
        }
        say(log, "snapshots tol=" + fmt(tol) + " mean_dof=" + std::to_string(mean_dof(set)));
        return set;
    }

    const int levels = cfg.levels();
    std::vector<std::vector<FeFunction>> traj(mus.size());
    parallel_for(mus.size(), cfg.threads, [&](std::size_t p) {
        const double mu = mus[p];
        int k = 1;
        try
        {
            AdaptResult step = adaptive_projection(
                initial, [mu](double x, double y) { return mu * burgers_initial(x, y); }, cfg.nu, adapt, ip);
            traj[p].push_back(step.solution);
            for (k = 2; k <= levels; ++k)
            {
                step = adaptive_burgers_step(step.solution, cfg.tau, cfg.nu, adapt);
                traj[p].push_back(step.solution);
            }
        }
        catch (const SolverError & e)
        {
            throw SolverError(std::string(e.what()) + " (mu=" + std::to_string(mu) + ", k=" + std::to_string(k) + ")",
                              e.residual());
        }
    });
    for (std::size_t p = 0; p < mus.size(); ++p)
        for (int k = 0; k < levels; ++k)
        {
            set.snapshots.push_back(std::move(traj[p][static_cast<std::size_t>(k)]));
            set.labels.push_back({mus[p], k + 1});
        }
    say(log, "snapshots tol=" + fmt(tol) + " mean_dof=" + std::to_string(mean_dof(set)));
    return set;
}

SnapshotSet generate_static_snapshots(const ExperimentConfig & cfg, std::shared_ptr<const Mesh> mesh,
                                      const ProgressLog & log)
{
    cfg.validate();
    const SpacePtr space = build_space(std::move(mesh), cfg.inner_product());
    const std::vector<double> mus = cfg.training_parameters();
    SnapshotSet set;
    set.ip = cfg.inner_product();
    if (cfg.problem == ProblemKind::convection_diffusion)
    {
        std::vector<FeFunction> out(mus.size());
        parallel_for(mus.size(), cfg.threads, [&](std::size_t i) {
            const auto v = EllipticProblem::velocity(mus[i]);
            out[i] = solve_elliptic(space, v[0], v[1], cfg.nu, [](double, double) { return 1.0; });
        });
        for (std::size_t i = 0; i < mus.size(); ++i)
        {
            set.snapshots.push_back(std::move(out[i]));
            set.labels.push_back({mus[i], 0});
        }
    }
    else
    {
        const int levels = cfg.levels();
        std::vector<std::vector<FeFunction>> traj(mus.size());
        parallel_for(mus.size(), cfg.threads, [&](std::size_t p) {
            const double mu = mus[p];
            FeFunction u = l2_projection(space, [mu](double x, double y) { return mu * burgers_initial(x, y); });
            traj[p].push_back(u);
            for (int k = 2; k <= levels; ++k)
            {
                u = burgers_fom_step(u, space, cfg.tau, cfg.nu);
                traj[p].push_back(u);
            }
        });
        for (std::size_t p = 0; p < mus.size(); ++p)
            for (int k = 0; k < levels; ++k)
            {
                set.snapshots.push_back(std::move(traj[p][static_cast<std::size_t>(k)]));
                set.labels.push_back({mus[p], k + 1});
            }
    }
    say(log, "static snapshots n_dof=" + std::to_string(space->n_dof()));
    return set;
}

double error_pod(const PodBasis & basis, std::size_t r)
{
    const double total = truncation_energy(basis, 0);
    if (total <= 0.0)
        return 0.0;
    return std::sqrt(truncation_energy(basis, r) / total);
}

double error_rom(const EllipticRom & rom, const PodBasis & basis, const SnapshotSet & snaps, std::size_t r)
{
    const auto n = static_cast<Eigen::Index>(snaps.size());
    if (basis.gramian.rows() != n)
        throw std::invalid_argument("basis does not match the snapshot set");
    if (r > rom.dim())
        throw std::invalid_argument("ROM dimension smaller than requested");
    Matrix c = Matrix::Zero(n, n);
    if (r > 0)
    {
        const EllipticRom use = rom.truncated(r);
        const Matrix coeff = basis.coefficients.topRows(static_cast<Eigen::Index>(r));
        for (Eigen::Index i = 0; i < n; ++i)
            c.col(i) = coeff.transpose() * solve_elliptic_rom(use, snaps.labels[static_cast<std::size_t>(i)].mu);
    }
    return combination_error(basis.gramian, c);
}

double error_rom(const BurgersRom & rom, const PodBasis & basis, const SnapshotSet & snaps, std::size_t r,
                 int levels)
{
    const auto n = static_cast<Eigen::Index>(snaps.size());
    if (basis.gramian.rows() != n)
        throw std::invalid_argument("basis does not match the snapshot set");
    if (levels < 1 || n % levels != 0)
        throw std::invalid_argument("snapshot count is not a multiple of the number of time levels");
    if (r > rom.dim())
        throw std::invalid_argument("ROM dimension smaller than requested");
    Matrix c = Matrix::Zero(n, n);
    if (r > 0)
    {
        const BurgersRom use = r == rom.dim() ? rom : rom.truncated(r);
        const Matrix coeff = basis.coefficients.topRows(static_cast<Eigen::Index>(r));
        for (Eigen::Index start = 0; start < n; start += levels)
        {
            const SnapshotLabel & label = snaps.labels[static_cast<std::size_t>(start)];
            if (label.k != 1)
                throw std::invalid_argument("Burgers snapshots must start each trajectory at k=1");
            const RomTrajectory traj = integrate_burgers_rom(use, label.mu, levels);
            for (int k = 0; k < levels; ++k)
                c.col(start + k) = coeff.transpose() * traj.coefficients[static_cast<std::size_t>(k)];
        }
    }
    return combination_error(basis.gramian, c);
}

double error_fem(const SnapshotSet & snaps, const SnapshotSet & reference, unsigned threads)
{
    if (snaps.size() != reference.size())
        throw std::invalid_argument("reference set has a different number of snapshots");
    for (std::size_t n = 0; n < snaps.size(); ++n)
    {
        const auto & a = snaps.labels[n];
        const auto & b = reference.labels[n];
        if (a.k != b.k || std::abs(a.mu - b.mu) > 1e-12)
            throw std::invalid_argument("label mismatch at snapshot " + std::to_string(n) + ": " + format_label(a)
                                        + " vs " + format_label(b));
    }
    std::vector<double> num(snaps.size()), den(snaps.size());
    parallel_for(snaps.size(), threads, [&](std::size_t n) {
        const FeFunction & u = snaps.snapshots[n];
        const FeFunction & ref = reference.snapshots[n];
        const Mesh & mu = u.space->mesh();
        const Mesh & mr = ref.space->mesh();
        const Mesh common = overlay(mr, mu);
        const Vector pr = prolongation(mr, common).apply(ref.vertex_values());
        const Vector diff = pr - prolongation(mu, common).apply(u.vertex_values());
        const SparseMatrix k = inner_product_matrix(common, snaps.ip);
        num[n] = diff.dot(k * diff);
        den[n] = pr.dot(k * pr);
    });
    double a = 0.0, b = 0.0;
    for (std::size_t n = 0; n < num.size(); ++n)
    {
        a += num[n];
        b += den[n];
    }
    return b > 0.0 ? std::sqrt(a / b) : 0.0;
}

void attach_common(PodBasis & basis, const SnapshotSet & snaps, unsigned threads)
{
    if (basis.has_common())
        return;
    const CommonSpace common = build_common_space(snaps, threads);
    basis.common_mesh = common.mesh;
    basis.common_values = basis_on_common(basis, common, basis.rank);
}

std::size_t ReducedModel::dim() const
{
    if (elliptic)
        return elliptic->dim();
    if (burgers)
        return burgers->dim();
    return 0;
}

ReducedModel build_reduced_model(const ExperimentConfig & cfg, const SnapshotSet & snaps, std::size_t r_max)
{
    ReducedModel model;
    model.basis = compute_pod(snaps, cfg.strategy, cfg.eps_rank, cfg.threads);
    const std::size_t r = std::min(r_max, model.basis.rank);
    if (r == 0)
        return model;
    if (cfg.problem == ProblemKind::convection_diffusion)
    {
        EllipticProblem problem;
        problem.nu = cfg.nu;
        const RomStrategy rs = cfg.strategy == GramianStrategy::common ? RomStrategy::common
                                                                        : RomStrategy::snapshot_pairs;
        model.elliptic = assemble_elliptic_rom(model.basis, snaps, r, rs, problem, cfg.threads);
    }
    else
    {
        attach_common(model.basis, snaps, cfg.threads);
        model.burgers = assemble_burgers_rom(model.basis, burgers_initial, r, cfg.tau, cfg.nu);
    }
    return model;
}

double model_error(const ExperimentConfig & cfg, const ReducedModel & model, const SnapshotSet & snaps,
                   std::size_t r)
{
    if (r == 0)
        return 1.0;
    if (cfg.problem == ProblemKind::convection_diffusion)
        return error_rom(*model.elliptic, model.basis, snaps, r);
    return error_rom(*model.burgers, model.basis, snaps, r, cfg.levels());
}

double mean_dof(const SnapshotSet & snaps)
{
    if (snaps.snapshots.empty())
        return 0.0;
    double s = 0.0;
    for (const auto & u : snaps.snapshots)
        s += static_cast<double>(u.space->n_dof());
    return s / static_cast<double>(snaps.size());
}

ErrorTable error_table(const ExperimentConfig & cfg, const SnapshotSet & snaps, const SnapshotSet & reference)
{
    std::size_t r_max = 0;
    for (std::size_t r : cfg.r_values)
        r_max = std::max(r_max, r);
    const ReducedModel model = build_reduced_model(cfg, snaps, r_max);
    ErrorTable table;
    table.rank = model.basis.rank;
    table.mean_dof = mean_dof(snaps);
    table.e_fem = error_fem(snaps, reference, cfg.threads);
    for (std::size_t r : clip_r(cfg.r_values, model.dim()))
        table.rows.push_back({r, error_pod(model.basis, r), model_error(cfg, model, snaps, r)});
    return table;
}

ExperimentResult run_experiment(const ExperimentConfig & cfg, const ProgressLog & log)
{
    cfg.validate();
    // adaptive runs keyed by tolerance, so sweep levels and references share work
    std::map<double, SnapshotSet> runs;
    auto run = [&](double tol) -> const SnapshotSet & {
        auto it = runs.find(tol);
        if (it == runs.end())
            it = runs.emplace(tol, generate_snapshots(cfg, tol, log)).first;
        return it->second;
    };

    ExperimentResult result;
    const double tol = cfg.adapt.tol;
    const SnapshotSet & snaps = run(tol);
    const SnapshotSet & reference = run(tol * cfg.reference_factor);
    result.adaptive = error_table(cfg, snaps, reference);
    say(log, "adaptive table: rank " + std::to_string(result.adaptive.rank) + ", e_fem " + fmt(result.adaptive.e_fem));

    for (double factor : cfg.sweep_factors)
    {
        const double level_tol = tol * factor;
        const SnapshotSet & s = run(level_tol);
        const SnapshotSet & ref = run(level_tol * cfg.reference_factor);
        const ReducedModel model = build_reduced_model(cfg, s, cfg.r_star);
        const std::size_t r = std::min(cfg.r_star, model.dim());
        SweepRow row;
        row.tol = level_tol;
        row.n_dof = mean_dof(s);
        row.e_fem = error_fem(s, ref, cfg.threads);
        row.e_pod = error_pod(model.basis, r);
        row.e_rom = model_error(cfg, model, s, r);
        result.sweep.push_back(row);
        say(log, "sweep tol=" + fmt(level_tol) + " n_dof=" + fmt(row.n_dof) + " e_fem=" + fmt(row.e_fem)
                     + " e_rom=" + fmt(row.e_rom));
    }

    std::vector<const Mesh *> meshes;
    for (const auto & u : snaps.snapshots)
        meshes.push_back(&u.space->mesh());
    const auto common = std::make_shared<const Mesh>(overlay(std::span<const Mesh * const>(meshes)));
    const SnapshotSet fixed = generate_static_snapshots(cfg, common, log);
    result.static_table = error_table(cfg, fixed, reference);
    say(log, "static table: rank " + std::to_string(result.static_table.rank));
    return result;
}

void write_error_csv(std::ostream & out, const ErrorTable & table)
{
    out << "R,e_pod,e_rom\n";
    for (const auto & row : table.rows)
        out << row.r << ',' << fmt(row.e_pod) << ',' << fmt(row.e_rom) << '\n';
    out << "e_fem," << fmt(table.e_fem) << '\n';
}

void write_sweep_csv(std::ostream & out, const std::vector<SweepRow> & rows)
{
    out << "n_dof,e_fem,e_pod,e_rom\n";
    for (const auto & row : rows)
        out << fmt(row.n_dof) << ',' << fmt(row.e_fem) << ',' << fmt(row.e_pod) << ',' << fmt(row.e_rom) << '\n';
}

} // namespace adapod
