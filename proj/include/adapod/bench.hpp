#pragma once

#include "adapod/rom.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adapod {

enum class ProblemKind : std::uint8_t
{
    convection_diffusion,
    burgers,
};

std::string_view to_string(ProblemKind p);

/// Burgers initial profile u0(x, y); training snapshots start at mu * u0.
double burgers_initial(double x, double y);

struct ExperimentConfig
{
    ProblemKind problem = ProblemKind::convection_diffusion;

    // training parameters
    std::size_t n_params = 33;  ///< equidistant on [mu_min, mu_max] (convection-diffusion)
    double mu_min = 0.0;
    double mu_max = 1.0;
    std::vector<double> mus{0.0, 0.5, 1.0}; ///< Burgers training set

    double nu = 0.01;
    double tau = 0.005;
    double t_end = 1.2;

    // initial mesh
    int nx = 4;
    int ny = 4;

    AdaptConfig adapt;
    double reference_factor = 0.25; ///< reference tol = tol * reference_factor

    std::vector<std::size_t> r_values;   ///< R sweep, clipped to the POD rank
    std::size_t r_star = 10;             ///< fixed R of the refinement sweep
    std::vector<double> sweep_factors{4.0, 1.0, 0.25}; ///< sweep tols = tol * factor

    bool static_mode = false;
    GramianStrategy strategy = GramianStrategy::pairwise;
    double eps_rank = default_eps_rank;
    unsigned threads = 1;

    static ExperimentConfig convection_diffusion_defaults(bool quick = false);
    static ExperimentConfig burgers_defaults(bool quick = false);

    /// Number of time levels K with tau = t_end / (K - 1).
    int levels() const;
    std::vector<double> training_parameters() const;
    Mesh initial_mesh() const;
    InnerProduct inner_product() const;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Optional progress sink for long runs.
using ProgressLog = std::function<void(const std::string &)>;

/// Adaptive snapshots at the given tolerance: one solve per parameter
/// (convection-diffusion) or one trajectory per parameter flattened as
/// n = k + p K (Burgers).
SnapshotSet generate_snapshots(const ExperimentConfig & cfg, double tol, const ProgressLog & log = {});

/// Snapshots recomputed on one fixed mesh.
SnapshotSet generate_static_snapshots(const ExperimentConfig & cfg, std::shared_ptr<const Mesh> mesh,
                                      const ProgressLog & log = {});

/// sqrt(sum_{r >= R} lambda_r / sum lambda_r)
double error_pod(const PodBasis & basis, std::size_t r);

/// Relative V-norm error of the elliptic ROM over the training set. The
/// reconstruction is a snapshot combination, so the error is evaluated
/// with the Gramian alone.
double error_rom(const EllipticRom & rom, const PodBasis & basis, const SnapshotSet & snaps, std::size_t r);

/// Same for the Burgers ROM; snapshots must be ordered as produced by
/// generate_snapshots.
double error_rom(const BurgersRom & rom, const PodBasis & basis, const SnapshotSet & snaps, std::size_t r,
                 int levels);

/// sqrt(sum ||u_ref - u||^2 / sum ||u_ref||^2) with exact cross-mesh terms.
double error_fem(const SnapshotSet & snaps, const SnapshotSet & reference, unsigned threads = 1);

/// Adds common-space basis values to a basis built without them.
void attach_common(PodBasis & basis, const SnapshotSet & snaps, unsigned threads = 1);

/// Builds the basis and reduced model for a snapshot set per the config.
struct ReducedModel
{
    PodBasis basis;
    std::optional<EllipticRom> elliptic;
    std::optional<BurgersRom> burgers;

    std::size_t dim() const;
};

ReducedModel build_reduced_model(const ExperimentConfig & cfg, const SnapshotSet & snaps, std::size_t r_max);

/// ROM error at dimension r (r = 0 gives 1).
double model_error(const ExperimentConfig & cfg, const ReducedModel & model, const SnapshotSet & snaps,
                   std::size_t r);

struct ErrorRow
{
    std::size_t r = 0;
    double e_pod = 0.0;
    double e_rom = 0.0;
};

struct ErrorTable
{
    std::vector<ErrorRow> rows;
    double e_fem = 0.0;
    std::size_t rank = 0;
    double mean_dof = 0.0;
};

struct SweepRow
{
    double tol = 0.0;
    double n_dof = 0.0; ///< mean over snapshots
    double e_fem = 0.0;
    double e_pod = 0.0;
    double e_rom = 0.0;
};

struct ExperimentResult
{
    ErrorTable adaptive;
    std::vector<SweepRow> sweep;
    ErrorTable static_table;
};

/// R sweep over `cfg.r_values` for one snapshot set.
ErrorTable error_table(const ExperimentConfig & cfg, const SnapshotSet & snaps, const SnapshotSet & reference);

/// All three panels: adaptive R sweep, refinement sweep at r_star, and the
/// R sweep for snapshots recomputed on the overlay of the adaptive meshes.
ExperimentResult run_experiment(const ExperimentConfig & cfg, const ProgressLog & log = {});

void write_error_csv(std::ostream & out, const ErrorTable & table);
void write_sweep_csv(std::ostream & out, const std::vector<SweepRow> & rows);

double mean_dof(const SnapshotSet & snaps);

} // namespace adapod
