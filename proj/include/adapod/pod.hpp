#pragma once

#include "adapod/fem.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string_view>
#include <vector>

namespace adapod {

using Matrix = Eigen::MatrixXd;

struct SnapshotLabel
{
    double mu = 0.0;
    int k = 0; ///< time level, 0 for stationary problems
};

/// Snapshots on individual spaces refined from one initial mesh.
struct SnapshotSet
{
    std::vector<FeFunction> snapshots;
    std::vector<SnapshotLabel> labels;
    InnerProduct ip = InnerProduct::h1_semi;

    std::size_t size() const { return snapshots.size(); }

    /// Throws if the set is empty, labels do not match, or the snapshot
    /// meshes do not share their initial mesh.
    void validate() const;
};

/// (u, v)_V evaluated exactly on the overlay of both meshes.
double cross_inner_product(const FeFunction & u, const FeFunction & v, InnerProduct ip);

/// Overlay of all snapshot meshes with every snapshot prolonged to it.
struct CommonSpace
{
    std::shared_ptr<const Mesh> mesh;
    Matrix values; ///< vertices x N, column n holds u_n on the overlay
};

CommonSpace build_common_space(const SnapshotSet & snaps, unsigned threads = 1);

/// Gramian G_ij = (u_i, u_j)_V computed on the common overlay.
Matrix gramian_common(const SnapshotSet & snaps, unsigned threads = 1);
Matrix gramian_common(const CommonSpace & common, InnerProduct ip);

/// Gramian with each entry computed on the overlay of its pair of meshes.
Matrix gramian_pairwise(const SnapshotSet & snaps, unsigned threads = 1);

struct SymmetricEigen
{
    Vector values;  ///< descending
    Matrix vectors; ///< orthonormal columns, largest component of each positive
};

/// Full eigendecomposition of a symmetric matrix. Throws
/// std::invalid_argument if the input is not symmetric to 1e-12 relative.
SymmetricEigen eig_sym(const Matrix & g);

enum class GramianStrategy : std::uint8_t
{
    common,
    pairwise,
};

std::string_view to_string(GramianStrategy s);
GramianStrategy gramian_strategy_from_string(std::string_view name);

inline constexpr double default_eps_rank = 1e-12;

/// POD basis phi_r = sum_n u_n a_r^n / sqrt(lambda_r) for r < rank.
struct PodBasis
{
    Vector eigenvalues;  ///< all N eigenvalues, descending
    std::size_t rank = 0;
    Matrix coefficients; ///< rank x N, row r holds a_r^n / sqrt(lambda_r)
    Matrix gramian;      ///< snapshot Gramian the basis was built from
    InnerProduct ip = InnerProduct::h1_semi;

    /// Overlay of all snapshot meshes and basis vertex values on it; only
    /// filled by the common strategy.
    std::shared_ptr<const Mesh> common_mesh;
    Matrix common_values; ///< vertices x rank

    bool has_common() const { return common_mesh != nullptr; }
};

PodBasis compute_pod(const SnapshotSet & snaps, GramianStrategy strategy, double eps_rank = default_eps_rank,
                     unsigned threads = 1);

/// Basis from a precomputed Gramian, without common-space data.
PodBasis pod_from_gramian(const Matrix & gramian, InnerProduct ip, double eps_rank = default_eps_rank);

/// Vertex values of phi_0..phi_{R-1} on the common overlay.
Matrix basis_on_common(const PodBasis & basis, const CommonSpace & common, std::size_t r);

/// b_r = (phi_r, u)_V for r < R, through (u_n, u)_V without a common space.
Vector project(const PodBasis & basis, const SnapshotSet & snaps, const FeFunction & u, std::size_t r);

/// Same result through the stored common-space basis (u must be nested in
/// the common overlay).
Vector project_common(const PodBasis & basis, const FeFunction & u, std::size_t r);

/// sum_{r >= R} lambda_r over the retained eigenvalues.
double truncation_energy(const PodBasis & basis, std::size_t r);

} // namespace adapod
