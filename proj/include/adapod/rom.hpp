#pragma once

#include "adapod/adapt.hpp"
#include "adapod/pod.hpp"

#include <string_view>
#include <vector>

namespace adapod {

enum class RomStrategy : std::uint8_t
{
    common,         ///< forms evaluated on the common overlay
    snapshot_pairs, ///< forms evaluated on pairwise overlays, then combined
};

std::string_view to_string(RomStrategy s);
RomStrategy rom_strategy_from_string(std::string_view name);

/// Reduced convection-diffusion operators,
///   (vx(mu) ax + vy(mu) ay + anu) b = f.
struct EllipticRom
{
    Matrix ax;  ///< (ax)_ri = c_x(phi_i, phi_r)
    Matrix ay;
    Matrix anu; ///< nu times the reduced stiffness
    Vector f;
    double nu = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(f.size()); }

    /// Leading r-by-r blocks; valid because POD bases are nested.
    EllipticRom truncated(std::size_t r) const;
};

/// Both strategies need the snapshots; `common` additionally needs the basis
/// to carry common-space values.
EllipticRom assemble_elliptic_rom(const PodBasis & basis, const SnapshotSet & snaps, std::size_t r,
                                  RomStrategy strategy, const EllipticProblem & problem, unsigned threads = 1);

/// Solves the leading r-by-r system (r = 0 means the full dimension).
Vector solve_elliptic_rom(const EllipticRom & rom, double mu, std::size_t r = 0);

/// Reduced Burgers model
///   M (b_k - b_{k-1}) + tau A b_k + tau B(b_k) b_k = 0,   M b_1 = mu b0.
struct BurgersRom
{
    Matrix mass;
    Matrix stiffness;           ///< nu times the reduced stiffness
    std::vector<double> tensor; ///< B_rij = b(phi_i, phi_j, phi_r) at (r * R + i) * R + j
    Vector b0;
    double tau = 0.0;
    double nu = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(b0.size()); }
    double b(std::size_t r, std::size_t i, std::size_t j) const { return tensor[(r * dim() + i) * dim() + j]; }

    BurgersRom truncated(std::size_t r) const;

    /// (B(c) c)_r = sum_ij B_rij c_i c_j
    Vector apply_tensor(const Vector & c) const;
};

/// Reduced operators assembled on the common overlay.
BurgersRom assemble_burgers_rom(const PodBasis & basis, const ScalarField & u0, std::size_t r, double tau,
                                double nu);

struct RomTrajectory
{
    std::vector<Vector> coefficients; ///< b_1 .. b_K
};

/// Integrates K levels. Newton stops at newton_tolerance in the max norm.
RomTrajectory integrate_burgers_rom(const BurgersRom & rom, double mu, int levels);

} // namespace adapod
