#pragma once

#include "adapod/fem.hpp"

#include <array>
#include <limits>
#include <string_view>
#include <vector>

namespace adapod {

/// Per-leaf-triangle error measure
///   E(K) = sqrt(1/2 sum_{edges e of K} h_e^2 [n_e . nu grad u_h]^2)
/// with jumps taken over interior edges only.
struct ErrorIndicator
{
    std::vector<double> values;

    double max() const;
    /// sqrt(sum E(K)^2)
    double total() const;
};

ErrorIndicator estimate(const FeSpace & space, const FeFunction & u, double nu);

/// Maximum strategy: {K : E(K) >= theta * max E}, empty if all are zero.
std::vector<Index> mark(const ErrorIndicator & indicator, double theta);

struct AdaptConfig
{
    double tol = std::numeric_limits<double>::infinity(); ///< stop once max E(K) <= tol
    double theta = 0.5;
    std::size_t max_dof = 5000;
    int max_rounds = 60;

    /// Throws ConfigError for out-of-range fields.
    void validate() const;
};

enum class StopReason : std::uint8_t
{
    tolerance,
    max_dof,
    max_rounds,
};

std::string_view to_string(StopReason reason);

struct AdaptRound
{
    int round = 0;
    std::size_t n_dof = 0;
    double max_indicator = 0.0;
    double total = 0.0;
};

struct AdaptResult
{
    FeFunction solution;
    StopReason reason = StopReason::tolerance;
    std::vector<AdaptRound> log;

    const SpacePtr & space() const { return solution.space; }
    int rounds() const { return static_cast<int>(log.size()) - 1; }
};

/// Stationary convection-diffusion problem
///   v(mu) . grad u - nu lap u = f,  v(mu) = (cos(pi mu / 4), sin(pi mu / 4)).
struct EllipticProblem
{
    double nu = 0.01;
    ScalarField f = [](double, double) { return 1.0; };

    static std::array<double, 2> velocity(double mu);
};

/// Runs solve -> estimate -> mark -> bisect from `initial` until one of the
/// stopping rules in `cfg` fires.
AdaptResult adaptive_solve_elliptic(const Mesh & initial, double mu, const EllipticProblem & problem,
                                    const AdaptConfig & cfg, InnerProduct ip = InnerProduct::h1_semi);

/// Adaptive L2 projection of a closed-form field, the first Burgers level.
AdaptResult adaptive_projection(const Mesh & initial, const ScalarField & f, double nu, const AdaptConfig & cfg,
                                InnerProduct ip = InnerProduct::h1_full);

/// One adaptive implicit Euler step. The mesh starts from the mesh of
/// u_prev and is only refined, so consecutive spaces are nested.
AdaptResult adaptive_burgers_step(const FeFunction & u_prev, double tau, double nu, const AdaptConfig & cfg);

} // namespace adapod
