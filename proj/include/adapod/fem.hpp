#pragma once

#include "adapod/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

namespace adapod {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Inner product defining the V-norm of a space.
enum class InnerProduct : std::uint8_t
{
    h1_semi, ///< (grad u, grad v)
    h1_full, ///< (u, v) + (grad u, grad v)
};

std::string_view to_string(InnerProduct ip);
InnerProduct inner_product_from_string(std::string_view name);

enum class OperatorKind : std::uint8_t
{
    mass,         ///< int phi_j phi_i
    stiffness,    ///< int grad phi_j . grad phi_i
    convection_x, ///< int d_x phi_j phi_i
    convection_y, ///< int d_y phi_j phi_i
};

/// Closed-form scalar field f(x, y).
using ScalarField = std::function<double(double, double)>;

/// P1 Lagrange space on a mesh. Boundary constraints follow the mesh's edge
/// tags: vertices on Dirichlet edges are fixed to zero, vertices on
/// periodic_right (periodic_top) edges alias the vertex with equal y (x) on
/// the opposite side. Free vertices are numbered in increasing vertex order.
class FeSpace
{
public:
    enum class VertexKind : std::uint8_t
    {
        free,
        fixed_zero,
        alias,
    };

    /// Throws MeshError naming the vertex if a periodic vertex has no partner.
    FeSpace(std::shared_ptr<const Mesh> mesh, InnerProduct ip);

    const Mesh & mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh> & mesh_ptr() const { return mesh_; }
    InnerProduct inner_product() const { return ip_; }

    std::size_t n_dof() const { return n_dof_; }

    /// Dof carrying the value of vertex v (the master's dof for aliases), or
    /// no_index for fixed vertices.
    Index dof_of_vertex(Index v) const { return vertex_dof_[v]; }
    VertexKind kind(Index v) const { return kind_[v]; }
    Index alias_master(Index v) const { return master_[v]; }

    /// (vertices x dofs) 0/1 matrix mapping dof coefficients to vertex values.
    const SparseMatrix & expansion() const { return expansion_; }

    Vector expand(const Vector & coefficients) const;

    /// Dof coefficients read off vertex values (the master vertex of each dof).
    Vector restrict_values(const Vector & vertex_values) const;

    std::uint64_t hash() const { return hash_; }

private:
    std::shared_ptr<const Mesh> mesh_;
    InnerProduct ip_;
    std::vector<Index> vertex_dof_;
    std::vector<VertexKind> kind_;
    std::vector<Index> master_;
    std::vector<Index> dof_vertex_;
    std::size_t n_dof_ = 0;
    SparseMatrix expansion_;
    std::uint64_t hash_ = 0;
};

using SpacePtr = std::shared_ptr<const FeSpace>;

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, InnerProduct ip);
SpacePtr build_space(Mesh mesh, InnerProduct ip);

/// Coefficient vector bound to one space.
struct FeFunction
{
    SpacePtr space;
    Vector coefficients;

    FeFunction() = default;
    FeFunction(SpacePtr s, Vector c);

    /// Zero function on a space.
    static FeFunction zero(SpacePtr s);

    Vector vertex_values() const { return space->expand(coefficients); }
};

/// Unconstrained operator on all mesh vertices.
SparseMatrix assemble_vertex(const Mesh & mesh, OperatorKind kind);

/// Operator restricted to the free dofs of the space (Dirichlet rows and
/// columns eliminated, periodic aliases summed into their masters).
SparseMatrix assemble(const FeSpace & space, OperatorKind kind);

/// Vertex-level matrix of the given inner product.
SparseMatrix inner_product_matrix(const Mesh & mesh, InnerProduct ip);

/// F_i = int f phi_i on all vertices, edge-midpoint (order 2) quadrature.
Vector assemble_vertex_load(const Mesh & mesh, const ScalarField & f);
Vector assemble_load(const FeSpace & space, const ScalarField & f);

/// Entries b(v, w, phi_i) = int v d_x w phi_i on all vertices, evaluated with
/// a four-point rule exact for cubics.
Vector trilinear_vertex(const Mesh & mesh, const Vector & v_values, const Vector & w_values);

/// b(v, w, phi_i) for the dofs of the common space of v and w.
Vector trilinear_apply(const FeFunction & v, const FeFunction & w);

/// Derivative of u -> b(u, u, phi_i) with respect to the dofs of u.
SparseMatrix trilinear_jacobian(const FeSpace & space, const Vector & u);

/// Direct sparse LU solve. Throws SolverError for singular systems.
Vector solve_linear(const SparseMatrix & a, const Vector & rhs);

/// Solves (vx C_x + vy C_y + nu K) u = F on the constrained space.
FeFunction solve_elliptic(SpacePtr space, double vx, double vy, double nu, const ScalarField & f);

/// L2 projection of a closed-form field onto the space.
FeFunction l2_projection(SpacePtr space, const ScalarField & f);

struct NewtonReport
{
    int iterations = 0;
    double residual = 0.0;
};

inline constexpr double newton_tolerance = 1e-12;
inline constexpr int newton_max_iterations = 25;

/// One implicit Euler step of the viscous Burgers problem,
///   (u - u_prev, phi) + tau nu (grad u, grad phi) + tau b(u, u, phi) = 0,
/// solved by Newton's method on `space`. The coupling term (u_prev, phi) is
/// integrated exactly on the overlay of both meshes. Throws SolverError with
/// the last residual if Newton does not reach `newton_tolerance`.
FeFunction burgers_fom_step(const FeFunction & u_prev, SpacePtr space, double tau, double nu,
                            NewtonReport * report = nullptr);

} // namespace adapod
