#include "adapod/fem.hpp"

#include "adapod/error.hpp"

#include <Eigen/SparseLU>

#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace adapod {

namespace {

using Triplet = Eigen::Triplet<double>;

/// Geometry of one P1 element: signed area and barycentric gradients.
struct Element
{
    std::array<Index, 3> v;
    double area;
    std::array<double, 3> gx;
    std::array<double, 3> gy;
};

Element element(const Mesh & mesh, Index t)
{
    Element e;
    e.v = mesh.triangle(t);
    const Point & p0 = mesh.vertex(e.v[0]);
    const Point & p1 = mesh.vertex(e.v[1]);
    const Point & p2 = mesh.vertex(e.v[2]);
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    e.area = 0.5 * det;
    e.gx = {(p1.y - p2.y) / det, (p2.y - p0.y) / det, (p0.y - p1.y) / det};
    e.gy = {(p2.x - p1.x) / det, (p0.x - p2.x) / det, (p1.x - p0.x) / det};
    return e;
}

/// Strang-Fix four-point rule, exact for cubic polynomials.
struct QuadPoint
{
    std::array<double, 3> lambda;
    double weight;
};

constexpr std::array<QuadPoint, 4> cubic_rule{{
    {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, -27.0 / 48.0},
    {{0.6, 0.2, 0.2}, 25.0 / 48.0},
    {{0.2, 0.6, 0.2}, 25.0 / 48.0},
    {{0.2, 0.2, 0.6}, 25.0 / 48.0},
}};

SparseMatrix from_triplets(std::size_t n, const std::vector<Triplet> & triplets)
{
    SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

SparseMatrix constrain(const FeSpace & space, const SparseMatrix & vertex_matrix)
{
    const SparseMatrix & e = space.expansion();
    SparseMatrix tmp = vertex_matrix * e;
    SparseMatrix result = SparseMatrix(e.transpose()) * tmp;
    result.makeCompressed();
    return result;
}

} // namespace

std::string_view to_string(InnerProduct ip)
{
    return ip == InnerProduct::h1_semi ? "h1_semi" : "h1_full";
}

InnerProduct inner_product_from_string(std::string_view name)
{
    if (name == "h1_semi")
        return InnerProduct::h1_semi;
    if (name == "h1_full")
        return InnerProduct::h1_full;
    throw std::invalid_argument("unknown inner product '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// FeSpace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, InnerProduct ip) : mesh_(std::move(mesh)), ip_(ip)
{
    const Mesh & m = *mesh_;
    const std::size_t nv = m.num_vertices();
    kind_.assign(nv, VertexKind::free);
    master_.assign(nv, no_index);

    std::map<std::pair<double, double>, Index> coords;
    for (std::size_t v = 0; v < nv; ++v)
        coords.emplace(std::pair{m.vertex(static_cast<Index>(v)).x, m.vertex(static_cast<Index>(v)).y},
                       static_cast<Index>(v));

    const Rect & box = m.bounding_box();
    auto find_partner = [&](Index v, BoundaryTag tag) {
        const Point & p = m.vertex(v);
        const std::pair<double, double> key = tag == BoundaryTag::periodic_right
                                                  ? std::pair{box.x0, p.y}
                                                  : std::pair{p.x, box.y0};
        auto it = coords.find(key);
        if (it == coords.end())
        {
            throw MeshError("periodic vertex " + std::to_string(v) + " at (" + std::to_string(p.x) + ", "
                            + std::to_string(p.y) + ") has no partner on the opposite side");
        }
        return it->second;
    };

    std::vector<bool> dirichlet(nv, false);
    std::vector<Index> partner(nv, no_index);
    for (const auto & e : m.edges())
    {
        if (!e.is_boundary())
            continue;
        for (Index v : e.v)
        {
            switch (e.tag)
            {
                case BoundaryTag::dirichlet: dirichlet[v] = true; break;
                case BoundaryTag::periodic_right:
                case BoundaryTag::periodic_top:
                    // A corner on both periodic_right and periodic_top keeps
                    // the x-partner; the chain resolves to the bottom-left corner.
                    if (partner[v] == no_index || e.tag == BoundaryTag::periodic_right)
                        partner[v] = find_partner(v, e.tag);
                    break;
                default: break;
            }
        }
    }
    for (const auto & e : m.edges())
    {
        if (e.is_boundary() && (e.tag == BoundaryTag::periodic_left || e.tag == BoundaryTag::periodic_bottom))
        {
            // Left/bottom vertices must have a counterpart too.
            for (Index v : e.v)
            {
                const Point & p = m.vertex(v);
                const std::pair<double, double> key = e.tag == BoundaryTag::periodic_left
                                                          ? std::pair{box.x1, p.y}
                                                          : std::pair{p.x, box.y1};
                if (!coords.count(key))
                {
                    throw MeshError("periodic vertex " + std::to_string(v) + " at (" + std::to_string(p.x)
                                    + ", " + std::to_string(p.y) + ") has no partner on the opposite side");
                }
            }
        }
    }

    auto resolve = [&](Index v) {
        Index cur = v;
        for (std::size_t steps = 0; partner[cur] != no_index; ++steps)
        {
            if (steps > nv)
                throw MeshError("cyclic periodic identification at vertex " + std::to_string(v));
            cur = partner[cur];
        }
        return cur;
    };

    for (std::size_t v = 0; v < nv; ++v)
    {
        const Index vi = static_cast<Index>(v);
        const Index root = resolve(vi);
        if (dirichlet[vi] || dirichlet[root])
            kind_[v] = VertexKind::fixed_zero;
        else if (root != vi)
        {
            kind_[v] = VertexKind::alias;
            master_[v] = root;
        }
    }

    vertex_dof_.assign(nv, no_index);
    for (std::size_t v = 0; v < nv; ++v)
    {
        if (kind_[v] == VertexKind::free)
        {
            vertex_dof_[v] = static_cast<Index>(dof_vertex_.size());
            dof_vertex_.push_back(static_cast<Index>(v));
        }
    }
    for (std::size_t v = 0; v < nv; ++v)
    {
        if (kind_[v] == VertexKind::alias)
        {
            if (kind_[master_[v]] != VertexKind::free)
                kind_[v] = VertexKind::fixed_zero;
            else
                vertex_dof_[v] = vertex_dof_[master_[v]];
        }
    }
    n_dof_ = dof_vertex_.size();

    std::vector<Triplet> triplets;
    for (std::size_t v = 0; v < nv; ++v)
        if (vertex_dof_[v] != no_index)
            triplets.emplace_back(static_cast<int>(v), vertex_dof_[v], 1.0);
    expansion_.resize(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(n_dof_));
    expansion_.setFromTriplets(triplets.begin(), triplets.end());

    std::uint64_t h = m.hash() ^ (static_cast<std::uint64_t>(ip_) + 0x9e3779b97f4a7c15ull);
    for (Index d : vertex_dof_)
        h = (h ^ static_cast<std::uint64_t>(d + 1)) * 1099511628211ull;
    hash_ = h;
}

Vector FeSpace::expand(const Vector & coefficients) const
{
    if (static_cast<std::size_t>(coefficients.size()) != n_dof_)
        throw std::invalid_argument("coefficient vector length does not match the space");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(vertex_dof_.size()));
    for (std::size_t v = 0; v < vertex_dof_.size(); ++v)
        if (vertex_dof_[v] != no_index)
            out[static_cast<Eigen::Index>(v)] = coefficients[vertex_dof_[v]];
    return out;
}

Vector FeSpace::restrict_values(const Vector & vertex_values) const
{
    if (static_cast<std::size_t>(vertex_values.size()) != vertex_dof_.size())
        throw std::invalid_argument("vertex vector length does not match the mesh");
    Vector out(static_cast<Eigen::Index>(n_dof_));
    for (std::size_t d = 0; d < n_dof_; ++d)
        out[static_cast<Eigen::Index>(d)] = vertex_values[dof_vertex_[d]];
    return out;
}

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, InnerProduct ip)
{
    return std::make_shared<const FeSpace>(std::move(mesh), ip);
}

SpacePtr build_space(Mesh mesh, InnerProduct ip)
{
    return build_space(std::make_shared<const Mesh>(std::move(mesh)), ip);
}

FeFunction::FeFunction(SpacePtr s, Vector c) : space(std::move(s)), coefficients(std::move(c))
{
    if (!space)
        throw std::invalid_argument("function without a space");
    if (static_cast<std::size_t>(coefficients.size()) != space->n_dof())
        throw std::invalid_argument("coefficient vector length does not match the space");
}

FeFunction FeFunction::zero(SpacePtr s)
{
    const auto n = static_cast<Eigen::Index>(s->n_dof());
    return FeFunction(std::move(s), Vector::Zero(n));
}

// ---------------------------------------------------------------------------
// Assembly

SparseMatrix assemble_vertex(const Mesh & mesh, OperatorKind kind)
{
    std::vector<Triplet> triplets;
    triplets.reserve(mesh.num_triangles() * 9);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    {
        const Element e = element(mesh, static_cast<Index>(t));
        for (int i = 0; i < 3; ++i)
        {
            for (int j = 0; j < 3; ++j)
            {
                double value = 0.0;
                switch (kind)
                {
                    case OperatorKind::mass: value = e.area / 12.0 * (i == j ? 2.0 : 1.0); break;
                    case OperatorKind::stiffness: value = e.area * (e.gx[i] * e.gx[j] + e.gy[i] * e.gy[j]); break;
                    case OperatorKind::convection_x: value = e.gx[j] * e.area / 3.0; break;
                    case OperatorKind::convection_y: value = e.gy[j] * e.area / 3.0; break;
                }
                triplets.emplace_back(e.v[i], e.v[j], value);
            }
        }
    }
    return from_triplets(mesh.num_vertices(), triplets);
}

SparseMatrix assemble(const FeSpace & space, OperatorKind kind)
{
    return constrain(space, assemble_vertex(space.mesh(), kind));
}

SparseMatrix inner_product_matrix(const Mesh & mesh, InnerProduct ip)
{
    SparseMatrix k = assemble_vertex(mesh, OperatorKind::stiffness);
    if (ip == InnerProduct::h1_semi)
        return k;
    SparseMatrix m = assemble_vertex(mesh, OperatorKind::mass);
    return m + k;
}

Vector assemble_vertex_load(const Mesh & mesh, const ScalarField & f)
{
    Vector load = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    {
        const Element e = element(mesh, static_cast<Index>(t));
        std::array<Point, 3> p;
        for (int k = 0; k < 3; ++k)
            p[k] = mesh.vertex(e.v[k]);
        // Edge midpoints; at the midpoint of edge (k, k+1) the barycentric
        // coordinates are 1/2 for k and k+1 and 0 for the third vertex.
        for (int k = 0; k < 3; ++k)
        {
            const int k1 = (k + 1) % 3;
            const double fv = f(0.5 * (p[k].x + p[k1].x), 0.5 * (p[k].y + p[k1].y));
            const double w = e.area / 3.0 * fv * 0.5;
            load[e.v[k]] += w;
            load[e.v[k1]] += w;
        }
    }
    return load;
}

Vector assemble_load(const FeSpace & space, const ScalarField & f)
{
    return space.expansion().transpose() * assemble_vertex_load(space.mesh(), f);
}

Vector trilinear_vertex(const Mesh & mesh, const Vector & v_values, const Vector & w_values)
{
    const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
    if (v_values.size() != nv || w_values.size() != nv)
        throw std::invalid_argument("trilinear form evaluated with vectors of the wrong length");
    Vector out = Vector::Zero(nv);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    {
        const Element e = element(mesh, static_cast<Index>(t));
        double dxw = 0.0;
        for (int k = 0; k < 3; ++k)
            dxw += w_values[e.v[k]] * e.gx[k];
        if (dxw == 0.0)
            continue;
        for (const auto & q : cubic_rule)
        {
            double vq = 0.0;
            for (int k = 0; k < 3; ++k)
                vq += q.lambda[k] * v_values[e.v[k]];
            const double s = q.weight * e.area * vq * dxw;
            for (int i = 0; i < 3; ++i)
                out[e.v[i]] += s * q.lambda[i];
        }
    }
    return out;
}

Vector trilinear_apply(const FeFunction & v, const FeFunction & w)
{
    if (v.space->hash() != w.space->hash())
        throw std::invalid_argument("trilinear form needs both functions on the same space");
    return v.space->expansion().transpose() * trilinear_vertex(v.space->mesh(), v.vertex_values(), w.vertex_values());
}

SparseMatrix trilinear_jacobian(const FeSpace & space, const Vector & u)
{
    const Mesh & mesh = space.mesh();
    const Vector uv = space.expand(u);
    std::vector<Triplet> triplets;
    triplets.reserve(mesh.num_triangles() * 9);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    {
        const Element e = element(mesh, static_cast<Index>(t));
        double dxu = 0.0;
        for (int k = 0; k < 3; ++k)
            dxu += uv[e.v[k]] * e.gx[k];
        std::array<std::array<double, 3>, 3> local{};
        for (const auto & q : cubic_rule)
        {
            double uq = 0.0;
            for (int k = 0; k < 3; ++k)
                uq += q.lambda[k] * uv[e.v[k]];
            const double w = q.weight * e.area;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    local[i][j] += w * q.lambda[i] * (q.lambda[j] * dxu + uq * e.gx[j]);
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                triplets.emplace_back(e.v[i], e.v[j], local[i][j]);
    }
    return constrain(space, from_triplets(mesh.num_vertices(), triplets));
}

// ---------------------------------------------------------------------------
// Solvers

Vector solve_linear(const SparseMatrix & a, const Vector & rhs)
{
    if (a.rows() != a.cols() || a.rows() != rhs.size())
        throw std::invalid_argument("solve_linear needs a square system matching the right-hand side");
    if (a.rows() == 0)
        return Vector(0);
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage());
    Vector x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw SolverError("sparse LU solve failed (singular matrix)");
    return x;
}

FeFunction solve_elliptic(SpacePtr space, double vx, double vy, double nu, const ScalarField & f)
{
    if (!(nu > 0.0))
        throw std::invalid_argument("diffusivity must be positive");
    const Mesh & mesh = space->mesh();
    SparseMatrix a = vx * assemble_vertex(mesh, OperatorKind::convection_x)
                     + vy * assemble_vertex(mesh, OperatorKind::convection_y)
                     + nu * assemble_vertex(mesh, OperatorKind::stiffness);
    const SparseMatrix ac = constrain(*space, a);
    const Vector rhs = assemble_load(*space, f);
    Vector u = solve_linear(ac, rhs);
    return FeFunction(std::move(space), std::move(u));
}

FeFunction l2_projection(SpacePtr space, const ScalarField & f)
{
    const SparseMatrix m = assemble(*space, OperatorKind::mass);
    Vector u = solve_linear(m, assemble_load(*space, f));
    return FeFunction(std::move(space), std::move(u));
}

FeFunction burgers_fom_step(const FeFunction & u_prev, SpacePtr space, double tau, double nu,
                            NewtonReport * report)
{
    if (!(tau > 0.0))
        throw std::invalid_argument("time step must be positive");
    const Mesh & prev_mesh = u_prev.space->mesh();
    const Mesh & mesh = space->mesh();
    if (!prev_mesh.same_roots(mesh))
        throw MeshError("Burgers step needs both spaces refined from the same initial mesh");

    const SparseMatrix m = assemble(*space, OperatorKind::mass);
    const SparseMatrix k = assemble(*space, OperatorKind::stiffness);
    const Vector prev_values = u_prev.vertex_values();

    Vector rhs;
    Vector u;
    if (is_refinement_of(mesh, prev_mesh))
    {
        const Vector on_new = prolongation(prev_mesh, mesh).apply(prev_values);
        rhs = space->expansion().transpose() * (assemble_vertex(mesh, OperatorKind::mass) * on_new);
        u = space->restrict_values(on_new);
    }
    else
    {
        const Mesh common = overlay(prev_mesh, mesh);
        const Prolongation pp = prolongation(prev_mesh, common);
        const Prolongation pn = prolongation(mesh, common);
        const Vector coupled = assemble_vertex(common, OperatorKind::mass) * pp.apply(prev_values);
        rhs = space->expansion().transpose() * (pn.weights.transpose() * coupled);
        u = solve_linear(m, rhs);
    }

    const SparseMatrix linear = m + (tau * nu) * k;
    NewtonReport stats;
    for (int it = 0;; ++it)
    {
        const Vector b = space->expansion().transpose()
                         * trilinear_vertex(mesh, space->expand(u), space->expand(u));
        const Vector residual = linear * u - rhs + tau * b;
        stats.residual = residual.size() ? residual.lpNorm<Eigen::Infinity>() : 0.0;
        stats.iterations = it;
        if (stats.residual <= newton_tolerance)
            break;
        if (it == newton_max_iterations || !std::isfinite(stats.residual))
        {
            if (report)
                *report = stats;
            throw SolverError("Newton iteration for the Burgers step did not converge", stats.residual);
        }
        const SparseMatrix jac = linear + tau * trilinear_jacobian(*space, u);
        u -= solve_linear(jac, residual);
    }
    if (report)
        *report = stats;
    return FeFunction(std::move(space), std::move(u));
}

} // namespace adapod
