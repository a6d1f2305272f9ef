#pragma once

// Test-only helpers: random refinement drivers and brute-force oracles that
// do not share code paths with the library routines they check.

#include "adapod/fem.hpp"
#include "adapod/mesh.hpp"
#include "adapod/pod.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace adapod::test {

/// Marks a random subset (about `fraction` of the leaves, at least one).
inline std::vector<Index> random_marking(const Mesh & mesh, std::mt19937 & rng, double fraction = 0.1)
{
    std::vector<Index> marked;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        if (u(rng) < fraction)
            marked.push_back(static_cast<Index>(t));
    if (marked.empty())
        marked.push_back(static_cast<Index>(std::uniform_int_distribution<std::size_t>(0, mesh.num_triangles() - 1)(rng)));
    return marked;
}

inline Mesh random_refinement(const Mesh & mesh, std::mt19937 & rng, int rounds, double fraction = 0.1)
{
    Mesh m = mesh;
    for (int r = 0; r < rounds; ++r)
        m = bisect(m, random_marking(m, rng, fraction));
    return m;
}

/// Marks leaves whose centroid lies in a disc, to get localized refinement.
inline Mesh refine_near(const Mesh & mesh, Point centre, double radius, int rounds)
{
    Mesh m = mesh;
    for (int r = 0; r < rounds; ++r)
    {
        std::vector<Index> marked;
        for (std::size_t t = 0; t < m.num_triangles(); ++t)
        {
            const auto & v = m.triangle(static_cast<Index>(t));
            const double cx = (m.vertex(v[0]).x + m.vertex(v[1]).x + m.vertex(v[2]).x) / 3.0;
            const double cy = (m.vertex(v[0]).y + m.vertex(v[1]).y + m.vertex(v[2]).y) / 3.0;
            if (std::hypot(cx - centre.x, cy - centre.y) < radius)
                marked.push_back(static_cast<Index>(t));
        }
        m = bisect(m, marked);
    }
    return m;
}

/// Sorted vertex coordinates of every leaf triangle.
inline std::set<std::array<std::pair<double, double>, 3>> leaf_geometry(const Mesh & m)
{
    std::set<std::array<std::pair<double, double>, 3>> out;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto & v = m.triangle(static_cast<Index>(t));
        std::array<std::pair<double, double>, 3> key;
        for (int k = 0; k < 3; ++k)
            key[k] = {m.vertex(v[k]).x, m.vertex(v[k]).y};
        std::sort(key.begin(), key.end());
        out.insert(key);
    }
    return out;
}

/// Edge incidence counts recomputed from the leaf triangle list.
inline std::map<std::pair<Index, Index>, int> edge_incidence(const Mesh & m)
{
    std::map<std::pair<Index, Index>, int> count;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto & v = m.triangle(static_cast<Index>(t));
        for (int k = 0; k < 3; ++k)
        {
            Index a = v[k], b = v[(k + 1) % 3];
            if (a > b)
                std::swap(a, b);
            ++count[{a, b}];
        }
    }
    return count;
}

/// No vertex lies strictly inside any leaf edge (brute force over all vertices
/// per edge is too slow, so this checks midpoints, which is where NVB would
/// place a hanging node).
inline bool has_hanging_nodes(const Mesh & m)
{
    std::set<std::pair<double, double>> coords;
    for (const auto & p : m.vertices())
        coords.insert({p.x, p.y});
    for (const auto & [e, c] : edge_incidence(m))
    {
        const Point & p = m.vertex(e.first);
        const Point & q = m.vertex(e.second);
        if (coords.count({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)}))
            return true;
    }
    return false;
}

/// Evaluates the P1 interpolant of vertex values at x by locating a
/// containing leaf triangle with barycentric coordinates.
inline std::optional<double> eval_p1(const Mesh & m, const Eigen::VectorXd & values, Point x)
{
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto & v = m.triangle(static_cast<Index>(t));
        const Point & a = m.vertex(v[0]);
        const Point & b = m.vertex(v[1]);
        const Point & c = m.vertex(v[2]);
        const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        const double l1 = ((x.x - a.x) * (c.y - a.y) - (c.x - a.x) * (x.y - a.y)) / det;
        const double l2 = ((b.x - a.x) * (x.y - a.y) - (x.x - a.x) * (b.y - a.y)) / det;
        const double l0 = 1.0 - l1 - l2;
        constexpr double eps = -1e-12;
        if (l0 >= eps && l1 >= eps && l2 >= eps)
            return l0 * values[v[0]] + l1 * values[v[1]] + l2 * values[v[2]];
    }
    return std::nullopt;
}

/// |u_h - u|_{H1} for vertex values of a P1 function against a closed-form
/// gradient, using a six-point degree-4 rule on each triangle.
template <class Grad>
double h1_semi_error(const Mesh & m, const Eigen::VectorXd & values, Grad exact_grad)
{
    constexpr double a1 = 0.445948490915965, w1 = 0.223381589678011;
    constexpr double a2 = 0.091576213509771, w2 = 0.109951743655322;
    const std::array<std::array<double, 4>, 6> rule{{
        {a1, a1, 1 - 2 * a1, w1}, {a1, 1 - 2 * a1, a1, w1}, {1 - 2 * a1, a1, a1, w1},
        {a2, a2, 1 - 2 * a2, w2}, {a2, 1 - 2 * a2, a2, w2}, {1 - 2 * a2, a2, a2, w2},
    }};
    double sum = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
    {
        const auto & v = m.triangle(static_cast<Index>(t));
        const Point & a = m.vertex(v[0]);
        const Point & b = m.vertex(v[1]);
        const Point & c = m.vertex(v[2]);
        // grad u_h from the 2x2 system on edge vectors
        const double e1x = b.x - a.x, e1y = b.y - a.y, e2x = c.x - a.x, e2y = c.y - a.y;
        const double d1 = values[v[1]] - values[v[0]], d2 = values[v[2]] - values[v[0]];
        const double det = e1x * e2y - e2x * e1y;
        const double gx = (d1 * e2y - d2 * e1y) / det;
        const double gy = (e1x * d2 - e2x * d1) / det;
        const double area = 0.5 * std::abs(det);
        for (const auto & q : rule)
        {
            const double x = q[0] * a.x + q[1] * b.x + q[2] * c.x;
            const double y = q[0] * a.y + q[1] * b.y + q[2] * c.y;
            const auto g = exact_grad(x, y);
            sum += q[3] * area * ((gx - g[0]) * (gx - g[0]) + (gy - g[1]) * (gy - g[1]));
        }
    }
    return std::sqrt(sum);
}

/// Smooth field vanishing on the boundary of the unit square, varied by `s`.
inline double bump(double x, double y, double s)
{
    return std::sin(M_PI * x) * std::sin(M_PI * y) * (1.0 + s * x * y) + 0.3 * s * std::sin(2 * M_PI * x) * std::sin(M_PI * y);
}

/// N snapshots on independent random refinements of a Dirichlet square:
/// nodal interpolants of smooth fields plus small random noise.
inline SnapshotSet random_snapshot_set(std::mt19937 & rng, std::size_t n, int rounds,
                                       InnerProduct ip = InnerProduct::h1_semi)
{
    const Mesh base = Mesh::structured(3, 3, {0, 0, 1, 1}, SideTags::all(BoundaryTag::dirichlet));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SnapshotSet set;
    set.ip = ip;
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto space = build_space(random_refinement(base, rng, rounds, 0.3), ip);
        const double s = unit(rng);
        Eigen::VectorXd values(static_cast<Eigen::Index>(space->mesh().num_vertices()));
        for (Index v = 0; v < static_cast<Index>(values.size()); ++v)
            values[v] = bump(space->mesh().vertex(v).x, space->mesh().vertex(v).y, s) + 0.05 * (unit(rng) - 0.5);
        set.snapshots.emplace_back(space, space->restrict_values(values));
        set.labels.push_back({s, 0});
    }
    return set;
}

/// Function on `space` given by vertex values on its mesh.
inline FeFunction from_vertex_values(const SpacePtr & space, const Eigen::VectorXd & values)
{
    return FeFunction(space, space->restrict_values(values));
}

inline Eigen::VectorXd random_vector(std::size_t n, std::mt19937 & rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = g(rng);
    return v;
}

inline double rel_diff(double a, double b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

} // namespace adapod::test
