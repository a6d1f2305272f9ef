#include "doctest.h"

#include "adapod/error.hpp"
#include "adapod/mesh.hpp"
#include "support.hpp"

#include <random>

using namespace adapod;
using adapod::test::leaf_geometry;

namespace {

Mesh unit_square(SideTags tags = {})
{
    return Mesh::structured(1, 1, {0.0, 0.0, 1.0, 1.0}, tags);
}

double total_area(const Mesh & m)
{
    double a = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
        a += m.area(static_cast<Index>(t));
    return a;
}

} // namespace

TEST_CASE("structured meshes")
{
    const Mesh m = unit_square();
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_triangles() == 2);

    const Mesh strip = Mesh::structured(2, 1, {0.0, 0.0, 1.0, 0.5});
    CHECK(strip.num_vertices() == 6);
    CHECK(strip.num_triangles() == 4);
    for (std::size_t t = 0; t < strip.num_triangles(); ++t)
        CHECK(strip.area(static_cast<Index>(t)) == doctest::Approx(0.125).epsilon(1e-15));

    CHECK_THROWS_AS(Mesh::structured(0, 1, {0, 0, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Mesh::structured(1, 1, {0, 0, 0, 1}), std::invalid_argument);
}

TEST_CASE("root refinement edge is the longest edge")
{
    const Mesh m = Mesh::structured(3, 2, {0.0, 0.0, 2.0, 0.5});
    for (std::size_t r = 0; r < m.num_roots(); ++r)
    {
        const auto & n = m.node(static_cast<Index>(r));
        auto len = [&](Index a, Index b) {
            return std::hypot(m.vertex(a).x - m.vertex(b).x, m.vertex(a).y - m.vertex(b).y);
        };
        const double ref = len(n.v[1], n.v[2]);
        CHECK(ref >= len(n.v[0], n.v[1]));
        CHECK(ref >= len(n.v[2], n.v[0]));
    }
}

TEST_CASE("bisect on the two-triangle square")
{
    const Mesh m = unit_square();
    const std::vector<Index> first{0};
    const Mesh r = bisect(m, first);
    CHECK(r.num_vertices() == 5);
    CHECK(r.num_triangles() == 4);
    CHECK(r.vertex(4) == Point{0.5, 0.5});
    CHECK(r.same_roots(m));

    const Mesh same = bisect(m, std::span<const Index>{});
    CHECK(same_leaf_set(same, m));
    CHECK(same.hash() == m.hash());

    const std::vector<Index> bad{7};
    CHECK_THROWS_AS(bisect(m, bad), std::invalid_argument);

    // input untouched
    CHECK(m.num_triangles() == 2);
}

TEST_CASE("overlay basics")
{
    std::mt19937 rng(7);
    const Mesh base = Mesh::structured(2, 2, {0, 0, 1, 1});
    const Mesh a = adapod::test::random_refinement(base, rng, 3, 0.3);
    const Mesh b = adapod::test::random_refinement(base, rng, 3, 0.3);

    CHECK(same_leaf_set(overlay(a, a), a));
    const Mesh ab = overlay(a, b);
    CHECK(is_refinement_of(ab, a));
    CHECK(is_refinement_of(ab, b));
    CHECK(same_leaf_set(overlay(ab, a), ab));
    CHECK(leaf_geometry(overlay(b, a)) == leaf_geometry(ab));

    const Mesh other = Mesh::structured(2, 2, {0, 0, 2, 1});
    CHECK_THROWS_AS(overlay(a, other), MeshError);
}

TEST_CASE("overlay of two single refinements matches sequential bisection")
{
    // Depth-one forests on a shared initial mesh, then union by hand.
    const Mesh m1 = bisect(unit_square(), std::vector<Index>{0});
    REQUIRE(m1.num_triangles() == 4);

    const std::vector<Index> mark_a{0};
    const std::vector<Index> mark_b{3};
    const Mesh a = bisect(m1, mark_a);
    const Mesh b = bisect(m1, mark_b);

    // Leaf of `a` with the geometry of m1's triangle 3.
    Index b_in_a = no_index;
    const auto & tb = m1.triangle(3);
    for (std::size_t t = 0; t < a.num_triangles(); ++t)
    {
        const auto & ta = a.triangle(static_cast<Index>(t));
        bool same = true;
        for (int k = 0; k < 3; ++k)
            same = same && a.vertex(ta[k]) == m1.vertex(tb[k]);
        if (same)
            b_in_a = static_cast<Index>(t);
    }
    REQUIRE(b_in_a != no_index);
    const Mesh sequential = bisect(a, std::vector<Index>{b_in_a});
    CHECK(leaf_geometry(overlay(a, b)) == leaf_geometry(sequential));
}

TEST_CASE("prolongation examples")
{
    const Mesh m = unit_square();
    const Prolongation id = prolongation(m, m);
    CHECK(id.weights.rows() == 4);
    CHECK(id.weights.nonZeros() == 4);
    for (int i = 0; i < 4; ++i)
        CHECK(id.weights.coeff(i, i) == 1.0);

    const Mesh fine = refine_uniform(m, 1);
    const Prolongation p = prolongation(m, fine);
    REQUIRE(fine.num_vertices() == 5);
    // centre is the midpoint of the diagonal (0,0)-(1,1)
    CHECK(p.weights.coeff(4, 0) == 0.5);
    CHECK(p.weights.coeff(4, 3) == 0.5);
    CHECK(p.weights.row(4).sum() == 1.0);

    CHECK_THROWS_AS(prolongation(fine, m), MeshError);
}

TEST_CASE("mesh properties over randomized refinement")
{
    std::mt19937 rng(2024);
    const Mesh base = Mesh::structured(3, 2, {0.0, 0.0, 1.0, 0.5});
    const double domain_area = 0.5;

    Mesh m = base;
    for (int round = 0; round < 10; ++round)
    {
        m = bisect(m, adapod::test::random_marking(m, rng, 0.15));
        for (const auto & [edge, count] : adapod::test::edge_incidence(m))
            REQUIRE((count == 1 || count == 2));
        REQUIRE_FALSE(adapod::test::has_hanging_nodes(m));
        CHECK(std::abs(total_area(m) - domain_area) <= 1e-12 * domain_area);
        for (std::size_t t = 0; t < m.num_triangles(); ++t)
            REQUIRE(m.area(static_cast<Index>(t)) > 0.0);
    }
}

TEST_CASE("periodic sides refine in lockstep")
{
    const Mesh base = Mesh::structured(4, 2, {0.0, 0.0, 1.0, 0.5}, SideTags::periodic_x());
    const Mesh m = adapod::test::refine_near(base, {0.02, 0.2}, 0.1, 6);
    std::set<double> left, right;
    for (const auto & p : m.vertices())
    {
        if (p.x == 0.0)
            left.insert(p.y);
        if (p.x == 1.0)
            right.insert(p.y);
    }
    CHECK(left.size() > 3);
    CHECK(left == right);
}

TEST_CASE("forest reconstruction")
{
    std::mt19937 rng(5);
    const Mesh m = adapod::test::random_refinement(Mesh::structured(2, 2, {0, 0, 1, 1}), rng, 4, 0.3);
    std::vector<Point> vertices(m.vertices().begin(), m.vertices().end());
    std::vector<ForestNode> nodes(m.forest().begin(), m.forest().end());
    const Mesh copy = Mesh::from_forest(vertices, nodes);
    CHECK(copy.hash() == m.hash());
    CHECK(same_leaf_set(copy, m));

    // dropping one child leaves an invalid forest
    nodes.pop_back();
    CHECK_THROWS_AS(Mesh::from_forest(vertices, nodes), MeshError);
}
