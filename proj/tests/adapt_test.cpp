#include "doctest.h"

#include "adapod/adapt.hpp"
#include "adapod/error.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace adapod;

namespace {

const SideTags dirichlet = SideTags::all(BoundaryTag::dirichlet);

bool touches_boundary(const Mesh & m, Index t)
{
    for (Index v : m.triangle(t))
    {
        const Point & p = m.vertex(v);
        if (p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0)
            return true;
    }
    return false;
}

} // namespace

TEST_CASE("indicator vanishes for linear functions")
{
    std::mt19937 rng(4);
    const Mesh m = adapod::test::random_refinement(
        Mesh::structured(3, 3, {0, 0, 1, 1}, SideTags::all(BoundaryTag::neumann)), rng, 4, 0.3);
    const auto space = build_space(m, InnerProduct::h1_full);
    Vector values(static_cast<Eigen::Index>(m.num_vertices()));
    for (Index v = 0; v < static_cast<Index>(m.num_vertices()); ++v)
        values[v] = 2.0 * m.vertex(v).x - 0.5 * m.vertex(v).y + 1.0;
    const ErrorIndicator ind = estimate(*space, FeFunction(space, space->restrict_values(values)), 0.3);
    CHECK(ind.max() < 1e-13);
}

TEST_CASE("indicator for a hat function on the two-triangle square")
{
    const auto space = build_space(Mesh::structured(1, 1, {0, 0, 1, 1}, SideTags::all(BoundaryTag::neumann)),
                                   InnerProduct::h1_full);
    Index corner = no_index;
    for (Index v = 0; v < 4; ++v)
        if (space->mesh().vertex(v) == Point{1.0, 0.0})
            corner = v;
    REQUIRE(corner != no_index);
    Vector c = Vector::Zero(4);
    c[space->dof_of_vertex(corner)] = 1.0;
    const FeFunction hat(space, c);

    // gradients (1,-1) and (0,0) across the diagonal of length sqrt(2):
    // jump = 2/sqrt(2), E = sqrt(0.5 * 2 * 2) on both triangles
    const ErrorIndicator ind = estimate(*space, hat, 1.0);
    REQUIRE(ind.values.size() == 2);
    CHECK(ind.values[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ind.values[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ind.total() == doctest::Approx(2.0).epsilon(1e-14));

    const ErrorIndicator scaled = estimate(*space, hat, 0.01);
    for (std::size_t t = 0; t < 2; ++t)
        CHECK(scaled.values[t] == doctest::Approx(0.01 * ind.values[t]).epsilon(1e-14));
}

TEST_CASE("indicator properties")
{
    std::mt19937 rng(12);
    const Mesh m = adapod::test::random_refinement(Mesh::structured(2, 2, {0, 0, 1, 1}, dirichlet), rng, 5, 0.3);
    const auto space = build_space(m, InnerProduct::h1_semi);
    const FeFunction u(space, adapod::test::random_vector(space->n_dof(), rng));
    const ErrorIndicator a = estimate(*space, u, 1.0);
    const ErrorIndicator b = estimate(*space, u, 0.25);
    double sq = 0.0;
    for (std::size_t t = 0; t < a.values.size(); ++t)
    {
        CHECK(std::isfinite(a.values[t]));
        CHECK(a.values[t] >= 0.0);
        CHECK(b.values[t] == doctest::Approx(0.25 * a.values[t]).epsilon(1e-13));
        sq += a.values[t] * a.values[t];
    }
    CHECK(std::abs(a.total() - std::sqrt(sq)) <= 1e-13 * a.total());
}

TEST_CASE("maximum marking")
{
    CHECK(mark(ErrorIndicator{{0.0, 0.0, 0.0}}, 0.5).empty());
    CHECK(mark(ErrorIndicator{{4.0, 3.0, 1.0}}, 0.5) == std::vector<Index>{0, 1});
    CHECK(mark(ErrorIndicator{{1.0, 5.0, 5.0, 2.0}}, 1.0) == std::vector<Index>{1, 2});
    CHECK_THROWS_AS(mark(ErrorIndicator{{1.0}}, 0.0), std::invalid_argument);

    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial)
    {
        ErrorIndicator ind;
        for (int i = 0; i < 30; ++i)
            ind.values.push_back(u(rng));
        const auto marked = mark(ind, u(rng) * 0.9 + 0.1);
        std::vector<bool> is_marked(ind.values.size(), false);
        for (Index t : marked)
            is_marked[t] = true;
        for (std::size_t i = 0; i < ind.values.size(); ++i)
            for (std::size_t j = 0; j < ind.values.size(); ++j)
                if (is_marked[j] && ind.values[i] >= ind.values[j])
                    CHECK(is_marked[i]);
    }
}

TEST_CASE("adaptive elliptic solve")
{
    const Mesh initial = Mesh::structured(4, 4, {0, 0, 1, 1}, dirichlet);
    const EllipticProblem problem;

    AdaptConfig none;
    const AdaptResult trivial = adaptive_solve_elliptic(initial, 0.0, problem, none);
    CHECK(trivial.rounds() == 0);
    CHECK(trivial.reason == StopReason::tolerance);
    CHECK(same_leaf_set(trivial.space()->mesh(), initial));

    AdaptConfig cfg;
    cfg.tol = 2e-3;
    cfg.max_dof = 4000;
    const AdaptResult r = adaptive_solve_elliptic(initial, 0.0, problem, cfg);
    CHECK(r.rounds() > 0);
    CHECK(r.log.back().max_indicator <= cfg.tol);

    // outflow layer at x = 1: refinement gathers at the boundary
    const Mesh & m = r.space()->mesh();
    std::size_t boundary = 0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
        boundary += touches_boundary(m, static_cast<Index>(t));
    const Mesh uniform = refine_uniform(initial, 2 * static_cast<int>(std::round(std::log2(
                                                      std::sqrt(m.num_triangles() / 32.0)))));
    std::size_t uniform_boundary = 0;
    for (std::size_t t = 0; t < uniform.num_triangles(); ++t)
        uniform_boundary += touches_boundary(uniform, static_cast<Index>(t));
    CHECK(double(boundary) / m.num_triangles() > double(uniform_boundary) / uniform.num_triangles());

    AdaptConfig tighter = cfg;
    tighter.tol = cfg.tol / 4;
    tighter.max_dof = 20000;
    const AdaptResult fine = adaptive_solve_elliptic(initial, 0.0, problem, tighter);
    CHECK(fine.log.back().max_indicator <= r.log.back().max_indicator);

    // identical inputs give identical meshes and solutions
    const AdaptResult again = adaptive_solve_elliptic(initial, 0.0, problem, cfg);
    CHECK(again.space()->hash() == r.space()->hash());
    CHECK(again.solution.coefficients == r.solution.coefficients);

    AdaptConfig capped = cfg;
    capped.max_dof = 100;
    CHECK(adaptive_solve_elliptic(initial, 0.0, problem, capped).reason == StopReason::max_dof);
    AdaptConfig bad;
    bad.theta = 1.5;
    CHECK_THROWS_AS(adaptive_solve_elliptic(initial, 0.0, problem, bad), ConfigError);
}

TEST_CASE("indicator after uniform refinement")
{
    const Mesh initial = Mesh::structured(4, 4, {0, 0, 1, 1}, dirichlet);
    const EllipticProblem problem;
    AdaptConfig cfg;
    cfg.tol = 5e-3;
    const AdaptResult r = adaptive_solve_elliptic(initial, 0.5, problem, cfg);
    const auto v = EllipticProblem::velocity(0.5);
    const auto fine = build_space(refine_uniform(r.space()->mesh(), 1), InnerProduct::h1_semi);
    const FeFunction u = solve_elliptic(fine, v[0], v[1], problem.nu, problem.f);
    CHECK(estimate(*fine, u, problem.nu).max() <= 1.1 * r.log.back().max_indicator);
}

TEST_CASE("adaptive Burgers step")
{
    const Mesh initial = Mesh::structured(8, 4, {0, 0, 1, 0.5}, SideTags::periodic_x());
    const auto space = build_space(initial, InnerProduct::h1_full);
    AdaptConfig cfg;
    cfg.tol = 1e-4;
    cfg.max_dof = 3000;

    const AdaptResult zero = adaptive_burgers_step(FeFunction::zero(space), 0.01, 0.001, cfg);
    CHECK(zero.rounds() == 0);
    CHECK(zero.solution.coefficients.isZero(0.0));

    const ScalarField u0 = [](double x, double y) {
        return 0.5 + 0.5 * std::sin((x - y - 0.75) * M_PI) * std::sin((x + y + 0.25) * M_PI);
    };
    const AdaptResult start = adaptive_projection(initial, u0, 0.001, cfg);
    CHECK(start.rounds() > 0);

    AdaptConfig off;
    const FeFunction plain = burgers_fom_step(start.solution, start.space(), 0.01, 0.001);
    const AdaptResult same = adaptive_burgers_step(start.solution, 0.01, 0.001, off);
    CHECK(same.space()->hash() == start.space()->hash());
    CHECK((same.solution.coefficients - plain.coefficients).cwiseAbs().maxCoeff() == 0.0);

    const AdaptResult step = adaptive_burgers_step(start.solution, 0.01, 0.001, cfg);
    CHECK(is_refinement_of(step.space()->mesh(), start.space()->mesh()));
}
