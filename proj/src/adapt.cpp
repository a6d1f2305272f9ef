#include "adapod/adapt.hpp"

#include "adapod/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace adapod {

namespace {

std::array<double, 2> gradient(const Mesh & mesh, Index t, const Vector & values)
{
    const auto & v = mesh.triangle(t);
    const Point & a = mesh.vertex(v[0]);
    const Point & b = mesh.vertex(v[1]);
    const Point & c = mesh.vertex(v[2]);
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double d1 = values[v[1]] - values[v[0]];
    const double d2 = values[v[2]] - values[v[0]];
    return {(d1 * (c.y - a.y) - d2 * (b.y - a.y)) / det, ((b.x - a.x) * d2 - (c.x - a.x) * d1) / det};
}

template <typename Solve>
AdaptResult adapt_loop(Mesh mesh, double nu, const AdaptConfig & cfg, InnerProduct ip, Solve && solve)
{
    cfg.validate();
    AdaptResult result;
    for (int round = 0;; ++round)
    {
        SpacePtr space = build_space(std::move(mesh), ip);
        result.solution = solve(space);
        const ErrorIndicator ind = estimate(*space, result.solution, nu);
        result.log.push_back({round, space->n_dof(), ind.max(), ind.total()});

        if (ind.max() <= cfg.tol)
        {
            result.reason = StopReason::tolerance;
            break;
        }
        if (space->n_dof() >= cfg.max_dof)
        {
            result.reason = StopReason::max_dof;
            break;
        }
        if (round >= cfg.max_rounds)
        {
            result.reason = StopReason::max_rounds;
            break;
        }
        mesh = bisect(space->mesh(), mark(ind, cfg.theta));
    }
    return result;
}

} // namespace

double ErrorIndicator::max() const
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double ErrorIndicator::total() const
{
    double s = 0.0;
    for (double v : values)
        s += v * v;
    return std::sqrt(s);
}

ErrorIndicator estimate(const FeSpace & space, const FeFunction & u, double nu)
{
    if (u.space.get() != &space && u.space->hash() != space.hash())
        throw std::invalid_argument("estimate: function does not live on the given space");
    const Mesh & mesh = space.mesh();
    const Vector values = u.vertex_values();

    std::vector<std::array<double, 2>> grads(mesh.num_triangles());
    for (std::size_t t = 0; t < grads.size(); ++t)
        grads[t] = gradient(mesh, static_cast<Index>(t), values);

    std::vector<double> sum(mesh.num_triangles(), 0.0);
    for (const auto & e : mesh.edges())
    {
        if (e.is_boundary())
            continue;
        const Point & p = mesh.vertex(e.v[0]);
        const Point & q = mesh.vertex(e.v[1]);
        const double dx = q.x - p.x;
        const double dy = q.y - p.y;
        const double h = std::hypot(dx, dy);
        // unit normal (dy, -dx) / h; the sign drops out when squared
        const auto & g0 = grads[e.triangle[0]];
        const auto & g1 = grads[e.triangle[1]];
        const double jump = nu * ((g0[0] - g1[0]) * dy - (g0[1] - g1[1]) * dx) / h;
        const double c = h * h * jump * jump;
        sum[e.triangle[0]] += c;
        sum[e.triangle[1]] += c;
    }

    ErrorIndicator ind;
    ind.values.resize(sum.size());
    for (std::size_t t = 0; t < sum.size(); ++t)
        ind.values[t] = std::sqrt(0.5 * sum[t]);
    return ind;
}

std::vector<Index> mark(const ErrorIndicator & indicator, double theta)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("marking fraction must lie in (0, 1]");
    std::vector<Index> marked;
    const double top = indicator.max();
    if (top <= 0.0)
        return marked;
    const double threshold = theta * top;
    for (std::size_t t = 0; t < indicator.values.size(); ++t)
        if (indicator.values[t] >= threshold)
            marked.push_back(static_cast<Index>(t));
    return marked;
}

void AdaptConfig::validate() const
{
    if (!(tol > 0.0))
        throw ConfigError("tol must be positive");
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConfigError("theta must lie in (0, 1]");
    if (max_dof == 0)
        throw ConfigError("max_dof must be positive");
    if (max_rounds < 0)
        throw ConfigError("max_rounds must be nonnegative");
}

std::string_view to_string(StopReason reason)
{
    switch (reason)
    {
        case StopReason::tolerance: return "tolerance";
        case StopReason::max_dof: return "max_dof";
        case StopReason::max_rounds: return "max_rounds";
    }
    return "unknown";
}

std::array<double, 2> EllipticProblem::velocity(double mu)
{
    const double angle = 0.25 * std::numbers::pi * mu;
    return {std::cos(angle), std::sin(angle)};
}

AdaptResult adaptive_solve_elliptic(const Mesh & initial, double mu, const EllipticProblem & problem,
                                    const AdaptConfig & cfg, InnerProduct ip)
{
    const auto v = EllipticProblem::velocity(mu);
    return adapt_loop(initial, problem.nu, cfg, ip, [&](const SpacePtr & space) {
        return solve_elliptic(space, v[0], v[1], problem.nu, problem.f);
    });
}

AdaptResult adaptive_projection(const Mesh & initial, const ScalarField & f, double nu, const AdaptConfig & cfg,
                                InnerProduct ip)
{
    return adapt_loop(initial, nu, cfg, ip, [&](const SpacePtr & space) { return l2_projection(space, f); });
}

AdaptResult adaptive_burgers_step(const FeFunction & u_prev, double tau, double nu, const AdaptConfig & cfg)
{
    return adapt_loop(u_prev.space->mesh(), nu, cfg, u_prev.space->inner_product(),
                      [&](const SpacePtr & space) { return burgers_fom_step(u_prev, space, tau, nu); });
}

} // namespace adapod
