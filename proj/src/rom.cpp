#include "adapod/rom.hpp"

#include "adapod/error.hpp"
#include "adapod/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <optional>
#include <string>

namespace adapod {

namespace {

void check_dim(const PodBasis & basis, std::size_t r)
{
    if (r == 0 || r > basis.rank)
        throw std::invalid_argument("reduced dimension " + std::to_string(r) + " outside [1, "
                                    + std::to_string(basis.rank) + "]");
}

const Matrix & common_values(const PodBasis & basis)
{
    if (!basis.has_common())
        throw std::invalid_argument("basis carries no common-space values (build it with the common strategy)");
    return basis.common_values;
}

/// Per-pair form values on the overlay of two snapshot meshes.
struct PairForms
{
    double cx_mn, cx_nm, cy_mn, cy_nm, k;
};

PairForms pair_forms(const FeFunction & um, const FeFunction & un)
{
    const Mesh & a = um.space->mesh();
    const Mesh & b = un.space->mesh();
    Vector pm = um.vertex_values();
    Vector pn = un.vertex_values();
    const Mesh * target = &a;
    std::optional<Mesh> common;
    if (&a != &b && !(a.hash() == b.hash() && same_leaf_set(a, b)))
    {
        common.emplace(overlay(a, b));
        pm = prolongation(a, *common).apply(pm);
        pn = prolongation(b, *common).apply(pn);
        target = &*common;
    }
    const SparseMatrix cx = assemble_vertex(*target, OperatorKind::convection_x);
    const SparseMatrix cy = assemble_vertex(*target, OperatorKind::convection_y);
    const SparseMatrix k = assemble_vertex(*target, OperatorKind::stiffness);
    const Vector cxn = cx * pn, cxm = cx * pm;
    const Vector cyn = cy * pn, cym = cy * pm;
    return {pm.dot(cxn), pn.dot(cxm), pm.dot(cyn), pn.dot(cym), pm.dot(k * pn)};
}

} // namespace

std::string_view to_string(RomStrategy s)
{
    return s == RomStrategy::common ? "common" : "pairs";
}

RomStrategy rom_strategy_from_string(std::string_view name)
{
    if (name == "common")
        return RomStrategy::common;
    if (name == "pairs" || name == "snapshot_pairs")
        return RomStrategy::snapshot_pairs;
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "' (expected common or pairs)");
}

EllipticRom EllipticRom::truncated(std::size_t r) const
{
    if (r == 0 || r > dim())
        throw std::invalid_argument("truncation outside the ROM dimension");
    const auto n = static_cast<Eigen::Index>(r);
    return {ax.topLeftCorner(n, n), ay.topLeftCorner(n, n), anu.topLeftCorner(n, n), f.head(n), nu};
}

EllipticRom assemble_elliptic_rom(const PodBasis & basis, const SnapshotSet & snaps, std::size_t r,
                                  RomStrategy strategy, const EllipticProblem & problem, unsigned threads)
{
    check_dim(basis, r);
    const auto rr = static_cast<Eigen::Index>(r);
    EllipticRom rom;
    rom.nu = problem.nu;

    if (strategy == RomStrategy::common)
    {
        const Matrix phi = common_values(basis).leftCols(rr);
        const Mesh & m = *basis.common_mesh;
        rom.ax = phi.transpose() * (assemble_vertex(m, OperatorKind::convection_x) * phi);
        rom.ay = phi.transpose() * (assemble_vertex(m, OperatorKind::convection_y) * phi);
        const Matrix k = phi.transpose() * (assemble_vertex(m, OperatorKind::stiffness) * phi);
        rom.anu = problem.nu * 0.5 * (k + k.transpose());
        rom.f = phi.transpose() * assemble_vertex_load(m, problem.f);
        return rom;
    }

    snaps.validate();
    const std::size_t n = snaps.size();
    if (static_cast<Eigen::Index>(n) != basis.coefficients.cols())
        throw std::invalid_argument("snapshot set does not match the basis");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            pairs.emplace_back(i, j);
    std::vector<PairForms> forms(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        forms[p] = pair_forms(snaps.snapshots[pairs[p].first], snaps.snapshots[pairs[p].second]);
    });

    // S(m, n) = form(u_n, u_m): trial n, test m
    const auto nn = static_cast<Eigen::Index>(n);
    Matrix sx(nn, nn), sy(nn, nn), sk(nn, nn);
    for (std::size_t p = 0; p < pairs.size(); ++p)
    {
        const auto m = static_cast<Eigen::Index>(pairs[p].first);
        const auto q = static_cast<Eigen::Index>(pairs[p].second);
        sx(m, q) = forms[p].cx_mn;
        sx(q, m) = forms[p].cx_nm;
        sy(m, q) = forms[p].cy_mn;
        sy(q, m) = forms[p].cy_nm;
        sk(m, q) = sk(q, m) = forms[p].k;
    }
    Vector fs(nn);
    parallel_for(n, threads, [&](std::size_t i) {
        const FeFunction & u = snaps.snapshots[i];
        fs[static_cast<Eigen::Index>(i)] = assemble_vertex_load(u.space->mesh(), problem.f).dot(u.vertex_values());
    });

    const Matrix c = basis.coefficients.topRows(rr);
    rom.ax = c * sx * c.transpose();
    rom.ay = c * sy * c.transpose();
    const Matrix k = c * sk * c.transpose();
    rom.anu = problem.nu * 0.5 * (k + k.transpose());
    rom.f = c * fs;
    return rom;
}

Vector solve_elliptic_rom(const EllipticRom & rom, double mu, std::size_t r)
{
    const EllipticRom & use = (r == 0 || r == rom.dim()) ? rom : rom.truncated(r);
    if (use.dim() == 0)
        return Vector(0);
    const auto v = EllipticProblem::velocity(mu);
    const Matrix a = v[0] * use.ax + v[1] * use.ay + use.anu;
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible())
        throw SolverError("reduced elliptic system is singular");
    return lu.solve(use.f);
}

BurgersRom BurgersRom::truncated(std::size_t r) const
{
    const std::size_t d = dim();
    if (r == 0 || r > d)
        throw std::invalid_argument("truncation outside the ROM dimension");
    const auto n = static_cast<Eigen::Index>(r);
    BurgersRom out;
    out.mass = mass.topLeftCorner(n, n);
    out.stiffness = stiffness.topLeftCorner(n, n);
    out.b0 = b0.head(n);
    out.tau = tau;
    out.nu = nu;
    out.tensor.resize(r * r * r);
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j)
                out.tensor[(a * r + i) * r + j] = tensor[(a * d + i) * d + j];
    return out;
}

Vector BurgersRom::apply_tensor(const Vector & c) const
{
    const std::size_t d = dim();
    Vector out = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < d; ++r)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i)
        {
            double inner = 0.0;
            const double * row = &tensor[(r * d + i) * d];
            for (std::size_t j = 0; j < d; ++j)
                inner += row[j] * c[static_cast<Eigen::Index>(j)];
            s += c[static_cast<Eigen::Index>(i)] * inner;
        }
        out[static_cast<Eigen::Index>(r)] = s;
    }
    return out;
}

BurgersRom assemble_burgers_rom(const PodBasis & basis, const ScalarField & u0, std::size_t r, double tau,
                                double nu)
{
    check_dim(basis, r);
    if (!(tau > 0.0))
        throw std::invalid_argument("time step must be positive");
    const auto rr = static_cast<Eigen::Index>(r);
    const Matrix phi = common_values(basis).leftCols(rr);
    const Mesh & m = *basis.common_mesh;

    BurgersRom rom;
    rom.tau = tau;
    rom.nu = nu;
    const Matrix mass = phi.transpose() * (assemble_vertex(m, OperatorKind::mass) * phi);
    rom.mass = 0.5 * (mass + mass.transpose());
    const Matrix k = phi.transpose() * (assemble_vertex(m, OperatorKind::stiffness) * phi);
    rom.stiffness = nu * 0.5 * (k + k.transpose());
    rom.b0 = phi.transpose() * assemble_vertex_load(m, u0);

    // B_rij = sum_K (d_x phi_j)|_K int_K phi_i phi_r, accumulated as a
    // (R^2 x chunk) by (chunk x R) product.
    const std::size_t nt = m.num_triangles();
    const std::size_t chunk = 512;
    Matrix t = Matrix::Zero(rr * rr, rr);
    Matrix pairs(rr * rr, static_cast<Eigen::Index>(chunk));
    Matrix grads(static_cast<Eigen::Index>(chunk), rr);
    for (std::size_t start = 0; start < nt; start += chunk)
    {
        const std::size_t count = std::min(chunk, nt - start);
        for (std::size_t c = 0; c < count; ++c)
        {
            const auto tri = static_cast<Index>(start + c);
            const auto & v = m.triangle(tri);
            const Point & a = m.vertex(v[0]);
            const Point & b = m.vertex(v[1]);
            const Point & d = m.vertex(v[2]);
            const double det = (b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y);
            const double gx[3] = {(b.y - d.y) / det, (d.y - a.y) / det, (a.y - b.y) / det};
            const double area = 0.5 * det;

            Eigen::Matrix<double, 3, Eigen::Dynamic> x(3, rr);
            for (int k3 = 0; k3 < 3; ++k3)
                x.row(k3) = phi.row(v[k3]);
            Eigen::Matrix3d ml = Eigen::Matrix3d::Constant(area / 12.0);
            ml.diagonal().setConstant(area / 6.0);
            const Matrix local = x.transpose() * (ml * x);
            pairs.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(local.data(), rr * rr);
            grads.row(static_cast<Eigen::Index>(c)) = gx[0] * x.row(0) + gx[1] * x.row(1) + gx[2] * x.row(2);
        }
        const auto cc = static_cast<Eigen::Index>(count);
        t.noalias() += pairs.leftCols(cc) * grads.topRows(cc);
    }
    // local is symmetric, so its column-major index i + r R equals (r, i)
    rom.tensor.resize(r * r * r);
    for (Eigen::Index a = 0; a < rr; ++a)
        for (Eigen::Index i = 0; i < rr; ++i)
            for (Eigen::Index j = 0; j < rr; ++j)
                rom.tensor[static_cast<std::size_t>((a * rr + i) * rr + j)] = t(a * rr + i, j);
    return rom;
}

RomTrajectory integrate_burgers_rom(const BurgersRom & rom, double mu, int levels)
{
    if (levels < 1)
        throw std::invalid_argument("need at least one time level");
    const std::size_t d = rom.dim();
    const auto n = static_cast<Eigen::Index>(d);
    RomTrajectory traj;
    traj.coefficients.reserve(static_cast<std::size_t>(levels));

    Eigen::LDLT<Matrix> mass_solver(rom.mass);
    if (mass_solver.info() != Eigen::Success)
        throw SolverError("reduced mass matrix is not positive definite");
    traj.coefficients.push_back(mass_solver.solve(mu * rom.b0));

    const Matrix linear = rom.mass + rom.tau * rom.stiffness;
    Matrix x(n, n), y(n, n);
    for (int k = 1; k < levels; ++k)
    {
        const Vector & prev = traj.coefficients.back();
        const Vector rhs = rom.mass * prev;
        Vector b = prev;
        for (int it = 0;; ++it)
        {
            // x(r, i) = sum_j B_rij b_j, y(r, j) = sum_i B_rij b_i
            x.setZero();
            y.setZero();
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t i = 0; i < d; ++i)
                {
                    const double * row = &rom.tensor[(r * d + i) * d];
                    double s = 0.0;
                    const double bi = b[static_cast<Eigen::Index>(i)];
                    for (std::size_t j = 0; j < d; ++j)
                    {
                        s += row[j] * b[static_cast<Eigen::Index>(j)];
                        y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) += row[j] * bi;
                    }
                    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = s;
                }
            const Vector residual = linear * b - rhs + rom.tau * (x * b);
            const double norm = d ? residual.lpNorm<Eigen::Infinity>() : 0.0;
            if (norm <= newton_tolerance)
                break;
            if (it == newton_max_iterations || !std::isfinite(norm))
                throw SolverError("reduced Newton iteration did not converge at level " + std::to_string(k + 1), norm);
            const Matrix jac = linear + rom.tau * (x + y);
            b -= jac.partialPivLu().solve(residual);
        }
        traj.coefficients.push_back(b);
    }
    return traj;
}

} // namespace adapod
