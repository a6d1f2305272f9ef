#include "adapod/pod.hpp"

#include "adapod/error.hpp"
#include "adapod/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <string>

namespace adapod {

void SnapshotSet::validate() const
{
    if (snapshots.empty())
        throw std::invalid_argument("snapshot set is empty");
    if (labels.size() != snapshots.size())
        throw std::invalid_argument("snapshot set has " + std::to_string(labels.size()) + " labels for "
                                    + std::to_string(snapshots.size()) + " snapshots");
    const Mesh & first = snapshots.front().space->mesh();
    for (std::size_t n = 1; n < snapshots.size(); ++n)
        if (!snapshots[n].space->mesh().same_roots(first))
            throw MeshError("snapshot " + std::to_string(n) + " is not refined from the shared initial mesh");
}

double cross_inner_product(const FeFunction & u, const FeFunction & v, InnerProduct ip)
{
    const Mesh & mu = u.space->mesh();
    const Mesh & mv = v.space->mesh();
    const Vector uv = u.vertex_values();
    const Vector vv = v.vertex_values();
    if (&mu == &mv || (mu.hash() == mv.hash() && same_leaf_set(mu, mv)))
        return uv.dot(inner_product_matrix(mu, ip) * vv);
    if (!mu.same_roots(mv))
        throw MeshError("inner product of functions on meshes with different initial meshes");
    const Mesh common = overlay(mu, mv);
    const Vector pu = prolongation(mu, common).apply(uv);
    const Vector pv = prolongation(mv, common).apply(vv);
    return pu.dot(inner_product_matrix(common, ip) * pv);
}

CommonSpace build_common_space(const SnapshotSet & snaps, unsigned threads)
{
    snaps.validate();
    // distinct meshes in order of first appearance
    std::vector<const Mesh *> meshes;
    std::map<std::uint64_t, std::vector<const Mesh *>> seen;
    for (const auto & s : snaps.snapshots)
    {
        const Mesh * m = &s.space->mesh();
        auto & bucket = seen[m->hash()];
        bool dup = false;
        for (const Mesh * other : bucket)
            dup = dup || other == m || same_leaf_set(*other, *m);
        if (!dup)
        {
            bucket.push_back(m);
            meshes.push_back(m);
        }
    }

    CommonSpace common;
    common.mesh = std::make_shared<const Mesh>(overlay(std::span<const Mesh * const>(meshes)));
    common.values.resize(static_cast<Eigen::Index>(common.mesh->num_vertices()),
                         static_cast<Eigen::Index>(snaps.size()));
    parallel_for(snaps.size(), threads, [&](std::size_t n) {
        const FeFunction & u = snaps.snapshots[n];
        common.values.col(static_cast<Eigen::Index>(n)) =
            prolongation(u.space->mesh(), *common.mesh).apply(u.vertex_values());
    });
    return common;
}

Matrix gramian_common(const CommonSpace & common, InnerProduct ip)
{
    const SparseMatrix k = inner_product_matrix(*common.mesh, ip);
    const Matrix ku = k * common.values;
    Matrix g = common.values.transpose() * ku;
    return 0.5 * (g + g.transpose());
}

Matrix gramian_common(const SnapshotSet & snaps, unsigned threads)
{
    return gramian_common(build_common_space(snaps, threads), snaps.ip);
}

Matrix gramian_pairwise(const SnapshotSet & snaps, unsigned threads)
{
    snaps.validate();
    const std::size_t n = snaps.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            pairs.emplace_back(i, j);

    std::vector<double> values(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        values[p] = cross_inner_product(snaps.snapshots[i], snaps.snapshots[j], snaps.ip);
    });

    Matrix g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t p = 0; p < pairs.size(); ++p)
    {
        const auto i = static_cast<Eigen::Index>(pairs[p].first);
        const auto j = static_cast<Eigen::Index>(pairs[p].second);
        g(i, j) = values[p];
        g(j, i) = values[p];
    }
    return g;
}

SymmetricEigen eig_sym(const Matrix & g)
{
    if (g.rows() != g.cols())
        throw std::invalid_argument("eig_sym needs a square matrix");
    const double scale = g.cwiseAbs().maxCoeff();
    if (g.size() && (g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("eig_sym needs a symmetric matrix");

    const auto n = g.rows();
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    if (n == 0)
        return out;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(g);
    if (solver.info() != Eigen::Success)
        throw SolverError("symmetric eigensolver did not converge");
    for (Eigen::Index r = 0; r < n; ++r)
    {
        out.values[r] = solver.eigenvalues()[n - 1 - r];
        Vector v = solver.eigenvectors().col(n - 1 - r);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0)
            v = -v;
        out.vectors.col(r) = v;
    }
    return out;
}

std::string_view to_string(GramianStrategy s)
{
    return s == GramianStrategy::common ? "common" : "pairs";
}

GramianStrategy gramian_strategy_from_string(std::string_view name)
{
    if (name == "common")
        return GramianStrategy::common;
    if (name == "pairs" || name == "pairwise")
        return GramianStrategy::pairwise;
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "' (expected common or pairs)");
}

PodBasis pod_from_gramian(const Matrix & gramian, InnerProduct ip, double eps_rank)
{
    const SymmetricEigen eig = eig_sym(gramian);
    PodBasis basis;
    basis.eigenvalues = eig.values;
    basis.gramian = gramian;
    basis.ip = ip;
    const double top = eig.values.size() ? eig.values[0] : 0.0;
    if (top > 0.0)
        while (basis.rank < static_cast<std::size_t>(eig.values.size())
               && eig.values[static_cast<Eigen::Index>(basis.rank)] > eps_rank * top)
            ++basis.rank;
    const auto d = static_cast<Eigen::Index>(basis.rank);
    basis.coefficients.resize(d, gramian.cols());
    for (Eigen::Index r = 0; r < d; ++r)
        basis.coefficients.row(r) = eig.vectors.col(r).transpose() / std::sqrt(eig.values[r]);
    return basis;
}

Matrix basis_on_common(const PodBasis & basis, const CommonSpace & common, std::size_t r)
{
    if (r > basis.rank)
        throw std::invalid_argument("requested more basis functions than the POD rank");
    return common.values * basis.coefficients.topRows(static_cast<Eigen::Index>(r)).transpose();
}

PodBasis compute_pod(const SnapshotSet & snaps, GramianStrategy strategy, double eps_rank, unsigned threads)
{
    if (strategy == GramianStrategy::pairwise)
        return pod_from_gramian(gramian_pairwise(snaps, threads), snaps.ip, eps_rank);
    const CommonSpace common = build_common_space(snaps, threads);
    PodBasis basis = pod_from_gramian(gramian_common(common, snaps.ip), snaps.ip, eps_rank);
    basis.common_mesh = common.mesh;
    basis.common_values = basis_on_common(basis, common, basis.rank);
    return basis;
}

Vector project(const PodBasis & basis, const SnapshotSet & snaps, const FeFunction & u, std::size_t r)
{
    if (r > basis.rank)
        throw std::invalid_argument("projection dimension exceeds the POD rank");
    if (static_cast<Eigen::Index>(snaps.size()) != basis.coefficients.cols())
        throw std::invalid_argument("snapshot set does not match the basis");
    Vector g(static_cast<Eigen::Index>(snaps.size()));
    for (std::size_t n = 0; n < snaps.size(); ++n)
        g[static_cast<Eigen::Index>(n)] = cross_inner_product(snaps.snapshots[n], u, basis.ip);
    return basis.coefficients.topRows(static_cast<Eigen::Index>(r)) * g;
}

Vector project_common(const PodBasis & basis, const FeFunction & u, std::size_t r)
{
    if (!basis.has_common())
        throw std::invalid_argument("basis carries no common-space values");
    if (r > basis.rank)
        throw std::invalid_argument("projection dimension exceeds the POD rank");
    const Vector pu = prolongation(u.space->mesh(), *basis.common_mesh).apply(u.vertex_values());
    const Vector ku = inner_product_matrix(*basis.common_mesh, basis.ip) * pu;
    return basis.common_values.leftCols(static_cast<Eigen::Index>(r)).transpose() * ku;
}

double truncation_energy(const PodBasis & basis, std::size_t r)
{
    if (r > basis.rank)
        throw std::invalid_argument("truncation index exceeds the POD rank");
    double s = 0.0;
    for (std::size_t i = r; i < basis.rank; ++i)
        s += basis.eigenvalues[static_cast<Eigen::Index>(i)];
    return s;
}

} // namespace adapod
