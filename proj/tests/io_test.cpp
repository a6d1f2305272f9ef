#include "doctest.h"

#include "adapod/error.hpp"
#include "adapod/io.hpp"
#include "adapod/bench.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace adapod;
namespace fs = std::filesystem;

namespace {

/// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir
{
    fs::path path;

    explicit TempDir(const std::string & name)
    {
        path = fs::temp_directory_path() / ("adapod_" + name + "_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string file(const std::string & name) const { return (path / name).string(); }
};

bool same_bits(double a, double b)
{
    return std::memcmp(&a, &b, sizeof a) == 0;
}

bool same_bits(const Matrix & a, const Matrix & b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return false;
    return a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * std::size_t(a.size())) == 0;
}

void write_text(const std::string & path, const std::string & text)
{
    std::ofstream(path) << text;
}

std::string error_of(const std::function<void()> & f)
{
    try
    {
        f();
    }
    catch (const IoError & e)
    {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("mesh round trip")
{
    std::mt19937 rng(21);
    const Mesh bases[] = {
        Mesh::structured(3, 3, {0, 0, 1, 1}, SideTags::all(BoundaryTag::dirichlet)),
        Mesh::structured(4, 2, {0, 0, 1, 0.5}, SideTags::periodic_x()),
        Mesh::structured(2, 3, {-1, 0, 0.3, 0.7}, SideTags::all(BoundaryTag::neumann)),
    };
    for (const Mesh & base : bases)
        for (int trial = 0; trial < 4; ++trial)
        {
            const Mesh m = adapod::test::random_refinement(base, rng, 4);
            std::stringstream s;
            write_mesh(s, m);
            const Mesh back = read_mesh(s);
            CHECK(back.hash() == m.hash());
            REQUIRE(back.num_vertices() == m.num_vertices());
            REQUIRE(back.num_nodes() == m.num_nodes());
            for (std::size_t v = 0; v < m.num_vertices(); ++v)
            {
                CHECK(same_bits(back.vertex(Index(v)).x, m.vertex(Index(v)).x));
                CHECK(same_bits(back.vertex(Index(v)).y, m.vertex(Index(v)).y));
            }
            for (std::size_t i = 0; i < m.num_nodes(); ++i)
            {
                CHECK(back.node(Index(i)).v == m.node(Index(i)).v);
                CHECK(back.node(Index(i)).edge_tag == m.node(Index(i)).edge_tag);
            }
            CHECK(same_leaf_set(back, m));
        }
}

TEST_CASE("function round trip")
{
    std::mt19937 rng(22);
    const Mesh m = adapod::test::random_refinement(Mesh::structured(3, 3, {0, 0, 1, 1}), rng, 3);
    const auto space = build_space(m, InnerProduct::h1_semi);
    const FeFunction u(space, adapod::test::random_vector(space->n_dof(), rng) * 1e-3);
    std::stringstream s;
    write_function(s, u);
    const FeFunction back = read_function(s, space);
    CHECK(same_bits(back.coefficients, u.coefficients));

    const auto other = build_space(Mesh::structured(3, 3, {0, 0, 1, 1}), InnerProduct::h1_semi);
    std::stringstream again;
    write_function(again, u);
    CHECK_THROWS_AS(read_function(again, other), IoError);
}

TEST_CASE("snapshot, basis and ROM files round trip")
{
    TempDir dir("roundtrip");
    std::mt19937 rng(23);
    SnapshotSet set = adapod::test::random_snapshot_set(rng, 6, 3);
    // two snapshots on the same space are stored with one mesh
    set.snapshots.push_back(FeFunction(set.snapshots[0].space, 0.5 * set.snapshots[0].coefficients));
    set.labels.push_back({0.75, 2});
    save_snapshots(dir.file("snaps.txt"), set);
    const SnapshotSet back = load_snapshots(dir.file("snaps.txt"));
    REQUIRE(back.size() == set.size());
    CHECK(back.ip == set.ip);
    for (std::size_t n = 0; n < set.size(); ++n)
    {
        CHECK(same_bits(back.labels[n].mu, set.labels[n].mu));
        CHECK(back.labels[n].k == set.labels[n].k);
        CHECK(back.snapshots[n].space->hash() == set.snapshots[n].space->hash());
        CHECK(same_bits(back.snapshots[n].coefficients, set.snapshots[n].coefficients));
    }
    CHECK(back.snapshots.back().space == back.snapshots.front().space);

    const PodBasis basis = compute_pod(set, GramianStrategy::pairwise);
    save_basis(dir.file("basis.txt"), basis);
    const PodBasis b = load_basis(dir.file("basis.txt"));
    CHECK(b.rank == basis.rank);
    CHECK(b.ip == basis.ip);
    CHECK(same_bits(b.eigenvalues, basis.eigenvalues));
    CHECK(same_bits(b.coefficients, basis.coefficients));
    CHECK(same_bits(b.gramian, basis.gramian));
    CHECK(!b.has_common());

    EllipticProblem problem;
    const EllipticRom rom = assemble_elliptic_rom(basis, set, 4, RomStrategy::snapshot_pairs, problem);
    save_rom(dir.file("rom.txt"), rom);
    const RomFile rf = load_rom(dir.file("rom.txt"));
    REQUIRE(rf.elliptic);
    CHECK(!rf.burgers);
    CHECK(same_bits(rf.elliptic->ax, rom.ax));
    CHECK(same_bits(rf.elliptic->ay, rom.ay));
    CHECK(same_bits(rf.elliptic->anu, rom.anu));
    CHECK(same_bits(rf.elliptic->f, rom.f));
    CHECK(same_bits(rf.elliptic->nu, rom.nu));

    BurgersRom br;
    br.mass = Matrix::Random(3, 3);
    br.stiffness = Matrix::Random(3, 3);
    br.b0 = Vector::Random(3);
    for (int i = 0; i < 27; ++i)
        br.tensor.push_back(std::ldexp(double(i) - 13.3, -i));
    br.tau = 0.02;
    br.nu = 1e-3;
    save_rom(dir.file("brom.txt"), br);
    const RomFile bf = load_rom(dir.file("brom.txt"));
    REQUIRE(bf.burgers);
    CHECK(same_bits(bf.burgers->mass, br.mass));
    CHECK(same_bits(bf.burgers->stiffness, br.stiffness));
    CHECK(same_bits(bf.burgers->b0, br.b0));
    CHECK(bf.burgers->tensor == br.tensor);
    CHECK(bf.burgers->tau == br.tau);
    CHECK(bf.burgers->nu == br.nu);
}

TEST_CASE("reloaded artifacts give identical CSV output")
{
    TempDir dir("csv");
    ExperimentConfig cfg = ExperimentConfig::convection_diffusion_defaults(true);
    cfg.n_params = 4;
    cfg.adapt.tol = 4e-3;
    cfg.r_values = {1, 2, 3, 4};
    const SnapshotSet snaps = generate_snapshots(cfg, cfg.adapt.tol);
    const SnapshotSet ref = generate_snapshots(cfg, cfg.adapt.tol * cfg.reference_factor);
    save_snapshots(dir.file("s.txt"), snaps);
    save_snapshots(dir.file("r.txt"), ref);

    std::ostringstream a, b;
    write_error_csv(a, error_table(cfg, snaps, ref));
    write_error_csv(b, error_table(cfg, load_snapshots(dir.file("s.txt")), load_snapshots(dir.file("r.txt"))));
    CHECK(a.str() == b.str());

    // basis and ROM through files
    const ReducedModel model = build_reduced_model(cfg, snaps, 4);
    save_basis(dir.file("b.txt"), model.basis);
    save_rom(dir.file("m.txt"), *model.elliptic);
    const PodBasis basis = load_basis(dir.file("b.txt"));
    const RomFile rom = load_rom(dir.file("m.txt"));
    std::ostringstream c, d;
    c.precision(17);
    d.precision(17);
    for (std::size_t r = 1; r <= 4; ++r)
    {
        c << error_pod(model.basis, r) << ',' << error_rom(*model.elliptic, model.basis, snaps, r) << '\n';
        d << error_pod(basis, r) << ',' << error_rom(*rom.elliptic, basis, snaps, r) << '\n';
    }
    CHECK(c.str() == d.str());
}

TEST_CASE("read errors name the file and line")
{
    TempDir dir("errors");
    const std::string missing = dir.file("missing.txt");
    CHECK(error_of([&] { load_snapshots(missing); }).find(missing) != std::string::npos);
    CHECK(error_of([&] { load_mesh(missing); }).find("cannot open") != std::string::npos);

    const std::string bad = dir.file("bad.txt");
    write_text(bad, "ADAPODMESH 2\n");
    CHECK(error_of([&] { load_mesh(bad); }).find("line 1") != std::string::npos);

    write_text(bad, "ADAPODMESH 1\nvertices 2\n0 0\n");
    CHECK(error_of([&] { load_mesh(bad); }).find("end of file") != std::string::npos);

    write_text(bad, "ADAPODMESH 1\nvertices 1\n0 x\n");
    CHECK(error_of([&] { load_mesh(bad); }).find("line 3") != std::string::npos);

    write_text(bad, "ADAPODROM 1\nkind spectral\nR 1\n");
    CHECK(error_of([&] { load_rom(bad); }).find("spectral") != std::string::npos);

    // a structurally valid file describing a non-conforming mesh
    std::stringstream s;
    write_mesh(s, bisect(Mesh::structured(1, 1, {0, 0, 1, 1}), std::vector<Index>{0}));
    std::vector<std::string> lines;
    for (std::string l; std::getline(s, l);)
        lines.push_back(l);
    const auto tags = std::find_if(lines.begin(), lines.end(), [](const std::string & l) { return l.rfind("tags", 0) == 0; });
    REQUIRE(tags - lines.begin() >= 2);
    // drop the children of the second root: its neighbor's split leaves a hanging node
    lines.erase(tags - 2, tags);
    std::string cut_text;
    for (const auto & l : lines)
        cut_text += (l == "triangles 6" ? std::string("triangles 4") : l) + "\n";
    write_text(bad, cut_text);
    CHECK(error_of([&] { load_mesh(bad); }).find("invalid mesh") != std::string::npos);
}
