#include "adapod/io.hpp"

#include "adapod/error.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace adapod {

namespace {

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_matrix(std::ostream & out, const char * name, const Matrix & m)
{
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out << (j ? " " : "") << real(m(i, j));
        out << '\n';
    }
}

void write_vector(std::ostream & out, const char * name, const Vector & v)
{
    out << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << real(v[i]) << '\n';
}

/// Line-oriented tokenizer with positioned error messages.
class Reader
{
public:
    Reader(std::istream & in, std::string source) : in_(in), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string & msg) const
    {
        throw IoError(source_, "line " + std::to_string(line_) + ": " + msg);
    }

    /// Next non-empty line split into tokens.
    std::vector<std::string> line()
    {
        std::string text;
        while (std::getline(in_, text))
        {
            ++line_;
            std::istringstream s(text);
            std::vector<std::string> tokens;
            for (std::string t; s >> t;)
                tokens.push_back(std::move(t));
            if (!tokens.empty())
                return tokens;
        }
        ++line_;
        fail("unexpected end of file");
    }

    std::vector<std::string> line(std::size_t count)
    {
        auto t = line();
        if (t.size() != count)
            fail("expected " + std::to_string(count) + " fields, found " + std::to_string(t.size()));
        return t;
    }

    void header(const std::string & magic)
    {
        const auto t = line();
        if (t.empty() || t[0] != magic)
            fail("expected header '" + magic + "'");
        if (t.size() != 2 || t[1] != "1")
            fail("unsupported " + magic + " version");
    }

    /// `key value` line.
    std::string keyed(const std::string & key)
    {
        const auto t = line();
        if (t.size() != 2 || t[0] != key)
            fail("expected '" + key + " <value>'");
        return t[1];
    }

    std::size_t count(const std::string & key) { return to_size(keyed(key)); }

    double to_real(const std::string & s) const
    {
        errno = 0;
        char * end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || errno == ERANGE)
            fail("malformed number '" + s + "'");
        return v;
    }

    long long to_int(const std::string & s) const
    {
        long long v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            fail("malformed integer '" + s + "'");
        return v;
    }

    std::size_t to_size(const std::string & s) const
    {
        const long long v = to_int(s);
        if (v < 0)
            fail("negative count '" + s + "'");
        return static_cast<std::size_t>(v);
    }

    Matrix matrix(const std::string & name, Eigen::Index rows, Eigen::Index cols)
    {
        const auto t = line(3);
        if (t[0] != name)
            fail("expected matrix '" + name + "'");
        if (static_cast<Eigen::Index>(to_size(t[1])) != rows || static_cast<Eigen::Index>(to_size(t[2])) != cols)
            fail("matrix '" + name + "' has the wrong shape");
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            const auto row = line(static_cast<std::size_t>(cols));
            for (Eigen::Index j = 0; j < cols; ++j)
                m(i, j) = to_real(row[static_cast<std::size_t>(j)]);
        }
        return m;
    }

    Vector vector(const std::string & name, Eigen::Index size)
    {
        const auto t = line(2);
        if (t[0] != name)
            fail("expected vector '" + name + "'");
        if (static_cast<Eigen::Index>(to_size(t[1])) != size)
            fail("vector '" + name + "' has the wrong length");
        Vector v(size);
        for (Eigen::Index i = 0; i < size; ++i)
            v[i] = to_real(line(1)[0]);
        return v;
    }

    const std::string & source() const { return source_; }

private:
    std::istream & in_;
    std::string source_;
    std::size_t line_ = 0;
};

std::ifstream open_in(const std::string & path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(path, "cannot open for reading");
    return in;
}

template <typename Write>
void write_file(const std::string & path, Write && write)
{
    std::ofstream out(path);
    if (!out)
        throw IoError(path, "cannot open for writing");
    write(out);
    out.flush();
    if (!out)
        throw IoError(path, "write failed");
}

void write_mesh_body(std::ostream & out, const Mesh & mesh)
{
    out << "ADAPODMESH 1\n";
    out << "vertices " << mesh.num_vertices() << '\n';
    for (const auto & p : mesh.vertices())
        out << real(p.x) << ' ' << real(p.y) << '\n';
    // refinement edge is always the edge opposite local vertex 0
    out << "triangles " << mesh.num_nodes() << '\n';
    for (const auto & n : mesh.forest())
        out << n.v[0] << ' ' << n.v[1] << ' ' << n.v[2] << " 0 " << n.parent << '\n';
    out << "tags " << mesh.num_roots() << '\n';
    for (std::size_t r = 0; r < mesh.num_roots(); ++r)
    {
        const auto & t = mesh.node(static_cast<Index>(r)).edge_tag;
        out << to_string(t[0]) << ' ' << to_string(t[1]) << ' ' << to_string(t[2]) << '\n';
    }
}

Mesh read_mesh_body(Reader & r)
{
    r.header("ADAPODMESH");
    const std::size_t nv = r.count("vertices");
    std::vector<Point> vertices(nv);
    for (auto & p : vertices)
    {
        const auto t = r.line(2);
        p = {r.to_real(t[0]), r.to_real(t[1])};
    }
    const std::size_t nt = r.count("triangles");
    std::vector<ForestNode> nodes(nt);
    for (std::size_t i = 0; i < nt; ++i)
    {
        const auto t = r.line(5);
        for (int k = 0; k < 3; ++k)
        {
            const long long v = r.to_int(t[static_cast<std::size_t>(k)]);
            if (v < 0 || static_cast<std::size_t>(v) >= nv)
                r.fail("vertex index " + t[static_cast<std::size_t>(k)] + " out of range");
            nodes[i].v[static_cast<std::size_t>(k)] = static_cast<Index>(v);
        }
        if (t[3] != "0")
            r.fail("refinement edge must be 0 (opposite the newest vertex)");
        const long long parent = r.to_int(t[4]);
        if (parent < -1 || parent >= static_cast<long long>(i))
            r.fail("parent " + t[4] + " must precede triangle " + std::to_string(i));
        nodes[i].parent = static_cast<Index>(parent);
    }
    const std::size_t n_roots = r.count("tags");
    for (std::size_t i = 0; i < nt; ++i)
        if ((i < n_roots) != (nodes[i].parent == no_index))
            r.fail("tag section must cover exactly the root triangles");
    for (std::size_t i = 0; i < n_roots; ++i)
    {
        const auto t = r.line(3);
        for (std::size_t k = 0; k < 3; ++k)
        {
            try
            {
                nodes[i].edge_tag[k] = boundary_tag_from_string(t[k]);
            }
            catch (const std::exception &)
            {
                r.fail("unknown boundary tag '" + t[k] + "'");
            }
        }
    }
    // child tags follow from the parent by bisection
    for (std::size_t i = n_roots; i < nt; ++i)
    {
        ForestNode & n = nodes[i];
        const ForestNode & p = nodes[static_cast<std::size_t>(n.parent)];
        const auto & t = p.edge_tag;
        if (n.v[1] == p.v[0] && n.v[2] == p.v[1])
            n.edge_tag = {t[2], t[0], BoundaryTag::none};
        else if (n.v[1] == p.v[2] && n.v[2] == p.v[0])
            n.edge_tag = {t[1], BoundaryTag::none, t[0]};
        else
            r.fail("triangle " + std::to_string(i) + " is not a bisection child of its parent");
    }
    try
    {
        return Mesh::from_forest(std::move(vertices), std::move(nodes));
    }
    catch (const MeshError & e)
    {
        throw IoError(r.source(), std::string("invalid mesh: ") + e.what());
    }
}

void write_function_body(std::ostream & out, const FeFunction & u)
{
    out << "ADAPODFUN 1\n";
    out << "hash " << u.space->hash() << '\n';
    out << "dofs " << u.coefficients.size() << '\n';
    for (Eigen::Index i = 0; i < u.coefficients.size(); ++i)
        out << real(u.coefficients[i]) << '\n';
}

FeFunction read_function_body(Reader & r, SpacePtr space)
{
    r.header("ADAPODFUN");
    const std::string hash = r.keyed("hash");
    if (hash != std::to_string(space->hash()))
        r.fail("space hash " + hash + " does not match the target space");
    const std::size_t n = r.count("dofs");
    if (n != space->n_dof())
        r.fail("dof count " + std::to_string(n) + " does not match the space (" + std::to_string(space->n_dof()) + ")");
    Vector c(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < c.size(); ++i)
        c[i] = r.to_real(r.line(1)[0]);
    return FeFunction(std::move(space), std::move(c));
}

InnerProduct read_ip(Reader & r)
{
    const std::string name = r.keyed("ip");
    try
    {
        return inner_product_from_string(name);
    }
    catch (const std::exception &)
    {
        r.fail("unknown inner product '" + name + "'");
    }
}

} // namespace

void write_mesh(std::ostream & out, const Mesh & mesh)
{
    write_mesh_body(out, mesh);
}

Mesh read_mesh(std::istream & in, const std::string & source)
{
    Reader r(in, source);
    return read_mesh_body(r);
}

void save_mesh(const std::string & path, const Mesh & mesh)
{
    write_file(path, [&](std::ostream & out) { write_mesh_body(out, mesh); });
}

Mesh load_mesh(const std::string & path)
{
    auto in = open_in(path);
    return read_mesh(in, path);
}

void write_function(std::ostream & out, const FeFunction & u)
{
    write_function_body(out, u);
}

FeFunction read_function(std::istream & in, SpacePtr space, const std::string & source)
{
    Reader r(in, source);
    return read_function_body(r, std::move(space));
}

void save_function(const std::string & path, const FeFunction & u)
{
    write_file(path, [&](std::ostream & out) { write_function_body(out, u); });
}

FeFunction load_function(const std::string & path, SpacePtr space)
{
    auto in = open_in(path);
    return read_function(in, std::move(space), path);
}

void save_snapshots(const std::string & path, const SnapshotSet & snaps)
{
    if (snaps.labels.size() != snaps.snapshots.size())
        throw std::invalid_argument("snapshot set has mismatched labels");
    std::vector<const Mesh *> meshes;
    std::map<const Mesh *, std::size_t> index;
    std::vector<std::size_t> mesh_of;
    for (const auto & u : snaps.snapshots)
    {
        const Mesh * m = &u.space->mesh();
        auto it = index.find(m);
        if (it == index.end())
        {
            // distinct objects holding the same mesh are stored once
            for (std::size_t j = 0; j < meshes.size() && it == index.end(); ++j)
                if (meshes[j]->hash() == m->hash())
                    it = index.emplace(m, j).first;
            if (it == index.end())
            {
                it = index.emplace(m, meshes.size()).first;
                meshes.push_back(m);
            }
        }
        mesh_of.push_back(it->second);
    }

    write_file(path, [&](std::ostream & out) {
        out << "ADAPODSNAP 1\n";
        out << "ip " << to_string(snaps.ip) << '\n';
        out << "meshes " << meshes.size() << '\n';
        for (const Mesh * m : meshes)
            write_mesh_body(out, *m);
        out << "snapshots " << snaps.size() << '\n';
        for (std::size_t n = 0; n < snaps.size(); ++n)
        {
            out << "snapshot " << real(snaps.labels[n].mu) << ' ' << snaps.labels[n].k << ' ' << mesh_of[n] << '\n';
            write_function_body(out, snaps.snapshots[n]);
        }
    });
}

SnapshotSet load_snapshots(const std::string & path)
{
    auto in = open_in(path);
    Reader r(in, path);
    r.header("ADAPODSNAP");
    SnapshotSet set;
    set.ip = read_ip(r);
    const std::size_t n_mesh = r.count("meshes");
    std::vector<SpacePtr> spaces;
    for (std::size_t i = 0; i < n_mesh; ++i)
        spaces.push_back(build_space(read_mesh_body(r), set.ip));
    const std::size_t n = r.count("snapshots");
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto t = r.line(4);
        if (t[0] != "snapshot")
            r.fail("expected 'snapshot <mu> <k> <mesh>'");
        const double mu = r.to_real(t[1]);
        const int k = static_cast<int>(r.to_int(t[2]));
        const std::size_t m = r.to_size(t[3]);
        if (m >= spaces.size())
            r.fail("mesh index " + t[3] + " out of range");
        set.snapshots.push_back(read_function_body(r, spaces[m]));
        set.labels.push_back({mu, k});
    }
    return set;
}

void save_basis(const std::string & path, const PodBasis & basis)
{
    write_file(path, [&](std::ostream & out) {
        out << "ADAPODBASIS 1\n";
        out << "ip " << to_string(basis.ip) << '\n';
        out << "N " << basis.eigenvalues.size() << '\n';
        out << "D " << basis.rank << '\n';
        write_vector(out, "eigenvalues", basis.eigenvalues);
        write_matrix(out, "coefficients", basis.coefficients);
        write_matrix(out, "gramian", basis.gramian);
    });
}

PodBasis load_basis(const std::string & path)
{
    auto in = open_in(path);
    Reader r(in, path);
    r.header("ADAPODBASIS");
    PodBasis b;
    b.ip = read_ip(r);
    const auto n = static_cast<Eigen::Index>(r.count("N"));
    b.rank = r.count("D");
    if (static_cast<Eigen::Index>(b.rank) > n)
        r.fail("rank exceeds the number of snapshots");
    b.eigenvalues = r.vector("eigenvalues", n);
    b.coefficients = r.matrix("coefficients", static_cast<Eigen::Index>(b.rank), n);
    b.gramian = r.matrix("gramian", n, n);
    return b;
}

void save_rom(const std::string & path, const EllipticRom & rom)
{
    write_file(path, [&](std::ostream & out) {
        out << "ADAPODROM 1\n";
        out << "kind elliptic\n";
        out << "R " << rom.dim() << '\n';
        out << "nu " << real(rom.nu) << '\n';
        write_matrix(out, "ax", rom.ax);
        write_matrix(out, "ay", rom.ay);
        write_matrix(out, "anu", rom.anu);
        write_vector(out, "f", rom.f);
    });
}

void save_rom(const std::string & path, const BurgersRom & rom)
{
    write_file(path, [&](std::ostream & out) {
        const std::size_t n = rom.dim();
        out << "ADAPODROM 1\n";
        out << "kind burgers\n";
        out << "R " << n << '\n';
        out << "tau " << real(rom.tau) << '\n';
        out << "nu " << real(rom.nu) << '\n';
        write_matrix(out, "mass", rom.mass);
        write_matrix(out, "stiffness", rom.stiffness);
        // one line per (r, i), entries over j
        out << "tensor " << n * n << ' ' << n << '\n';
        for (std::size_t row = 0; row < n * n; ++row)
        {
            for (std::size_t j = 0; j < n; ++j)
                out << (j ? " " : "") << real(rom.tensor[row * n + j]);
            out << '\n';
        }
        write_vector(out, "b0", rom.b0);
    });
}

RomFile load_rom(const std::string & path)
{
    auto in = open_in(path);
    Reader r(in, path);
    r.header("ADAPODROM");
    const std::string kind = r.keyed("kind");
    const auto n = static_cast<Eigen::Index>(r.count("R"));
    RomFile file;
    if (kind == "elliptic")
    {
        EllipticRom rom;
        rom.nu = r.to_real(r.keyed("nu"));
        rom.ax = r.matrix("ax", n, n);
        rom.ay = r.matrix("ay", n, n);
        rom.anu = r.matrix("anu", n, n);
        rom.f = r.vector("f", n);
        file.elliptic = std::move(rom);
    }
    else if (kind == "burgers")
    {
        BurgersRom rom;
        rom.tau = r.to_real(r.keyed("tau"));
        rom.nu = r.to_real(r.keyed("nu"));
        rom.mass = r.matrix("mass", n, n);
        rom.stiffness = r.matrix("stiffness", n, n);
        const Matrix t = r.matrix("tensor", n * n, n);
        rom.tensor.resize(static_cast<std::size_t>(n * n * n));
        for (Eigen::Index row = 0; row < n * n; ++row)
            for (Eigen::Index j = 0; j < n; ++j)
                rom.tensor[static_cast<std::size_t>(row * n + j)] = t(row, j);
        rom.b0 = r.vector("b0", n);
        file.burgers = std::move(rom);
    }
    else
    {
        r.fail("unknown ROM kind '" + kind + "'");
    }
    return file;
}

} // namespace adapod
