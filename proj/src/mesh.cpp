#include "adapod/mesh.hpp"

#include "adapod/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace adapod {

namespace {

constexpr std::uint64_t fnv_offset = 1469598103934665603ull;
constexpr std::uint64_t fnv_prime = 1099511628211ull;

void hash_bytes(std::uint64_t & h, std::uint64_t value)
{
    for (int i = 0; i < 8; ++i)
    {
        h ^= (value >> (8 * i)) & 0xffu;
        h *= fnv_prime;
    }
}

std::uint64_t edge_key(Index a, Index b)
{
    if (a > b)
        std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32)
           | static_cast<std::uint32_t>(b);
}

Point midpoint(const Point & p, const Point & q)
{
    // Commutative in IEEE arithmetic, so both orientations of an edge give
    // bitwise identical midpoints.
    return {0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
}

double signed_area(const Point & a, const Point & b, const Point & c)
{
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

struct PointKey
{
    std::uint64_t x;
    std::uint64_t y;

    explicit PointKey(const Point & p)
        : x(std::bit_cast<std::uint64_t>(p.x)), y(std::bit_cast<std::uint64_t>(p.y))
    {}

    friend bool operator==(const PointKey &, const PointKey &) = default;
};

struct PointKeyHash
{
    std::size_t operator()(const PointKey & k) const
    {
        return std::hash<std::uint64_t>{}(k.x * 0x9e3779b97f4a7c15ull ^ (k.y + 0x7f4a7c15ull));
    }
};

/// Local edge of a node opposite vertex i.
std::array<Index, 2> opposite_edge(const ForestNode & n, int i)
{
    return {n.v[(i + 1) % 3], n.v[(i + 2) % 3]};
}

bool is_periodic(BoundaryTag t)
{
    return t == BoundaryTag::periodic_left || t == BoundaryTag::periodic_right
           || t == BoundaryTag::periodic_bottom || t == BoundaryTag::periodic_top;
}

} // namespace

std::string_view to_string(BoundaryTag tag)
{
    switch (tag)
    {
        case BoundaryTag::none: return "none";
        case BoundaryTag::dirichlet: return "dirichlet";
        case BoundaryTag::neumann: return "neumann";
        case BoundaryTag::periodic_left: return "periodic_left";
        case BoundaryTag::periodic_right: return "periodic_right";
        case BoundaryTag::periodic_bottom: return "periodic_bottom";
        case BoundaryTag::periodic_top: return "periodic_top";
    }
    return "none";
}

BoundaryTag boundary_tag_from_string(std::string_view name)
{
    for (auto t : {BoundaryTag::none, BoundaryTag::dirichlet, BoundaryTag::neumann,
                   BoundaryTag::periodic_left, BoundaryTag::periodic_right,
                   BoundaryTag::periodic_bottom, BoundaryTag::periodic_top})
    {
        if (to_string(t) == name)
            return t;
    }
    throw MeshError("unknown boundary tag '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(std::vector<Point> vertices, std::vector<ForestNode> nodes, std::size_t n_roots,
           std::size_t n_initial_vertices)
    : vertices_(std::move(vertices)), nodes_(std::move(nodes)), n_roots_(n_roots),
      n_initial_vertices_(n_initial_vertices)
{
    build_derived();
}

void Mesh::build_derived()
{
    leaves_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].is_leaf())
            leaves_.push_back(static_cast<Index>(i));

    vertex_parents_.assign(vertices_.size(), {no_index, no_index});
    for (const auto & n : nodes_)
    {
        if (n.is_leaf())
            continue;
        const Index m = nodes_[n.child[0]].v[0];
        vertex_parents_[m] = {n.v[1], n.v[2]};
    }

    std::unordered_map<std::uint64_t, Index> edge_index;
    edges_.clear();
    edge_index.reserve(leaves_.size() * 2);
    for (std::size_t t = 0; t < leaves_.size(); ++t)
    {
        const ForestNode & n = nodes_[leaves_[t]];
        for (int i = 0; i < 3; ++i)
        {
            const auto e = opposite_edge(n, i);
            const auto key = edge_key(e[0], e[1]);
            auto [it, inserted] = edge_index.emplace(key, static_cast<Index>(edges_.size()));
            if (inserted)
            {
                MeshEdge edge;
                edge.v = e;
                edge.triangle = {static_cast<Index>(t), no_index};
                edge.tag = n.edge_tag[i];
                edges_.push_back(edge);
            }
            else
            {
                MeshEdge & edge = edges_[it->second];
                if (edge.triangle[1] != no_index)
                    throw MeshError("edge shared by more than two triangles");
                edge.triangle[1] = static_cast<Index>(t);
                edge.tag = BoundaryTag::none;
            }
        }
    }

    box_ = {vertices_.empty() ? 0.0 : vertices_[0].x, vertices_.empty() ? 0.0 : vertices_[0].y,
            vertices_.empty() ? 0.0 : vertices_[0].x, vertices_.empty() ? 0.0 : vertices_[0].y};
    for (const auto & p : vertices_)
    {
        box_.x0 = std::min(box_.x0, p.x);
        box_.y0 = std::min(box_.y0, p.y);
        box_.x1 = std::max(box_.x1, p.x);
        box_.y1 = std::max(box_.y1, p.y);
    }

    std::uint64_t h = fnv_offset;
    hash_bytes(h, vertices_.size());
    for (const auto & p : vertices_)
    {
        hash_bytes(h, std::bit_cast<std::uint64_t>(p.x));
        hash_bytes(h, std::bit_cast<std::uint64_t>(p.y));
    }
    hash_bytes(h, leaves_.size());
    for (Index l : leaves_)
    {
        const auto & n = nodes_[l];
        for (int i = 0; i < 3; ++i)
        {
            hash_bytes(h, static_cast<std::uint64_t>(n.v[i]));
            hash_bytes(h, static_cast<std::uint64_t>(n.edge_tag[i]));
        }
    }
    hash_ = h;
}

double Mesh::area(Index t) const
{
    const auto & v = triangle(t);
    return signed_area(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]);
}

bool Mesh::same_roots(const Mesh & other) const
{
    if (n_roots_ != other.n_roots_ || n_initial_vertices_ != other.n_initial_vertices_)
        return false;
    for (std::size_t i = 0; i < n_initial_vertices_; ++i)
    {
        if (PointKey(vertices_[i]) != PointKey(other.vertices_[i]))
            return false;
    }
    for (std::size_t i = 0; i < n_roots_; ++i)
    {
        if (nodes_[i].v != other.nodes_[i].v || nodes_[i].edge_tag != other.nodes_[i].edge_tag)
            return false;
    }
    return true;
}

Mesh Mesh::structured(int nx, int ny, Rect domain, SideTags tags)
{
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("structured mesh needs nx, ny >= 1");
    if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0))
        throw std::invalid_argument("structured mesh needs a rectangle of positive area");

    auto coord = [](double lo, double hi, int i, int n) {
        if (i == n)
            return hi;
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    };

    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            vertices.push_back({coord(domain.x0, domain.x1, i, nx), coord(domain.y0, domain.y1, j, ny)});

    auto id = [nx](int i, int j) { return static_cast<Index>(j * (nx + 1) + i); };

    auto side_tag = [&](Index a, Index b) {
        const Point & p = vertices[a];
        const Point & q = vertices[b];
        if (p.x == domain.x0 && q.x == domain.x0)
            return tags.left;
        if (p.x == domain.x1 && q.x == domain.x1)
            return tags.right;
        if (p.y == domain.y0 && q.y == domain.y0)
            return tags.bottom;
        if (p.y == domain.y1 && q.y == domain.y1)
            return tags.top;
        return BoundaryTag::none;
    };

    std::vector<ForestNode> nodes;
    nodes.reserve(static_cast<std::size_t>(2 * nx * ny));
    auto add_root = [&](std::array<Index, 3> tri) {
        // Refinement edge: the longest edge, ties broken by the lowest
        // global index of the opposite vertex.
        int best = 0;
        double best_len = -1.0;
        for (int i = 0; i < 3; ++i)
        {
            const Point & p = vertices[tri[(i + 1) % 3]];
            const Point & q = vertices[tri[(i + 2) % 3]];
            const double len = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
            if (len > best_len || (len == best_len && tri[i] < tri[best]))
            {
                best = i;
                best_len = len;
            }
        }
        ForestNode n;
        n.v = {tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]};
        for (int i = 0; i < 3; ++i)
        {
            const auto e = opposite_edge(n, i);
            n.edge_tag[i] = side_tag(e[0], e[1]);
        }
        n.root = static_cast<Index>(nodes.size());
        nodes.push_back(n);
    };

    for (int j = 0; j < ny; ++j)
    {
        for (int i = 0; i < nx; ++i)
        {
            add_root({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            add_root({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }

    const std::size_t n_roots = nodes.size();
    const std::size_t n_vertices = vertices.size();
    return Mesh(std::move(vertices), std::move(nodes), n_roots, n_vertices);
}

Mesh Mesh::from_forest(std::vector<Point> vertices, std::vector<ForestNode> nodes)
{
    const auto nv = static_cast<Index>(vertices.size());
    std::size_t n_roots = 0;
    while (n_roots < nodes.size() && nodes[n_roots].parent == no_index)
        ++n_roots;
    if (n_roots == 0)
        throw MeshError("forest has no root triangles");

    for (auto & n : nodes)
    {
        n.child = {no_index, no_index};
        for (Index v : n.v)
            if (v < 0 || v >= nv)
                throw MeshError("vertex index " + std::to_string(v) + " out of range");
    }

    std::vector<bool> has_parent_edge(vertices.size(), false);
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
        ForestNode & n = nodes[i];
        if (i < n_roots)
        {
            n.root = static_cast<Index>(i);
            n.generation = 0;
            continue;
        }
        if (n.parent == no_index)
            throw MeshError("root triangle " + std::to_string(i) + " listed after refined triangles");
        if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= i)
            throw MeshError("triangle " + std::to_string(i) + " must follow its parent");

        ForestNode & p = nodes[n.parent];
        const Index m = n.v[0];
        const bool first = n.v[1] == p.v[0] && n.v[2] == p.v[1];
        const bool second = n.v[1] == p.v[2] && n.v[2] == p.v[0];
        if (!first && !second)
            throw MeshError("triangle " + std::to_string(i) + " is not a bisection child of its parent");
        const int slot = first ? 0 : 1;
        if (p.child[slot] != no_index)
            throw MeshError("triangle " + std::to_string(n.parent) + " has duplicate children");
        const Index sibling = p.child[1 - slot];
        if (sibling != no_index && nodes[sibling].v[0] != m)
            throw MeshError("children of triangle " + std::to_string(n.parent) + " disagree on the midpoint");
        if (PointKey(vertices[m]) != PointKey(midpoint(vertices[p.v[1]], vertices[p.v[2]])))
            throw MeshError("vertex " + std::to_string(m) + " is not the midpoint of its parent edge");
        if (m <= std::max(p.v[1], p.v[2]))
            throw MeshError("vertex " + std::to_string(m) + " must follow its parent edge endpoints");

        const auto & t = p.edge_tag;
        const std::array<BoundaryTag, 3> expected = first
            ? std::array<BoundaryTag, 3>{t[2], t[0], BoundaryTag::none}
            : std::array<BoundaryTag, 3>{t[1], BoundaryTag::none, t[0]};
        if (n.edge_tag != expected)
            throw MeshError("boundary tags of triangle " + std::to_string(i) + " do not match its parent");

        p.child[slot] = static_cast<Index>(i);
        n.root = p.root;
        n.generation = p.generation + 1;
        has_parent_edge[m] = true;
    }

    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
        const auto & n = nodes[i];
        if ((n.child[0] == no_index) != (n.child[1] == no_index))
            throw MeshError("triangle " + std::to_string(i) + " has exactly one child");
        if (!(signed_area(vertices[n.v[0]], vertices[n.v[1]], vertices[n.v[2]]) > 0.0))
            throw MeshError("triangle " + std::to_string(i) + " has non-positive area");
    }

    std::size_t n_initial = 0;
    while (n_initial < vertices.size() && !has_parent_edge[n_initial])
        ++n_initial;
    for (std::size_t v = n_initial; v < vertices.size(); ++v)
        if (!has_parent_edge[v])
            throw MeshError("initial vertex " + std::to_string(v) + " listed after refinement vertices");
    for (std::size_t r = 0; r < n_roots; ++r)
        for (Index v : nodes[r].v)
            if (static_cast<std::size_t>(v) >= n_initial)
                throw MeshError("root triangle " + std::to_string(r) + " uses a refinement vertex");

    Mesh mesh(std::move(vertices), std::move(nodes), n_roots, n_initial);

    // Conformity: no leaf edge may carry a midpoint vertex.
    std::unordered_set<std::uint64_t> split_edges;
    for (std::size_t v = n_initial; v < mesh.num_vertices(); ++v)
    {
        const auto & pe = mesh.vertex_parents(static_cast<Index>(v));
        split_edges.insert(edge_key(pe[0], pe[1]));
    }
    for (const auto & e : mesh.edges())
    {
        if (split_edges.count(edge_key(e.v[0], e.v[1])))
            throw MeshError("hanging node on edge (" + std::to_string(e.v[0]) + ", "
                            + std::to_string(e.v[1]) + ")");
        if (e.is_boundary() && e.tag == BoundaryTag::none)
            throw MeshError("untagged boundary edge (" + std::to_string(e.v[0]) + ", "
                            + std::to_string(e.v[1]) + ")");
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// Refinement

/// Mutable working copy of a mesh used by bisect and overlay.
class MeshRefiner
{
public:
    explicit MeshRefiner(const Mesh & mesh)
        : vertices_(mesh.vertices_), nodes_(mesh.nodes_), n_roots_(mesh.n_roots_),
          n_initial_(mesh.n_initial_vertices_), box_(mesh.box_)
    {
        coords_.reserve(vertices_.size() * 2);
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            coords_.emplace(PointKey(vertices_[i]), static_cast<Index>(i));
        for (const auto & n : nodes_)
        {
            if (!n.is_leaf())
                midpoints_.emplace(edge_key(n.v[1], n.v[2]), nodes_[n.child[0]].v[0]);
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].is_leaf())
                attach(static_cast<Index>(i));
    }

    const ForestNode & node(Index i) const { return nodes_[i]; }

    /// Bisects a leaf and restores conformity.
    void split_closed(Index n)
    {
        if (!nodes_[n].is_leaf())
            return;
        split(n);
        conform();
    }

    /// Conformity closure plus periodic lockstep, iterated to a fixed point.
    void close()
    {
        conform();
        while (periodic_pass())
            conform();
    }

    Mesh finish() &&
    {
        return Mesh(std::move(vertices_), std::move(nodes_), n_roots_, n_initial_);
    }

private:
    Index midpoint_vertex(Index a, Index b)
    {
        const auto key = edge_key(a, b);
        if (auto it = midpoints_.find(key); it != midpoints_.end())
            return it->second;
        const Point p = midpoint(vertices_[a], vertices_[b]);
        Index m;
        if (auto it = coords_.find(PointKey(p)); it != coords_.end())
        {
            m = it->second;
        }
        else
        {
            m = static_cast<Index>(vertices_.size());
            vertices_.push_back(p);
            coords_.emplace(PointKey(p), m);
        }
        midpoints_.emplace(key, m);
        return m;
    }

    void attach(Index n)
    {
        for (int i = 0; i < 3; ++i)
        {
            const auto e = opposite_edge(nodes_[n], i);
            auto & slots = edge_leaves_.try_emplace(edge_key(e[0], e[1]), std::array<Index, 2>{no_index, no_index})
                               .first->second;
            if (slots[0] == no_index)
                slots[0] = n;
            else
                slots[1] = n;
        }
    }

    void detach(Index n)
    {
        for (int i = 0; i < 3; ++i)
        {
            const auto e = opposite_edge(nodes_[n], i);
            auto it = edge_leaves_.find(edge_key(e[0], e[1]));
            auto & slots = it->second;
            if (slots[0] == n)
                slots[0] = slots[1];
            slots[1] = no_index;
            if (slots[0] == no_index)
                edge_leaves_.erase(it);
        }
    }

    Index neighbor(Index n, Index a, Index b) const
    {
        auto it = edge_leaves_.find(edge_key(a, b));
        if (it == edge_leaves_.end())
            return no_index;
        return it->second[0] == n ? it->second[1] : it->second[0];
    }

    bool has_hanging_node(Index n) const
    {
        for (int i = 0; i < 3; ++i)
        {
            const auto e = opposite_edge(nodes_[n], i);
            if (midpoints_.count(edge_key(e[0], e[1])))
                return true;
        }
        return false;
    }

    void split(Index n)
    {
        const ForestNode parent = nodes_[n];
        const Index a = parent.v[0];
        const Index b = parent.v[1];
        const Index c = parent.v[2];
        const Index m = midpoint_vertex(b, c);

        const Index across = neighbor(n, b, c);
        detach(n);

        ForestNode c0;
        c0.v = {m, a, b};
        c0.edge_tag = {parent.edge_tag[2], parent.edge_tag[0], BoundaryTag::none};
        ForestNode c1;
        c1.v = {m, c, a};
        c1.edge_tag = {parent.edge_tag[1], BoundaryTag::none, parent.edge_tag[0]};
        for (ForestNode * ch : {&c0, &c1})
        {
            ch->parent = n;
            ch->root = parent.root;
            ch->generation = parent.generation + 1;
        }
        const auto i0 = static_cast<Index>(nodes_.size());
        nodes_.push_back(c0);
        nodes_.push_back(c1);
        nodes_[n].child = {i0, i0 + 1};
        attach(i0);
        attach(i0 + 1);

        if (across != no_index)
            work_.push_back(across);
        work_.push_back(i0);
        work_.push_back(i0 + 1);
    }

    void conform()
    {
        while (!work_.empty())
        {
            const Index n = work_.back();
            work_.pop_back();
            if (nodes_[n].is_leaf() && has_hanging_node(n))
                split(n);
        }
    }

    Point partner(const Point & p, BoundaryTag tag) const
    {
        switch (tag)
        {
            case BoundaryTag::periodic_left: return {box_.x1, p.y};
            case BoundaryTag::periodic_right: return {box_.x0, p.y};
            case BoundaryTag::periodic_bottom: return {p.x, box_.y1};
            case BoundaryTag::periodic_top: return {p.x, box_.y0};
            default: return p;
        }
    }

    /// Splits periodic boundary edges whose partner edge is split. Returns
    /// true if anything changed.
    bool periodic_pass()
    {
        bool changed = false;
        const std::size_t count = nodes_.size();
        for (std::size_t i = 0; i < count; ++i)
        {
            const Index n = static_cast<Index>(i);
            if (!nodes_[n].is_leaf())
                continue;
            for (int k = 0; k < 3; ++k)
            {
                const BoundaryTag tag = nodes_[n].edge_tag[k];
                if (!is_periodic(tag))
                    continue;
                const auto e = opposite_edge(nodes_[n], k);
                if (midpoints_.count(edge_key(e[0], e[1])))
                    continue;
                auto pa = coords_.find(PointKey(partner(vertices_[e[0]], tag)));
                auto pb = coords_.find(PointKey(partner(vertices_[e[1]], tag)));
                // A missing partner vertex means the partner side is coarser
                // here; that side gets split when its own edge is visited.
                if (pa == coords_.end() || pb == coords_.end())
                    continue;
                if (midpoints_.count(edge_key(pa->second, pb->second)))
                {
                    midpoint_vertex(e[0], e[1]);
                    work_.push_back(n);
                    changed = true;
                }
            }
        }
        return changed;
    }

    std::vector<Point> vertices_;
    std::vector<ForestNode> nodes_;
    std::size_t n_roots_;
    std::size_t n_initial_;
    Rect box_;

    std::unordered_map<PointKey, Index, PointKeyHash> coords_;
    std::unordered_map<std::uint64_t, Index> midpoints_;
    std::unordered_map<std::uint64_t, std::array<Index, 2>> edge_leaves_;
    std::vector<Index> work_;
};

Mesh bisect(const Mesh & mesh, std::span<const Index> marked)
{
    for (Index t : marked)
    {
        if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_triangles())
            throw std::invalid_argument("marked triangle " + std::to_string(t) + " is not a leaf index");
    }
    if (marked.empty())
        return mesh;

    MeshRefiner refiner(mesh);
    for (Index t : marked)
        refiner.split_closed(mesh.leaves()[t]);
    refiner.close();
    return std::move(refiner).finish();
}

Mesh refine_uniform(const Mesh & mesh, int rounds)
{
    Mesh result = mesh;
    for (int r = 0; r < rounds; ++r)
    {
        std::vector<Index> all(result.num_triangles());
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = static_cast<Index>(i);
        result = bisect(result, all);
    }
    return result;
}

Mesh overlay(const Mesh & a, const Mesh & b)
{
    if (!a.same_roots(b))
        throw MeshError("overlay requires meshes refined from the same initial mesh");

    MeshRefiner refiner(a);
    std::vector<std::pair<Index, Index>> stack;
    for (std::size_t r = 0; r < b.num_roots(); ++r)
        stack.emplace_back(static_cast<Index>(r), static_cast<Index>(r));
    while (!stack.empty())
    {
        const auto [nb, nr] = stack.back();
        stack.pop_back();
        const ForestNode & bn = b.node(nb);
        if (bn.is_leaf())
            continue;
        refiner.split_closed(nr);
        const ForestNode & rn = refiner.node(nr);
        stack.emplace_back(bn.child[1], rn.child[1]);
        stack.emplace_back(bn.child[0], rn.child[0]);
    }
    refiner.close();
    return std::move(refiner).finish();
}

Mesh overlay(std::span<const Mesh * const> meshes)
{
    if (meshes.empty())
        throw std::invalid_argument("overlay of an empty mesh list");
    Mesh result = *meshes[0];
    for (std::size_t i = 1; i < meshes.size(); ++i)
    {
        if (meshes[i]->hash() == result.hash() && same_leaf_set(*meshes[i], result))
            continue;
        result = overlay(result, *meshes[i]);
    }
    return result;
}

namespace {

/// Walks the forest of `coarse` alongside `fine`; returns the fine node for
/// each coarse node, or an empty vector if `fine` does not contain `coarse`.
std::vector<Index> node_correspondence(const Mesh & coarse, const Mesh & fine)
{
    std::vector<Index> corr(coarse.num_nodes(), no_index);
    for (std::size_t r = 0; r < coarse.num_roots(); ++r)
        corr[r] = static_cast<Index>(r);
    // Parents precede children in node order.
    for (std::size_t i = 0; i < coarse.num_nodes(); ++i)
    {
        const ForestNode & cn = coarse.node(static_cast<Index>(i));
        if (cn.is_leaf())
            continue;
        const ForestNode & fn = fine.node(corr[i]);
        if (fn.is_leaf())
            return {};
        corr[cn.child[0]] = fn.child[0];
        corr[cn.child[1]] = fn.child[1];
    }
    return corr;
}

} // namespace

bool is_refinement_of(const Mesh & fine, const Mesh & coarse)
{
    return fine.same_roots(coarse) && !node_correspondence(coarse, fine).empty();
}

bool same_leaf_set(const Mesh & a, const Mesh & b)
{
    if (a.num_triangles() != b.num_triangles() || !a.same_roots(b))
        return false;
    return is_refinement_of(a, b) && is_refinement_of(b, a);
}

Eigen::VectorXd Prolongation::apply(const Eigen::VectorXd & source_values) const
{
    if (source_values.size() != weights.cols())
        throw std::invalid_argument("prolongation applied to a vector of the wrong length");
    return weights * source_values;
}

Prolongation prolongation(const Mesh & from, const Mesh & to)
{
    if (!from.same_roots(to))
        throw MeshError("prolongation requires meshes refined from the same initial mesh");
    const auto corr = node_correspondence(from, to);
    if (corr.empty())
        throw MeshError("prolongation target is not a refinement of the source mesh");

    std::vector<Index> source_of(to.num_vertices(), no_index);
    for (std::size_t i = 0; i < from.num_nodes(); ++i)
    {
        const auto & fv = from.node(static_cast<Index>(i)).v;
        const auto & tv = to.node(corr[i]).v;
        for (int k = 0; k < 3; ++k)
            source_of[tv[k]] = fv[k];
    }

    using Row = std::vector<std::pair<Index, double>>;
    std::vector<Row> rows(to.num_vertices());
    std::size_t nnz = 0;
    for (std::size_t v = 0; v < to.num_vertices(); ++v)
    {
        if (source_of[v] != no_index)
        {
            rows[v] = {{source_of[v], 1.0}};
        }
        else
        {
            const auto & pe = to.vertex_parents(static_cast<Index>(v));
            Row merged;
            for (const auto & [c, w] : rows[pe[0]])
                merged.emplace_back(c, 0.5 * w);
            for (const auto & [c, w] : rows[pe[1]])
            {
                auto it = std::find_if(merged.begin(), merged.end(), [c = c](const auto & e) { return e.first == c; });
                if (it != merged.end())
                    it->second += 0.5 * w;
                else
                    merged.emplace_back(c, 0.5 * w);
            }
            std::sort(merged.begin(), merged.end());
            rows[v] = std::move(merged);
        }
        nnz += rows[v].size();
    }

    Prolongation p;
    p.source_id = from.hash();
    p.target_id = to.hash();
    p.weights.resize(static_cast<Eigen::Index>(to.num_vertices()), static_cast<Eigen::Index>(from.num_vertices()));
    p.weights.reserve(static_cast<Eigen::Index>(nnz));
    for (std::size_t v = 0; v < rows.size(); ++v)
    {
        p.weights.startVec(static_cast<Eigen::Index>(v));
        for (const auto & [c, w] : rows[v])
            p.weights.insertBack(static_cast<Eigen::Index>(v), c) = w;
    }
    p.weights.finalize();
    return p;
}

} // namespace adapod
