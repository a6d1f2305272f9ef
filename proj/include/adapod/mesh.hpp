#pragma once

#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace adapod {

using Index = std::int32_t;
inline constexpr Index no_index = -1;

struct Point
{
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point &, const Point &) = default;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect
{
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;
};

/// Label of a mesh edge. `none` marks interior edges.
enum class BoundaryTag : std::uint8_t
{
    none,
    dirichlet,
    neumann,
    periodic_left,
    periodic_right,
    periodic_bottom,
    periodic_top,
};

std::string_view to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(std::string_view name);

/// Boundary labels for the four sides of a rectangular domain.
struct SideTags
{
    BoundaryTag left = BoundaryTag::dirichlet;
    BoundaryTag right = BoundaryTag::dirichlet;
    BoundaryTag bottom = BoundaryTag::dirichlet;
    BoundaryTag top = BoundaryTag::dirichlet;

    static SideTags all(BoundaryTag tag) { return {tag, tag, tag, tag}; }

    /// Periodic in x, homogeneous Neumann on the bottom and top sides.
    static SideTags periodic_x()
    {
        return {BoundaryTag::periodic_left, BoundaryTag::periodic_right,
                BoundaryTag::neumann, BoundaryTag::neumann};
    }
};

/// One triangle of the refinement forest.
///
/// Vertex 0 is the newest vertex, so the refinement edge always joins
/// vertices 1 and 2. Vertices are ordered counter-clockwise. `edge_tag[i]`
/// labels the edge opposite vertex i (`none` for edges inside the domain).
/// Bisecting (a, b, c) at the midpoint m of bc yields the children
/// (m, a, b) and (m, c, a), in that order.
struct ForestNode
{
    std::array<Index, 3> v{no_index, no_index, no_index};
    std::array<BoundaryTag, 3> edge_tag{BoundaryTag::none, BoundaryTag::none, BoundaryTag::none};
    Index parent = no_index;
    std::array<Index, 2> child{no_index, no_index};
    Index root = no_index;
    int generation = 0;

    bool is_leaf() const { return child[0] == no_index; }
};

/// An edge of the leaf triangulation. `triangle` holds leaf indices;
/// boundary edges have triangle[1] == no_index.
struct MeshEdge
{
    std::array<Index, 2> v{};
    std::array<Index, 2> triangle{no_index, no_index};
    BoundaryTag tag = BoundaryTag::none;

    bool is_boundary() const { return triangle[1] == no_index; }
};

/// Conforming 2D triangulation stored as a binary refinement forest over a
/// fixed initial mesh. Immutable; refinement operations return new meshes.
///
/// Vertex indices [0, num_initial_vertices()) are the initial vertices and
/// forest nodes [0, num_roots()) are the initial triangles. Every other vertex
/// is the midpoint of the refinement edge of some forest node and has a
/// larger index than both endpoints of that edge.
class Mesh
{
public:
    /// Uniform nx-by-ny grid of rectangles, each split along the diagonal from
    /// its lower-left to its upper-right corner.
    static Mesh structured(int nx, int ny, Rect domain, SideTags tags = {});

    /// Rebuilds a mesh from its full forest. Child links, roots and
    /// generations are recomputed from the parent links; throws MeshError if
    /// the forest is not a valid bisection forest or the leaves do not form a
    /// conforming triangulation.
    static Mesh from_forest(std::vector<Point> vertices, std::vector<ForestNode> nodes);

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_triangles() const { return leaves_.size(); }
    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_roots() const { return n_roots_; }
    std::size_t num_initial_vertices() const { return n_initial_vertices_; }

    std::span<const Point> vertices() const { return vertices_; }
    const Point & vertex(Index i) const { return vertices_[i]; }

    std::span<const ForestNode> forest() const { return nodes_; }
    const ForestNode & node(Index i) const { return nodes_[i]; }

    /// Node index of each leaf triangle, in increasing node order.
    std::span<const Index> leaves() const { return leaves_; }
    const std::array<Index, 3> & triangle(Index t) const { return nodes_[leaves_[t]].v; }
    double area(Index t) const;

    std::span<const MeshEdge> edges() const { return edges_; }

    /// Endpoints of the edge whose bisection created vertex v, or
    /// {no_index, no_index} for initial vertices.
    const std::array<Index, 2> & vertex_parents(Index v) const { return vertex_parents_[v]; }

    const Rect & bounding_box() const { return box_; }

    /// True if both meshes were refined from the same initial mesh.
    bool same_roots(const Mesh & other) const;

    /// Content hash over coordinates, leaf triangles and boundary tags.
    std::uint64_t hash() const { return hash_; }

private:
    friend class MeshRefiner;

    Mesh(std::vector<Point> vertices, std::vector<ForestNode> nodes, std::size_t n_roots,
         std::size_t n_initial_vertices);

    void build_derived();

    std::vector<Point> vertices_;
    std::vector<ForestNode> nodes_;
    std::size_t n_roots_ = 0;
    std::size_t n_initial_vertices_ = 0;

    std::vector<Index> leaves_;
    std::vector<MeshEdge> edges_;
    std::vector<std::array<Index, 2>> vertex_parents_;
    Rect box_{};
    std::uint64_t hash_ = 0;
};

/// Newest vertex bisection of the marked leaf triangles followed by
/// conformity closure and periodic lockstep refinement. `marked` holds leaf
/// triangle indices; duplicates are allowed.
Mesh bisect(const Mesh & mesh, std::span<const Index> marked);

/// Bisects every leaf triangle `rounds` times.
Mesh refine_uniform(const Mesh & mesh, int rounds = 1);

/// Smallest common refinement of two meshes sharing an initial mesh. The
/// vertices of `a` keep their indices in the result.
Mesh overlay(const Mesh & a, const Mesh & b);

/// Overlay of a non-empty list of meshes, folded left to right.
Mesh overlay(std::span<const Mesh * const> meshes);

/// True if every forest node of `coarse` is also a node of `fine`.
bool is_refinement_of(const Mesh & fine, const Mesh & coarse);

/// Leaf triangles of both meshes cover the same set of triangles.
bool same_leaf_set(const Mesh & a, const Mesh & b);

/// Exact P1 embedding between nested meshes, as a sparse
/// (target vertices) x (source vertices) matrix with rows summing to one.
struct Prolongation
{
    std::uint64_t source_id = 0;
    std::uint64_t target_id = 0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> weights;

    Eigen::VectorXd apply(const Eigen::VectorXd & source_values) const;
};

/// Throws MeshError if `to` is not a refinement of `from`.
Prolongation prolongation(const Mesh & from, const Mesh & to);

} // namespace adapod
