#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hho {

using Point = Eigen::Vector2d;

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Thrown on malformed mesh input or geometry that violates the element
/// assumptions (simple, counter-clockwise, star-shaped w.r.t. the centroid).
class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what, std::size_t element = npos)
      : std::runtime_error(what), element_(element) {}
  /// Offending element, or npos when the error is not element-specific.
  std::size_t element() const noexcept { return element_; }

 private:
  std::size_t element_;
};

/// A mesh face: a straight segment between two mesh vertices. Its orientation
/// (vertices[0] -> vertices[1]) is global and shared by both neighbours.
struct Face {
  std::array<std::size_t, 2> vertices{npos, npos};
  std::array<std::size_t, 2> elements{npos, npos};
  bool boundary = false;
  double length = 0.0;
  Point midpoint = Point::Zero();
  Point tangent = Point::Zero();  // unit, vertices[0] -> vertices[1]

  std::size_t num_elements() const { return elements[1] == npos ? 1 : 2; }
};

/// Element-local view of one face of the face loop.
struct ElementFace {
  std::size_t face = npos;
  int orientation = 1;            // +1 when the CCW loop runs along Face::tangent
  Point normal = Point::Zero();    // unit, outward
  double distance = 0.0;          // distance from the centroid to the face line
};

struct Element {
  std::vector<std::size_t> vertices;  // CCW vertex loop as given
  std::vector<ElementFace> faces;     // CCW face loop (sides split at hanging nodes)
  double area = 0.0;
  double diameter = 0.0;
  Point centroid = Point::Zero();
};

/// Immutable polygonal mesh. Faces are always derived from the element
/// vertex loops: every mesh vertex lying on an element side splits it.
class PolyMesh {
 public:
  PolyMesh() = default;

  /// Builds the face structure and geometry cache. Throws MeshError.
  static PolyMesh from_polygons(std::vector<Point> vertices,
                                std::vector<std::vector<std::size_t>> loops);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Element>& elements() const { return elements_; }

  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const Face& face(std::size_t i) const { return faces_[i]; }
  const Element& element(std::size_t i) const { return elements_[i]; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t num_boundary_faces() const;
  std::size_t num_interior_faces() const { return num_faces() - num_boundary_faces(); }

  /// h = max_T h_T.
  double meshsize() const;
  double total_area() const;
  /// True when some element side is split by a hanging node.
  bool has_hanging_nodes() const;
  /// True when every element is a triangle with exactly three faces.
  bool is_triangular() const;

  /// Re-checks the structural and geometric invariants; returns a description
  /// of the first violation, or nullopt.
  std::optional<std::string> check_invariants() const;

 private:
  std::vector<Point> vertices_;
  std::vector<Face> faces_;
  std::vector<Element> elements_;
};

PolyMesh load_mesh(std::string_view text);
PolyMesh load_mesh_file(const std::filesystem::path& path);
/// Writes the POLYMESH2D text format; coordinates use the shortest
/// round-trip representation, so load_mesh(serialize(m)) is exact.
std::string serialize(const PolyMesh& mesh);

enum class MeshKind { cartesian, triangular };

/// Uniform meshes of [0,1]^2: n^2 squares, or 2n^2 triangles obtained by
/// cutting each square along its (0,0)-(1,1) diagonal.
PolyMesh generate(MeshKind kind, int n);

/// Splits each marked element (triangle or quadrilateral) into four children
/// by connecting edge midpoints. Neighbours keep their vertex loops, so
/// hanging nodes split their sides into several faces.
PolyMesh refine_nonconforming(const PolyMesh& mesh, std::span<const std::size_t> marked);

/// Rectangle of fine Cartesian cells, in cell units: [i0, i0+ni) x [j0, j0+nj).
struct AgglomerationBlock {
  int i0 = 0;
  int j0 = 0;
  int ni = 1;
  int nj = 1;
};

/// Merges rectangles of cells of a conforming Cartesian mesh into single
/// elements; cells not covered by any block are kept as they are.
PolyMesh agglomerate(const PolyMesh& fine, std::span<const AgglomerationBlock> blocks);
/// Uniform coarsening: every block x block group of cells becomes one element.
PolyMesh agglomerate(const PolyMesh& fine, int block);

/// Cartesian n x n mesh with every cell whose centroid has x < fraction
/// refined once (hanging nodes along the refinement front).
PolyMesh generate_nonconforming(int n, double fraction);
/// Cartesian n x n mesh where block x block groups are merged in a
/// checkerboard pattern; merged elements have split sides next to fine cells.
PolyMesh generate_agglomerated(int n, int block);

struct RegularityReport {
  std::vector<double> h_over_rho;      // h_T / (2 min_F d_TF)
  std::vector<double> min_d_over_h;    // min_F d_TF / h_T
  std::map<std::size_t, std::size_t> face_count_histogram;
  double max_h_over_rho = 0.0;
  double min_d_over_h_global = std::numeric_limits<double>::infinity();
};

RegularityReport regularity_report(const PolyMesh& mesh);

enum class FamilyTag { cartesian, triangular, nonconforming, agglomerated };

std::string to_string(FamilyTag tag);
FamilyTag family_tag_from_string(std::string_view name);

/// Refinement sequence of meshes of the same domain, h strictly decreasing.
struct MeshFamily {
  FamilyTag tag = FamilyTag::cartesian;
  std::vector<int> levels;
  std::vector<PolyMesh> meshes;

  /// Throws MeshError if h is not strictly decreasing or the areas differ.
  void validate() const;
};

/// Builds the family for the given subdivision levels (nonconforming refines
/// the left half; agglomerated uses 2 x 2 blocks).
MeshFamily make_family(FamilyTag tag, std::span<const int> levels);

}  // namespace hho
