#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rda {

/// Coordinates are always stored in 3D; planar meshes keep z = 0.
using Point = Eigen::Vector3d;

enum class ElementKind { triangular, tetrahedral, polygonal };

std::string to_string(ElementKind kind);

/// Sentinel stored in Face::right for faces on the domain boundary.
inline constexpr int kBoundary = -1;

struct Face {
  std::array<int, 3> vertices{-1, -1, -1};  // 2 used in 2D, 3 in 3D
  int left = -1;
  int right = kBoundary;
  Point normal = Point::Zero();  // unit, outward from `left`
  Point centroid = Point::Zero();
  double measure = 0.0;   // length (2D) or area (3D)
  double diameter = 0.0;  // h_e

  bool is_boundary() const { return right == kBoundary; }
};

struct Box {
  Point lower = Point::Zero();
  Point upper = Point::Ones();
};

/// Conforming mesh of simplices (2D/3D) or polygons (2D).
///
/// Built once through the factory functions below and immutable afterwards.
/// Faces are stored once: the normal points out of `left`, boundary faces have
/// `right == kBoundary`. Element connectivity is kept in a flat offset array so
/// triangles, tetrahedra and arbitrary polygons share one layout.
class Mesh {
 public:
  Mesh() = default;

  /// Builds topology and geometry from raw connectivity. Triangles and
  /// polygons are reoriented counter-clockwise. `parent` is either empty or
  /// has one entry per element (index into the coarser mesh).
  static Mesh from_elements(int dim, ElementKind kind, std::vector<Point> vertices,
                            const std::vector<std::vector<int>>& elements,
                            std::vector<int> parent = {});

  int dim() const { return dim_; }
  ElementKind kind() const { return kind_; }
  bool is_simplicial() const { return kind_ != ElementKind::polygonal; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return element_offsets_.size() - 1; }
  std::size_t num_faces() const { return faces_.size(); }

  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const std::vector<Point>& vertices() const { return vertices_; }

  std::span<const int> element(std::size_t k) const {
    return {element_vertices_.data() + element_offsets_[k],
            element_vertices_.data() + element_offsets_[k + 1]};
  }
  std::span<const int> element_faces(std::size_t k) const {
    return {element_face_ids_.data() + element_offsets_[k],
            element_face_ids_.data() + element_offsets_[k + 1]};
  }

  const Face& face(std::size_t f) const { return faces_[f]; }
  const std::vector<Face>& faces() const { return faces_; }

  const Point& barycenter(std::size_t k) const { return barycenters_[k]; }
  double diameter(std::size_t k) const { return diameters_[k]; }
  double volume(std::size_t k) const { return volumes_[k]; }

  /// Parent element in the coarser mesh this one was refined from; empty
  /// when the mesh was generated or imported directly.
  const std::vector<int>& parent() const { return parent_; }
  bool has_parent() const { return !parent_.empty(); }

  /// Elements incident to each vertex, as offsets + indices (ascending).
  std::span<const int> vertex_elements(std::size_t v) const {
    return {vertex_element_ids_.data() + vertex_element_offsets_[v],
            vertex_element_ids_.data() + vertex_element_offsets_[v + 1]};
  }

  double total_volume() const;
  double max_diameter() const;
  double min_diameter() const;
  /// max h_K / min h_K
  double quasi_uniformity() const { return max_diameter() / min_diameter(); }

  /// Vertex coordinates of element k, in stored order.
  std::vector<Point> element_points(std::size_t k) const;

 private:
  void build_topology();
  void build_geometry();

  int dim_ = 2;
  ElementKind kind_ = ElementKind::triangular;
  std::vector<Point> vertices_;
  std::vector<int> element_offsets_{0};
  std::vector<int> element_vertices_;
  std::vector<int> element_face_ids_;  // aligned with element_vertices_
  std::vector<Face> faces_;
  std::vector<Point> barycenters_;
  std::vector<double> diameters_;
  std::vector<double> volumes_;
  std::vector<int> parent_;
  std::vector<int> vertex_element_offsets_;
  std::vector<int> vertex_element_ids_;
};

/// Structured triangulation of a rectangle: n x n squares, each split along
/// the lower-left to upper-right diagonal.
Mesh gen_tri_mesh(const Box& domain, int n);

/// Kuhn triangulation of a box: n^3 cubes, six tetrahedra per cube sharing
/// the main diagonal.
Mesh gen_tet_mesh(const Box& domain, int n);

/// Red refinement: 4 children per triangle, 8 per tetrahedron. Children of
/// one parent are contiguous and the parent map is filled.
Mesh refine_uniform(const Mesh& mesh);

/// Reads the `POLYMESH 2` text format.
Mesh import_poly_mesh(const std::filesystem::path& path);
Mesh parse_poly_mesh(const std::string& text);
void write_poly_mesh(const Mesh& mesh, const std::filesystem::path& path);

/// Nested family: `levels` meshes, the first generated with `coarse_n`
/// subdivisions per axis and each subsequent one refined from its predecessor.
std::vector<Mesh> nested_structured_meshes(int dim, const Box& domain, int coarse_n, int levels);

}  // namespace rda
