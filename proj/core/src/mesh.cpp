#include "rda/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <locale>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace rda {

std::string to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::triangular: return "triangular";
    case ElementKind::tetrahedral: return "tetrahedral";
    case ElementKind::polygonal: return "polygonal";
  }
  return "unknown";
}

namespace {

double signed_area_2d(const std::vector<Point>& pts) {
  double a = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point& p = pts[i];
    const Point& q = pts[(i + 1) % pts.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double max_pairwise_distance(const std::vector<Point>& pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

// Local face `i` of an element with `nv` vertices, as local vertex indices.
// Triangles/polygons: edge (i, i+1). Tetrahedra: face opposite vertex i.
std::array<int, 3> local_face(int dim, int nv, int i) {
  if (dim == 2) return {i, (i + 1) % nv, -1};
  std::array<int, 3> f{};
  int c = 0;
  for (int v = 0; v < 4; ++v)
    if (v != i) f[c++] = v;
  return f;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

Mesh Mesh::from_elements(int dim, ElementKind kind, std::vector<Point> vertices,
                         const std::vector<std::vector<int>>& elements, std::vector<int> parent) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("mesh dimension must be 2 or 3");
  if (dim == 3 && kind != ElementKind::tetrahedral)
    throw std::invalid_argument("3D meshes must be tetrahedral");
  if (!parent.empty() && parent.size() != elements.size())
    throw std::invalid_argument("parent map size does not match element count");

  Mesh mesh;
  mesh.dim_ = dim;
  mesh.kind_ = kind;
  mesh.vertices_ = std::move(vertices);
  mesh.parent_ = std::move(parent);
  mesh.element_offsets_.assign(1, 0);
  mesh.element_offsets_.reserve(elements.size() + 1);

  const auto nv_total = static_cast<int>(mesh.vertices_.size());
  for (std::size_t k = 0; k < elements.size(); ++k) {
    std::vector<int> e = elements[k];
    const std::size_t expected = kind == ElementKind::triangular    ? 3
                                 : kind == ElementKind::tetrahedral ? 4
                                                                    : 0;
    if ((expected && e.size() != expected) || e.size() < 3)
      throw std::invalid_argument("element " + std::to_string(k) + " has wrong vertex count");
    for (int v : e)
      if (v < 0 || v >= nv_total)
        throw std::out_of_range("element " + std::to_string(k) + " references vertex " +
                                std::to_string(v) + " out of range");
    if (dim == 2) {
      std::vector<Point> pts;
      for (int v : e) pts.push_back(mesh.vertices_[v]);
      if (signed_area_2d(pts) < 0.0) std::reverse(e.begin(), e.end());
    }
    mesh.element_vertices_.insert(mesh.element_vertices_.end(), e.begin(), e.end());
    mesh.element_offsets_.push_back(static_cast<int>(mesh.element_vertices_.size()));
  }
  mesh.build_geometry();
  mesh.build_topology();
  return mesh;
}

void Mesh::build_geometry() {
  const std::size_t ne = num_elements();
  barycenters_.resize(ne);
  diameters_.resize(ne);
  volumes_.resize(ne);
  for (std::size_t k = 0; k < ne; ++k) {
    const auto pts = element_points(k);
    diameters_[k] = max_pairwise_distance(pts);
    if (kind_ == ElementKind::tetrahedral) {
      Eigen::Matrix3d J;
      J << pts[1] - pts[0], pts[2] - pts[0], pts[3] - pts[0];
      volumes_[k] = std::abs(J.determinant()) / 6.0;
      barycenters_[k] = 0.25 * (pts[0] + pts[1] + pts[2] + pts[3]);
    } else if (kind_ == ElementKind::triangular) {
      volumes_[k] = signed_area_2d(pts);
      barycenters_[k] = (pts[0] + pts[1] + pts[2]) / 3.0;
    } else {
      // Area-weighted centroid of a simple polygon.
      double a = 0.0;
      Point c = Point::Zero();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        const Point& q = pts[(i + 1) % pts.size()];
        const double cr = p.x() * q.y() - q.x() * p.y();
        a += cr;
        c.x() += (p.x() + q.x()) * cr;
        c.y() += (p.y() + q.y()) * cr;
      }
      a *= 0.5;
      volumes_[k] = a;
      barycenters_[k] = c / (6.0 * a);
    }
    if (!(volumes_[k] > 0.0))
      throw std::invalid_argument("element " + std::to_string(k) + " is degenerate");
  }
}

void Mesh::build_topology() {
  const std::size_t ne = num_elements();

  struct Entry {
    std::array<int, 3> key;
    int element;
    int local;
  };
  std::vector<Entry> entries;
  entries.reserve(element_vertices_.size());
  for (std::size_t k = 0; k < ne; ++k) {
    const auto e = element(k);
    const int nv = static_cast<int>(e.size());
    for (int i = 0; i < nv; ++i) {
      const auto lf = local_face(dim_, nv, i);
      std::array<int, 3> key{e[lf[0]], e[lf[1]], dim_ == 3 ? e[lf[2]] : -1};
      std::sort(key.begin(), key.begin() + dim_);
      entries.push_back({key, static_cast<int>(k), i});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.element < b.element;
  });

  element_face_ids_.assign(element_vertices_.size(), -1);
  faces_.clear();
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    if (j - i > 2) {
      throw std::runtime_error("non-manifold face shared by " + std::to_string(j - i) +
                               " elements (first element " + std::to_string(entries[i].element) + ")");
    }
    if (j - i == 2 && entries[i].element == entries[i + 1].element)
      throw std::runtime_error("element " + std::to_string(entries[i].element) + " repeats a face");

    Face face;
    const Entry& l = entries[i];
    face.left = l.element;
    face.right = (j - i == 2) ? entries[i + 1].element : kBoundary;
    const auto e = element(l.element);
    const auto lf = local_face(dim_, static_cast<int>(e.size()), l.local);
    for (int c = 0; c < dim_; ++c) face.vertices[c] = e[lf[c]];

    const int fid = static_cast<int>(faces_.size());
    for (std::size_t t = i; t < j; ++t)
      element_face_ids_[element_offsets_[entries[t].element] + entries[t].local] = fid;

    if (dim_ == 2) {
      const Point& a = vertices_[face.vertices[0]];
      const Point& b = vertices_[face.vertices[1]];
      const Point d = b - a;
      face.measure = d.norm();
      face.diameter = face.measure;
      face.centroid = 0.5 * (a + b);
      face.normal = Point(d.y(), -d.x(), 0.0) / face.measure;  // CCW element: outward
    } else {
      const Point& a = vertices_[face.vertices[0]];
      const Point& b = vertices_[face.vertices[1]];
      const Point& c = vertices_[face.vertices[2]];
      const Point cr = (b - a).cross(c - a);
      face.measure = 0.5 * cr.norm();
      face.diameter = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
      face.centroid = (a + b + c) / 3.0;
      face.normal = cr.normalized();
      if (face.normal.dot(face.centroid - barycenters_[face.left]) < 0.0) face.normal = -face.normal;
    }
    faces_.push_back(face);
    i = j;
  }

  // vertex -> incident elements
  const std::size_t nv = vertices_.size();
  vertex_element_offsets_.assign(nv + 1, 0);
  for (int v : element_vertices_) ++vertex_element_offsets_[v + 1];
  std::partial_sum(vertex_element_offsets_.begin(), vertex_element_offsets_.end(),
                   vertex_element_offsets_.begin());
  vertex_element_ids_.assign(element_vertices_.size(), -1);
  std::vector<int> cursor(vertex_element_offsets_.begin(), vertex_element_offsets_.end() - 1);
  for (std::size_t k = 0; k < ne; ++k)
    for (int v : element(k)) vertex_element_ids_[cursor[v]++] = static_cast<int>(k);
}

std::vector<Point> Mesh::element_points(std::size_t k) const {
  std::vector<Point> pts;
  const auto e = element(k);
  pts.reserve(e.size());
  for (int v : e) pts.push_back(vertices_[v]);
  return pts;
}

double Mesh::total_volume() const {
  return std::accumulate(volumes_.begin(), volumes_.end(), 0.0);
}
double Mesh::max_diameter() const { return *std::max_element(diameters_.begin(), diameters_.end()); }
double Mesh::min_diameter() const { return *std::min_element(diameters_.begin(), diameters_.end()); }

Mesh gen_tri_mesh(const Box& domain, int n) {
  if (n < 1) throw std::invalid_argument("gen_tri_mesh: n must be >= 1");
  const Point ext = domain.upper - domain.lower;
  if (!(ext.x() > 0.0) || !(ext.y() > 0.0)) throw std::invalid_argument("gen_tri_mesh: degenerate domain");

  std::vector<Point> verts;
  verts.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      verts.emplace_back(domain.lower.x() + ext.x() * i / n, domain.lower.y() + ext.y() * j / n, 0.0);

  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::vector<int>> elems;
  elems.reserve(2 * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      elems.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return Mesh::from_elements(2, ElementKind::triangular, std::move(verts), elems);
}

Mesh gen_tet_mesh(const Box& domain, int n) {
  if (n < 1) throw std::invalid_argument("gen_tet_mesh: n must be >= 1");
  const Point ext = domain.upper - domain.lower;
  if (!(ext.x() > 0.0) || !(ext.y() > 0.0) || !(ext.z() > 0.0))
    throw std::invalid_argument("gen_tet_mesh: degenerate domain");

  std::vector<Point> verts;
  verts.reserve((n + 1) * (n + 1) * (n + 1));
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        verts.emplace_back(domain.lower.x() + ext.x() * i / n, domain.lower.y() + ext.y() * j / n,
                           domain.lower.z() + ext.z() * k / n);

  auto id = [n](std::array<int, 3> c) { return (c[2] * (n + 1) + c[1]) * (n + 1) + c[0]; };
  std::vector<std::vector<int>> elems;
  elems.reserve(6 * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::array<int, 3> perm{0, 1, 2};
        do {
          // Kuhn path from the cube's lower corner, one axis at a time.
          std::array<int, 3> c{i, j, k};
          std::vector<int> tet{id(c)};
          for (int axis : perm) {
            ++c[axis];
            tet.push_back(id(c));
          }
          elems.push_back(std::move(tet));
        } while (std::next_permutation(perm.begin(), perm.end()));
      }
  return Mesh::from_elements(3, ElementKind::tetrahedral, std::move(verts), elems);
}

Mesh refine_uniform(const Mesh& mesh) {
  if (!mesh.is_simplicial())
    throw std::invalid_argument("refine_uniform: polygonal meshes cannot be refined (non-nested)");

  std::vector<Point> verts = mesh.vertices();
  std::unordered_map<std::uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(verts.size());
    verts.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<std::vector<int>> elems;
  std::vector<int> parent;
  const std::size_t ne = mesh.num_elements();
  if (mesh.dim() == 2) {
    elems.reserve(4 * ne);
    for (std::size_t k = 0; k < ne; ++k) {
      const auto e = mesh.element(k);
      const int v0 = e[0], v1 = e[1], v2 = e[2];
      const int m01 = mid(v0, v1), m12 = mid(v1, v2), m20 = mid(v2, v0);
      elems.push_back({v0, m01, m20});
      elems.push_back({m01, v1, m12});
      elems.push_back({m20, m12, v2});
      elems.push_back({m01, m12, m20});
      parent.insert(parent.end(), 4, static_cast<int>(k));
    }
  } else {
    elems.reserve(8 * ne);
    for (std::size_t k = 0; k < ne; ++k) {
      const auto e = mesh.element(k);
      const int x0 = e[0], x1 = e[1], x2 = e[2], x3 = e[3];
      const int x01 = mid(x0, x1), x02 = mid(x0, x2), x03 = mid(x0, x3);
      const int x12 = mid(x1, x2), x13 = mid(x1, x3), x23 = mid(x2, x3);
      // Vertex ordering keeps Kuhn simplices Kuhn under refinement.
      elems.push_back({x0, x01, x02, x03});
      elems.push_back({x01, x1, x12, x13});
      elems.push_back({x02, x12, x2, x23});
      elems.push_back({x03, x13, x23, x3});
      elems.push_back({x01, x02, x03, x13});
      elems.push_back({x01, x02, x12, x13});
      elems.push_back({x02, x03, x13, x23});
      elems.push_back({x02, x12, x13, x23});
      parent.insert(parent.end(), 8, static_cast<int>(k));
    }
  }
  return Mesh::from_elements(mesh.dim(), mesh.kind(), std::move(verts), elems, std::move(parent));
}

Mesh parse_poly_mesh(const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  std::string tag;
  int dim = 0;
  if (!(in >> tag >> dim) || tag != "POLYMESH" || dim != 2)
    throw std::runtime_error("poly mesh: bad header (expected 'POLYMESH 2')");
  long nv = 0, ne = 0;
  if (!(in >> nv >> ne) || nv < 3 || ne < 1) throw std::runtime_error("poly mesh: bad counts line");

  std::vector<Point> verts(static_cast<std::size_t>(nv));
  for (auto& p : verts) {
    double x = 0, y = 0;
    if (!(in >> x >> y)) throw std::runtime_error("poly mesh: truncated vertex block");
    p = Point(x, y, 0.0);
  }
  std::vector<std::vector<int>> elems(static_cast<std::size_t>(ne));
  for (long k = 0; k < ne; ++k) {
    int cnt = 0;
    if (!(in >> cnt) || cnt < 3)
      throw std::runtime_error("poly mesh: polygon " + std::to_string(k) + " has invalid vertex count");
    elems[k].resize(cnt);
    for (int& v : elems[k]) {
      long idx = 0;
      if (!(in >> idx)) throw std::runtime_error("poly mesh: truncated polygon " + std::to_string(k));
      if (idx < 0 || idx >= nv)
        throw std::out_of_range("poly mesh: polygon " + std::to_string(k) + " vertex index " +
                                std::to_string(idx) + " out of range");
      v = static_cast<int>(idx);
    }
  }
  return Mesh::from_elements(2, ElementKind::polygonal, std::move(verts), elems);
}

Mesh import_poly_mesh(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open mesh file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_poly_mesh(buf.str());
}

void write_poly_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  if (mesh.dim() != 2) throw std::invalid_argument("write_poly_mesh: 2D meshes only");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "POLYMESH 2\n" << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
  for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto e = mesh.element(k);
    out << e.size();
    for (int v : e) out << ' ' << v;
    out << '\n';
  }
}

std::vector<Mesh> nested_structured_meshes(int dim, const Box& domain, int coarse_n, int levels) {
  if (levels < 1) throw std::invalid_argument("nested_structured_meshes: levels must be >= 1");
  std::vector<Mesh> meshes;
  meshes.reserve(levels);
  meshes.push_back(dim == 2 ? gen_tri_mesh(domain, coarse_n) : gen_tet_mesh(domain, coarse_n));
  for (int l = 1; l < levels; ++l) meshes.push_back(refine_uniform(meshes.back()));
  return meshes;
}

}  // namespace rda
