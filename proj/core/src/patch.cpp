#include "rda/patch.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/QR>

#include "rda/polynomial.hpp"

namespace rda {

std::vector<int> vertex_neighbors(const Mesh& mesh, int k) {
  std::vector<int> out;
  for (int v : mesh.element(k)) {
    const auto inc = mesh.vertex_elements(v);
    out.insert(out.end(), inc.begin(), inc.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ElementPatch build_patch(const Mesh& mesh, int owner, int threshold) {
  const int ne = static_cast<int>(mesh.num_elements());
  if (owner < 0 || owner >= ne) throw std::out_of_range("build_patch: element index out of range");
  if (threshold < 1) throw std::invalid_argument("build_patch: threshold must be >= 1");

  ElementPatch patch;
  patch.owner = owner;
  patch.members.push_back(owner);
  std::vector<char> in_patch(ne, 0);
  in_patch[owner] = 1;
  std::vector<int> frontier{owner};

  while (static_cast<int>(patch.members.size()) < threshold) {
    std::vector<int> ring;
    for (int k : frontier)
      for (int v : mesh.element(k))
        for (int n : mesh.vertex_elements(v))
          if (!in_patch[n]) {
            in_patch[n] = 1;
            ring.push_back(n);
          }
    if (ring.empty()) {
      patch.truncated = true;
      break;
    }
    std::sort(ring.begin(), ring.end());
    patch.members.insert(patch.members.end(), ring.begin(), ring.end());
    frontier = std::move(ring);
    ++patch.depth;
  }
  patch.collocation.reserve(patch.members.size());
  for (int k : patch.members) patch.collocation.push_back(mesh.barycenter(k));
  return patch;
}

std::vector<ElementPatch> build_patches(const Mesh& mesh, int threshold, std::optional<int> degree) {
  std::vector<ElementPatch> patches;
  patches.reserve(mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    patches.push_back(build_patch(mesh, static_cast<int>(k), threshold));
    if (degree) patches.back().rank_ok = check_unisolvence(mesh, patches.back(), *degree).rank_ok;
  }
  return patches;
}

std::optional<int> default_threshold(int m, int dim, ElementKind kind) {
  if (dim == 2 && kind == ElementKind::triangular) {
    constexpr int table[] = {8, 10, 15, 21};
    if (m >= 1 && m <= 4) return table[m - 1];
  } else if (dim == 2 && kind == ElementKind::polygonal) {
    constexpr int table[] = {8, 15, 21, 27};
    if (m >= 1 && m <= 4) return table[m - 1];
  } else if (dim == 3 && kind == ElementKind::tetrahedral) {
    constexpr int table[] = {10, 19, 38};
    if (m >= 1 && m <= 3) return table[m - 1];
  }
  return std::nullopt;
}

RankReport check_unisolvence(const Mesh& mesh, const ElementPatch& patch, int m) {
  const MonomialBasis basis(mesh.dim(), m);
  const auto frame = element_frame(mesh, patch.owner);
  Eigen::MatrixXd V(patch.collocation.size(), basis.size());
  for (std::size_t i = 0; i < patch.collocation.size(); ++i) {
    Eigen::VectorXd row(basis.size());
    basis.eval(frame.to_local(patch.collocation[i]), row);
    V.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  RankReport report;
  report.required = basis.size();
  if (V.rows() == 0) return report;
  // First pivot of column-pivoted QR is the largest column norm, so the
  // threshold is relative to it.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  qr.setThreshold(1e-10);
  report.rank = static_cast<int>(qr.rank());
  report.rank_ok = report.rank == report.required;
  return report;
}

}  // namespace rda
