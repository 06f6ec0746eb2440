#pragma once

#include <optional>
#include <vector>

#include "rda/mesh.hpp"

namespace rda {

/// Element patch S(K) grown by vertex-adjacency rings around its owner.
struct ElementPatch {
  int owner = -1;
  std::vector<int> members;       // owner first, then ring by ring, ascending inside a ring
  std::vector<Point> collocation; // barycenters of members, same order
  int depth = 0;                  // number of rings added
  bool truncated = false;         // threshold exceeded the reachable element count
  bool rank_ok = true;            // unisolvence for the configured degree

  std::size_t size() const { return members.size(); }
};

/// Elements whose closure touches the closure of element k (k included),
/// ascending.
std::vector<int> vertex_neighbors(const Mesh& mesh, int k);

/// Grows S_t(K) until #S_t(K) >= threshold.
ElementPatch build_patch(const Mesh& mesh, int owner, int threshold);

/// All patches; when `degree` is given, rank_ok is filled for that degree.
std::vector<ElementPatch> build_patches(const Mesh& mesh, int threshold, std::optional<int> degree = {});

/// Default thresholds #S; empty for combinations without one.
std::optional<int> default_threshold(int m, int dim, ElementKind kind);

struct RankReport {
  int rank = 0;
  int required = 0;  // dim P_m
  bool rank_ok = false;
};

/// Column rank of the collocation Vandermonde in the owner's scaled frame.
RankReport check_unisolvence(const Mesh& mesh, const ElementPatch& patch, int m);

}  // namespace rda
