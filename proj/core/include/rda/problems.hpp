#pragma once

#include <string>
#include <vector>

#include "rda/dgcore.hpp"

namespace rda {

/// Built-in test problems with closed-form solutions:
///   example1  sin(2 pi (x+y)) sin(2 pi y) + x^2 y on (-1,1)^2, A = I
///   example3, example4  same as example1 (conditioning and preconditioner studies)
///   example2  sin(x+y+z) on (0,1)^3
///   example7  same as example2
///   example5  exp(x^2+y^2) sin(xy) on (-1,1)^2 (polygonal meshes)
///   example6  sin(x/3) + cos(10y) on (-1,1)^2, A = diag(3, 0.1)
///   manufactured:poly<k>  (0.3 + x + y/2 [+ z/4])^k on (0,1)^dim, A = I
/// `dim` only matters for the manufactured family; other ids check it.
EllipticProblem make_problem(const std::string& id, int dim = 0);

std::vector<std::string> problem_ids();

}  // namespace rda
