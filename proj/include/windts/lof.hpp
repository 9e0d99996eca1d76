#pragma once

#include <vector>

#include "windts/common.hpp"

namespace windts::scada {

// Classic local outlier factor on the rows of `points` (Euclidean metric):
//   k-distance(p)   = distance to p's k-th nearest neighbor
//   N_k(p)          = p's k nearest neighbors, exactly k of them, distance
//                     ties broken by ascending point index
//   reach_k(p, o)   = max(k-distance(o), d(p, o))
//   lrd(p)          = 1 / mean_{o in N_k(p)} reach_k(p, o)
//   LOF(p)          = mean_{o in N_k(p)} lrd(o) / lrd(p)
// Coincident points can drive a mean reachability of zero; it is clamped to
// 1e-12 so scores stay finite (duplicated dense points score ~1).
// Requires 1 <= k <= M-1.
std::vector<double> lof(const Mat& points, int k);

}  // namespace windts::scada
