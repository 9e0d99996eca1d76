#pragma once

#include <vector>

#include "windts/common.hpp"

namespace windts::scada {

inline constexpr int kDbscanNoise = -1;

// DBSCAN over Euclidean distance on the rows of `points`. A point is core
// when it has at least `min_pts` neighbors within `eps`, itself included.
// Clusters are grown by scanning seeds in ascending index order with a FIFO
// frontier whose neighbor visits are also index-ordered, so a border point
// joins the first core cluster that reaches it and labels are fully
// deterministic. Returns one cluster id per point, kDbscanNoise for noise.
std::vector<int> dbscan(const Mat& points, double eps, int min_pts);

}  // namespace windts::scada
