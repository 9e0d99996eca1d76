#include "windts/dbscan.hpp"

#include <cmath>
#include <deque>

namespace windts::scada {

namespace {

double sq_dist(const Mat& m, std::size_t a, std::size_t b) {
  double s = 0.0;
  const double* pa = m.v.data() + a * m.cols;
  const double* pb = m.v.data() + b * m.cols;
  for (std::size_t d = 0; d < m.cols; ++d) {
    const double diff = pa[d] - pb[d];
    s += diff * diff;
  }
  return s;
}

}  // namespace

std::vector<int> dbscan(const Mat& points, double eps, int min_pts) {
  WINDTS_REQUIRE(eps > 0.0, "dbscan: eps {} must be positive", eps);
  WINDTS_REQUIRE(min_pts >= 1, "dbscan: min_pts {} must be >= 1", min_pts);
  const std::size_t n = points.rows;
  if (n == 0) return {};

  const double eps2 = eps * eps;
  std::vector<std::vector<std::uint32_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i].push_back(static_cast<std::uint32_t>(i));  // self counts
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sq_dist(points, i, j) <= eps2) {
        neighbors[i].push_back(static_cast<std::uint32_t>(j));
        neighbors[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  // Neighbor lists are built out of order for j < i; restore ascending order
  // so expansion is deterministic.
  for (auto& lst : neighbors) std::sort(lst.begin(), lst.end());

  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);

  std::vector<int> label(n, kDbscanNoise);
  std::vector<bool> enqueued(n, false);
  int next_cluster = 0;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || label[seed] != kDbscanNoise) continue;
    const int cluster = next_cluster++;
    std::deque<std::uint32_t> frontier{static_cast<std::uint32_t>(seed)};
    enqueued[seed] = true;
    label[seed] = cluster;
    while (!frontier.empty()) {
      const std::uint32_t p = frontier.front();
      frontier.pop_front();
      if (!core[p]) continue;  // border points do not expand
      for (std::uint32_t q : neighbors[p]) {
        if (label[q] == kDbscanNoise) label[q] = cluster;
        if (core[q] && !enqueued[q]) {
          enqueued[q] = true;
          frontier.push_back(q);
        }
      }
    }
  }
  return label;
}

}  // namespace windts::scada
