#include "windts/lof.hpp"

#include <algorithm>
#include <cmath>

namespace windts::scada {

std::vector<double> lof(const Mat& points, int k) {
  const std::size_t n = points.rows;
  WINDTS_REQUIRE(k >= 1, "lof: k {} must be >= 1", k);
  WINDTS_REQUIRE(static_cast<std::size_t>(k) <= n - 1 && n >= 2,
                 "lof: k {} must be <= M-1 with M = {}", k, n);

  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<std::vector<std::uint32_t>> knn(n);
  std::vector<std::vector<double>> knn_dist(n);
  std::vector<double> kdist(n);

  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    const double* pi = points.v.data() + i * points.cols;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double* pj = points.v.data() + j * points.cols;
      double s = 0.0;
      for (std::size_t d = 0; d < points.cols; ++d) {
        const double diff = pi[d] - pj[d];
        s += diff * diff;
      }
      cand.emplace_back(std::sqrt(s), static_cast<std::uint32_t>(j));
    }
    // ties broken by ascending index via the pair's second member
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
    knn[i].reserve(kk);
    knn_dist[i].reserve(kk);
    for (std::size_t t = 0; t < kk; ++t) {
      knn[i].push_back(cand[t].second);
      knn_dist[i].push_back(cand[t].first);
    }
    kdist[i] = knn_dist[i].back();
  }

  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double reach_sum = 0.0;
    for (std::size_t t = 0; t < kk; ++t) {
      reach_sum += std::max(kdist[knn[i][t]], knn_dist[i][t]);
    }
    lrd[i] = 1.0 / std::max(reach_sum / static_cast<double>(kk), 1e-12);
  }

  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::uint32_t o : knn[i]) s += lrd[o];
    score[i] = s / (static_cast<double>(kk) * lrd[i]);
  }
  return score;
}

}  // namespace windts::scada
