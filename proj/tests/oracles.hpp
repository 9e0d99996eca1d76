// Test-only reference implementations, written straight from the textbook
// definitions and kept independent of the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "windts/common.hpp"

namespace windts::testing {

inline double euclid(const Mat& m, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t d = 0; d < m.cols; ++d) {
    const double diff = m.at(a, d) - m.at(b, d);
    s += diff * diff;
  }
  return std::sqrt(s);
}

// DBSCAN from definitions:
//  - core points counted by brute force (self included);
//  - clusters are the connected components of the core-core eps-graph,
//    computed by fixed-point label propagation and numbered in ascending
//    order of their smallest core index;
//  - a border point joins the earliest-formed component among those
//    containing one of its core neighbors;
//  - everything else is noise (-1).
inline std::vector<int> dbscan_oracle(const Mat& pts, double eps, int min_pts) {
  const std::size_t n = pts.rows;
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (euclid(pts, i, j) <= eps) ++count;
    }
    core[i] = count >= min_pts;
  }

  // Label propagation to the minimum reachable core index.
  std::vector<std::size_t> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!core[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!core[j] || euclid(pts, i, j) > eps) continue;
        const std::size_t m = std::min(comp[i], comp[j]);
        if (comp[i] != m || comp[j] != m) {
          comp[i] = comp[j] = m;
          changed = true;
        }
      }
    }
  }

  // Components in ascending order of min core index -> cluster ids.
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i] && comp[i] == i) roots.push_back(i);
  }
  std::sort(roots.begin(), roots.end());
  auto cluster_of_root = [&](std::size_t root) {
    return static_cast<int>(std::lower_bound(roots.begin(), roots.end(), root) - roots.begin());
  };

  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) label[i] = cluster_of_root(comp[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (!core[j] || euclid(pts, i, j) > eps) continue;
      const int c = cluster_of_root(comp[j]);
      if (best == -1 || c < best) best = c;
    }
    label[i] = best;
  }
  return label;
}

// LOF from definitions, with exactly k neighbors (ties by ascending index)
// and the same 1e-12 clamp on mean reachability the library documents.
inline std::vector<double> lof_oracle(const Mat& pts, int k) {
  const std::size_t n = pts.rows;
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<std::vector<std::size_t>> nbr(n);
  std::vector<double> kdist(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.emplace_back(euclid(pts, i, j), j);
    }
    std::sort(d.begin(), d.end());
    for (std::size_t t = 0; t < kk; ++t) nbr[i].push_back(d[t].second);
    kdist[i] = d[kk - 1].first;
  }
  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t o : nbr[i]) sum += std::max(kdist[o], euclid(pts, i, o));
    lrd[i] = 1.0 / std::max(sum / static_cast<double>(kk), 1e-12);
  }
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t o : nbr[i]) sum += lrd[o];
    score[i] = sum / (static_cast<double>(kk) * lrd[i]);
  }
  return score;
}

// Canonical relabeling for permutation-invariance checks: clusters renamed
// in order of first appearance, noise left as -1.
inline std::vector<int> canonical_clusters(const std::vector<int>& labels) {
  std::vector<int> mapping;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      out[i] = -1;
      continue;
    }
    int found = -1;
    for (std::size_t m = 0; m < mapping.size(); ++m) {
      if (mapping[m] == labels[i]) {
        found = static_cast<int>(m);
        break;
      }
    }
    if (found < 0) {
      mapping.push_back(labels[i]);
      found = static_cast<int>(mapping.size()) - 1;
    }
    out[i] = found;
  }
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] <= b[ib]) {
      ++ia;
    } else {
      ++ib;
    }
    const double fa = static_cast<double>(ia) / static_cast<double>(a.size());
    const double fb = static_cast<double>(ib) / static_cast<double>(b.size());
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

}  // namespace windts::testing
