#include "presstyle/meanshift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptn {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

int ClusterModel::nearest_mode(const std::vector<double>& point) const {
  if (modes.empty()) throw ClusterError("nearest_mode: empty model");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double d = sq_dist(modes[m], point);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(m);
    }
  }
  return best;
}

double auto_bandwidth(const std::vector<std::vector<double>>& points) {
  const std::size_t n = points.size();
  if (n < 2) throw ClusterError("auto_bandwidth: need at least two points");
  // deterministic stride subsample keeps the pair count manageable
  const std::size_t cap = 400;
  const std::size_t step = n > cap ? (n + cap - 1) / cap : 1;
  std::vector<double> dists;
  for (std::size_t i = 0; i < n; i += step) {
    for (std::size_t j = i + step; j < n; j += step) {
      dists.push_back(std::sqrt(sq_dist(points[i], points[j])));
    }
  }
  if (dists.empty()) throw ClusterError("auto_bandwidth: no point pairs");
  // The 10th-percentile pairwise distance tracks the within-cluster scale:
  // in a multi-blob set the closest tenth of the pairs is intra-blob, while
  // a single blob yields a bandwidth wide enough not to fragment it. The 0.6
  // factor keeps the Gaussian kernel from bridging adjacent blobs.
  std::sort(dists.begin(), dists.end());
  std::size_t i = dists.size() / 10;
  while (i < dists.size() && dists[i] <= 0.0) ++i;  // skip duplicate points
  if (i == dists.size()) {
    throw ClusterError("auto_bandwidth: points are coincident");
  }
  return 0.6 * dists[i];
}

MeanShiftResult mean_shift(const std::vector<std::vector<double>>& points,
                           const MeanShiftOptions& opts) {
  if (points.empty()) throw ClusterError("mean_shift: no points");
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ClusterError("mean_shift: ragged point dimensions");
    for (double v : p) {
      if (!std::isfinite(v)) throw ClusterError("mean_shift: non-finite descriptor");
    }
  }

  if (points.size() == 1) {
    MeanShiftResult res;
    res.model.bandwidth = opts.bandwidth > 0.0 ? opts.bandwidth : 1.0;
    res.model.modes.push_back(points[0]);
    res.labels.assign(1, 0);
    return res;
  }

  double bw = opts.bandwidth;
  if (bw == 0.0) bw = auto_bandwidth(points);
  if (bw <= 0.0) throw ClusterError("mean_shift: bandwidth must be positive");
  const double bw2 = bw * bw;
  const double tol2 = (opts.tolerance_factor * bw) * (opts.tolerance_factor * bw);

  // shift every point uphill until it stalls
  std::vector<std::vector<double>> shifted(points.size());
  std::vector<double> next(dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> x = points[i];
    for (int it = 0; it < opts.max_iterations; ++it) {
      std::fill(next.begin(), next.end(), 0.0);
      double wsum = 0.0;
      for (const auto& p : points) {
        const double d2 = sq_dist(x, p);
        double w;
        if (opts.gaussian_kernel) {
          w = std::exp(-0.5 * d2 / bw2);
        } else {
          w = d2 <= bw2 ? 1.0 : 0.0;
        }
        if (w == 0.0) continue;
        wsum += w;
        for (std::size_t k = 0; k < dim; ++k) next[k] += w * p[k];
      }
      if (wsum == 0.0) break;  // flat kernel with nothing in range
      for (std::size_t k = 0; k < dim; ++k) next[k] /= wsum;
      const double move2 = sq_dist(x, next);
      x = next;
      if (move2 < tol2) break;
    }
    shifted[i] = x;
  }

  // merge stalled points closer than bandwidth/2 into one mode; the mode is
  // the mean of its members so the result is insensitive to point order
  const double merge2 = 0.25 * bw2;
  std::vector<std::vector<double>> mode_sum;
  std::vector<int> mode_count;
  std::vector<int> assign(points.size(), -1);
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    int hit = -1;
    for (std::size_t m = 0; m < mode_sum.size(); ++m) {
      std::vector<double> center(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        center[k] = mode_sum[m][k] / mode_count[m];
      }
      if (sq_dist(shifted[i], center) < merge2) {
        hit = static_cast<int>(m);
        break;
      }
    }
    if (hit < 0) {
      mode_sum.push_back(shifted[i]);
      mode_count.push_back(1);
      assign[i] = static_cast<int>(mode_sum.size()) - 1;
    } else {
      for (std::size_t k = 0; k < dim; ++k) mode_sum[hit][k] += shifted[i][k];
      mode_count[hit] += 1;
      assign[i] = hit;
    }
  }

  MeanShiftResult res;
  res.model.bandwidth = bw;
  res.model.modes.resize(mode_sum.size());
  for (std::size_t m = 0; m < mode_sum.size(); ++m) {
    res.model.modes[m].resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      res.model.modes[m][k] = mode_sum[m][k] / mode_count[m];
    }
  }
  res.labels.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    res.labels[i] = res.model.nearest_mode(shifted[i]);
  }
  return res;
}

}  // namespace ptn
