#pragma once

// Shape-based distance (normalized cross-correlation over all shifts) and
// k-shape clustering of z-normalized series.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "wifisense/cluster.hpp"
#include "wifisense/error.hpp"
#include "wifisense/random.hpp"

namespace wifisense {

/// Subtracts the mean and divides by the population standard deviation.
inline Vector znormalize(std::span<const double> x) {
  if (x.size() < 2) throw Error(Errc::ZeroVariance, "series needs at least 2 values");
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  double sigma = std::sqrt(var / static_cast<double>(x.size()));
  if (!(sigma > 1e-12)) throw Error(Errc::ZeroVariance, "series has zero variance");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / sigma;
  return out;
}

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

namespace detail {

// In-place iterative radix-2 FFT; `a.size()` must be a power of two.
inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2 * M_PI / static_cast<double>(len) * (inverse ? 1 : -1);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1);
      for (std::size_t j = 0; j < len / 2; ++j) {
        auto u = a[i + j];
        auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

}  // namespace detail

/// Cross-correlation CC_s(x, y) = sum_l x[l+s] * y[l] for s = -(m-1)..(m-1),
/// returned at index s + m - 1. Shifts of magnitude m have no overlap and are zero.
inline Vector cross_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  if (m == 0 || y.size() != m) throw Error(Errc::InvalidArgument, "cross_correlation needs equal, non-zero lengths");
  std::size_t size = 1;
  while (size < 2 * m - 1) size <<= 1;
  std::vector<std::complex<double>> fx(size), fy(size);
  for (std::size_t i = 0; i < m; ++i) {
    fx[i] = x[i];
    fy[i] = y[i];
  }
  detail::fft(fx, false);
  detail::fft(fy, false);
  for (std::size_t i = 0; i < size; ++i) fx[i] *= std::conj(fy[i]);
  detail::fft(fx, true);
  Vector cc(2 * m - 1);
  for (std::size_t s = 0; s < m; ++s) cc[m - 1 + s] = fx[s].real();
  for (std::size_t s = 1; s < m; ++s) cc[m - 1 - s] = fx[size - s].real();
  return cc;
}

struct SbdResult {
  double distance = 0.0;  // in [0, 2]
  int shift = 0;          // maximizing s of CC_s(x, y)
};

/// 1 - max_s CC_s(x, y) / (|x| |y|). Near-equal maxima (within 1e-12) resolve
/// to the smallest |s|, negative before positive.
inline SbdResult sbd(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw Error(Errc::InvalidArgument, "sbd needs equal, non-zero lengths");
  double denom = norm2(x) * norm2(y);
  if (denom == 0.0) throw Error(Errc::ZeroNorm, "sbd of a zero-norm series");
  const int m = static_cast<int>(x.size());
  Vector cc = cross_correlation(x, y);
  double best = 0.0;  // |s| = m contributes zero correlation
  for (double v : cc) best = std::max(best, v / denom);
  int shift = 0;
  for (int mag = 0; mag <= m; ++mag) {
    bool found = false;
    for (int s : {-mag, mag}) {
      if (mag == 0 && s != 0) continue;
      double v = std::abs(s) >= m ? 0.0 : cc[static_cast<std::size_t>(s + m - 1)] / denom;
      if (v >= best - 1e-12) {
        shift = s;
        found = true;
        break;
      }
    }
    if (found) break;
  }
  return {std::clamp(1.0 - best, 0.0, 2.0), shift};
}

/// Delays `v` by `s` samples (advances for negative s), zero-filling.
inline Vector shift_series(std::span<const double> v, int s) {
  const int m = static_cast<int>(v.size());
  Vector out(v.size(), 0.0);
  for (int l = 0; l < m; ++l) {
    int t = l + s;
    if (t >= 0 && t < m) out[static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(l)];
  }
  return out;
}

inline constexpr double kPowerIterationTol = 1e-8;

/// Centroid maximizing the summed squared normalized correlation with the
/// members after aligning each of them to `reference` at its best SBD shift:
/// the leading eigenvector of Q^T S Q, S = sum a a^T, Q = I - 11^T/m, by power
/// iteration, z-normalized and signed to agree with the aligned member mean.
inline Vector extract_shape(std::span<const Vector> members, std::span<const double> reference) {
  const std::size_t m = reference.size();
  if (members.empty()) return Vector(m, 0.0);
  bool use_ref = norm2(reference) > 0.0;
  std::vector<Vector> aligned;
  aligned.reserve(members.size());
  for (const auto& x : members) {
    if (use_ref && norm2(x) > 0.0)
      aligned.push_back(shift_series(x, sbd(reference, x).shift));
    else
      aligned.push_back(x);
  }

  std::vector<double> S(m * m, 0.0);
  for (const auto& a : aligned)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) S[i * m + j] += a[i] * a[j];
  // M = Q S Q: double-centre S.
  std::vector<double> row_mean(m, 0.0), col_mean(m, 0.0);
  double all_mean = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      row_mean[i] += S[i * m + j] / static_cast<double>(m);
      col_mean[j] += S[i * m + j] / static_cast<double>(m);
      all_mean += S[i * m + j] / static_cast<double>(m * m);
    }
  std::vector<double> M(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) M[i * m + j] = S[i * m + j] - row_mean[i] - col_mean[j] + all_mean;

  Vector mean_aligned(m, 0.0);
  for (const auto& a : aligned)
    for (std::size_t i = 0; i < m; ++i) mean_aligned[i] += a[i] / static_cast<double>(aligned.size());

  auto center_unit = [m](Vector v) {
    double mu = 0.0;
    for (double x : v) mu += x / static_cast<double>(m);
    for (double& x : v) x -= mu;
    double n = norm2(v);
    if (n > 0.0)
      for (double& x : v) x /= n;
    return std::pair{v, n};
  };

  auto [v, start_norm] = center_unit(mean_aligned);
  if (!(start_norm > 1e-12)) {
    Vector ramp(m);
    for (std::size_t i = 0; i < m; ++i) ramp[i] = static_cast<double>(i) + 0.5 * std::sin(static_cast<double>(i) + 1.0);
    std::tie(v, start_norm) = center_unit(ramp);
    if (!(start_norm > 0.0)) return Vector(m, 0.0);
  }

  Vector w(m);
  for (int iter = 0; iter < 10000; ++iter) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += M[i * m + j] * v[j];
      w[i] = s;
    }
    double n = norm2(w);
    if (!(n > 0.0)) break;
    double delta = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      w[i] /= n;
      delta += (w[i] - v[i]) * (w[i] - v[i]);
    }
    v.swap(w);
    if (std::sqrt(delta) < kPowerIterationTol) break;
  }

  Vector c;
  try {
    c = znormalize(v);
  } catch (const Error&) {
    return Vector(m, 0.0);
  }
  double agree = 0.0;
  for (std::size_t i = 0; i < m; ++i) agree += c[i] * mean_aligned[i];
  if (agree < 0.0)
    for (double& x : c) x = -x;
  return c;
}

struct KShapeOptions {
  int max_iter = 100;
};

/// k-shape: alternate shape extraction and nearest-centroid assignment under
/// SBD until the labels stop changing. Initial labels are a seeded balanced
/// random partition. A cluster that empties is re-seeded with the series
/// farthest from its own centroid.
inline ClusterAssignment kshape(std::span<const Vector> series, int k, std::uint64_t seed,
                                const KShapeOptions& opts = {}) {
  check_same_dimension(series);
  const std::size_t n = series.size();
  const std::size_t m = series.front().size();
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw Error(Errc::InvalidK, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

  Rng rng(seed);
  std::vector<int> labels(n);
  auto perm = rng.sample_distinct(n, n);
  for (std::size_t i = 0; i < n; ++i) labels[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  std::vector<Vector> centroids(static_cast<std::size_t>(k), Vector(m, 0.0));
  std::vector<double> fit(n, 0.0);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    auto previous = labels;
    for (int c = 0; c < k; ++c) {
      std::vector<Vector> members;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == c) members.push_back(series[i]);
      if (!members.empty()) centroids[static_cast<std::size_t>(c)] = extract_shape(members, centroids[static_cast<std::size_t>(c)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = labels[i];
      for (int c = 0; c < k; ++c) {
        if (norm2(centroids[static_cast<std::size_t>(c)]) == 0.0) continue;
        double d = sbd(centroids[static_cast<std::size_t>(c)], series[i]).distance;
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      labels[i] = arg;
      fit[i] = best;
    }
    for (int c = 0; c < k; ++c) {
      if (std::count(labels.begin(), labels.end(), c) > 0) continue;
      std::size_t worst = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::count(labels.begin(), labels.end(), labels[i]) < 2) continue;
        if (worst == n || fit[i] > fit[worst]) worst = i;
      }
      if (worst == n) break;
      labels[worst] = c;
      fit[worst] = 0.0;
      try {
        centroids[static_cast<std::size_t>(c)] = znormalize(series[worst]);
      } catch (const Error&) {
        centroids[static_cast<std::size_t>(c)] = series[worst];
      }
    }
    if (labels == previous) break;
  }

  ClusterAssignment out;
  std::map<int, int> remap;
  out.labels = labels;
  out.k = canonicalize_labels(out.labels, &remap);
  out.centroids.assign(static_cast<std::size_t>(out.k), Vector{});
  for (auto [old_id, new_id] : remap) out.centroids[static_cast<std::size_t>(new_id)] = centroids[static_cast<std::size_t>(old_id)];
  return out;
}

/// Pairwise SBD matrix.
inline DistanceMatrix sbd_distances(std::span<const Vector> series) {
  DistanceMatrix d{series.size(), std::vector<double>(series.size() * series.size(), 0.0)};
  for (std::size_t i = 0; i < series.size(); ++i)
    for (std::size_t j = i + 1; j < series.size(); ++j) d(i, j) = d(j, i) = sbd(series[i], series[j]).distance;
  return d;
}

}  // namespace wifisense
