#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "wifisense/error.hpp"

namespace wifisense {

using Vector = std::vector<double>;

/// Flat clustering result. Labels are canonical: cluster ids are numbered
/// 0..k-1 in order of first appearance.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  std::vector<Vector> centroids;  // empty when the method has no centroids
  double quality = std::numeric_limits<double>::quiet_NaN();  // mean Silhouette

  bool operator==(const ClusterAssignment&) const = default;
};

/// Renumbers labels by first appearance; returns the number of distinct labels.
/// `remap` receives old -> new ids when given.
inline int canonicalize_labels(std::vector<int>& labels, std::map<int, int>* remap = nullptr) {
  std::map<int, int> ids;
  for (int& l : labels) {
    auto [it, inserted] = ids.emplace(l, static_cast<int>(ids.size()));
    l = it->second;
  }
  if (remap) *remap = ids;
  return static_cast<int>(ids.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

/// Dense symmetric distance matrix stored row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

inline void check_same_dimension(std::span<const Vector> points) {
  if (points.empty()) throw Error(Errc::EmptyInput, "no points");
  for (const auto& p : points)
    if (p.size() != points.front().size())
      throw Error(Errc::InvalidArgument, "points have different dimensions");
}

inline DistanceMatrix euclidean_distances(std::span<const Vector> points) {
  DistanceMatrix d{points.size(), std::vector<double>(points.size() * points.size(), 0.0)};
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) d(i, j) = d(j, i) = euclidean(points[i], points[j]);
  return d;
}

}  // namespace wifisense
