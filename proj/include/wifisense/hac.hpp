#pragma once

// Average-linkage agglomerative clustering with optimal leaf ordering.

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "wifisense/cluster.hpp"
#include "wifisense/error.hpp"

namespace wifisense {

/// One agglomeration step. Leaves are clusters 0..n-1; the cluster created by
/// step s gets id n+s. `a < b`.
struct Merge {
  int a = 0;
  int b = 0;
  double height = 0.0;
  int size = 0;

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  int n = 0;
  std::vector<Merge> merges;
  std::vector<int> leaf_order;
};

/// Average linkage over a precomputed distance matrix. Equal linkages are
/// broken by the smallest (min id, max id) pair.
inline Dendrogram average_linkage(const DistanceMatrix& dist) {
  const int n = static_cast<int>(dist.n);
  if (n < 2) throw Error(Errc::InvalidArgument, "hierarchical clustering needs at least 2 points");
  const int total = 2 * n - 1;
  std::vector<double> link(static_cast<std::size_t>(total) * total, 0.0);
  auto L = [&](int i, int j) -> double& { return link[static_cast<std::size_t>(i) * total + j]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) L(i, j) = dist(i, j);
  std::vector<int> size(total, 1);
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);

  Dendrogram d;
  d.n = n;
  for (int step = 0; step < n - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (std::size_t x = 0; x < active.size(); ++x)
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        double v = L(active[x], active[y]);
        if (v < best) {
          best = v;
          bi = active[x];
          bj = active[y];
        }
      }
    if (!d.merges.empty()) {
      double prev = d.merges.back().height;
      if (best < prev - 1e-12 * std::max(1.0, std::abs(prev)))
        throw Error(Errc::NonMonotoneMerge, "merge height decreased");
    }
    const int id = n + step;
    size[id] = size[bi] + size[bj];
    for (int other : active) {
      if (other == bi || other == bj) continue;
      double v = (size[bi] * L(bi, other) + size[bj] * L(bj, other)) / size[id];
      L(id, other) = L(other, id) = v;
    }
    d.merges.push_back({bi, bj, best, size[id]});
    active.erase(std::remove_if(active.begin(), active.end(), [&](int c) { return c == bi || c == bj; }),
                 active.end());
    active.push_back(id);
  }
  return d;
}

namespace detail {

inline std::vector<std::vector<int>> cluster_members(const Dendrogram& d) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(2 * d.n - 1));
  for (int i = 0; i < d.n; ++i) members[i] = {i};
  for (std::size_t s = 0; s < d.merges.size(); ++s) {
    auto& m = members[d.n + s];
    m = members[d.merges[s].a];
    m.insert(m.end(), members[d.merges[s].b].begin(), members[d.merges[s].b].end());
  }
  return members;
}

}  // namespace detail

/// Sum of distances between successive leaves of an ordering.
inline double leaf_order_cost(std::span<const int> order, const DistanceMatrix& dist) {
  double c = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) c += dist(order[i - 1], order[i]);
  return c;
}

/// Orders the leaves so that the summed distance between neighbours is minimal
/// over all orders obtainable by flipping subtrees. Exact dynamic program over
/// (leftmost leaf, rightmost leaf) pairs of every subtree, O(n^4).
inline std::vector<int> optimal_leaf_order(const Dendrogram& d, const DistanceMatrix& dist) {
  const int n = d.n;
  if (n == 1) return {0};
  const double inf = std::numeric_limits<double>::infinity();
  auto members = detail::cluster_members(d);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  // cost[v][i*n+j]: best cost of ordering v's leaves from leaf i to leaf j.
  std::vector<std::vector<double>> cost(2 * n - 1, std::vector<double>(nn, inf));
  std::vector<std::vector<std::pair<int, int>>> via(2 * n - 1, std::vector<std::pair<int, int>>(nn, {-1, -1}));
  for (int i = 0; i < n; ++i) cost[i][i * n + i] = 0.0;

  for (std::size_t s = 0; s < d.merges.size(); ++s) {
    const int v = n + static_cast<int>(s);
    const int l = d.merges[s].a, r = d.merges[s].b;
    for (int i : members[l])
      for (int j : members[r]) {
        double best = inf;
        std::pair<int, int> arg{-1, -1};
        for (int k : members[l]) {
          double left = cost[l][i * n + k];
          if (left == inf) continue;
          for (int m : members[r]) {
            double right = cost[r][m * n + j];
            if (right == inf) continue;
            double c = left + dist(k, m) + right;
            if (c < best) {
              best = c;
              arg = {k, m};
            }
          }
        }
        cost[v][i * n + j] = cost[v][j * n + i] = best;
        via[v][i * n + j] = arg;
        via[v][j * n + i] = {arg.second, arg.first};
      }
  }

  // Reconstructs the leaf sequence of subtree v running from leaf i to leaf j.
  std::vector<int> order;
  std::vector<char> in_left(static_cast<std::size_t>(2 * n - 1) * n, 0);
  for (std::size_t s = 0; s < d.merges.size(); ++s)
    for (int leaf : members[d.merges[s].a]) in_left[(n + s) * n + leaf] = 1;
  auto emit = [&](auto&& self, int v, int i, int j) -> void {
    if (v < n) {
      order.push_back(v);
      return;
    }
    const Merge& m = d.merges[v - n];
    auto [k, mm] = via[v][i * n + j];
    bool i_left = in_left[static_cast<std::size_t>(v) * n + i];
    int first = i_left ? m.a : m.b;
    int second = i_left ? m.b : m.a;
    self(self, first, i, k);
    self(self, second, mm, j);
  };

  const int root = 2 * n - 2;
  const Merge& top = d.merges.back();
  double best = inf;
  int bi = -1, bj = -1;
  for (int i : members[top.a])
    for (int j : members[top.b])
      if (cost[root][i * n + j] < best) {
        best = cost[root][i * n + j];
        bi = i;
        bj = j;
      }
  emit(emit, root, bi, bj);
  return order;
}

/// Full average-linkage tree on Euclidean distances between feature rows,
/// with the optimal leaf order filled in.
inline Dendrogram hierarchical_cluster(std::span<const Vector> features) {
  check_same_dimension(features);
  auto dist = euclidean_distances(features);
  Dendrogram d = average_linkage(dist);
  d.leaf_order = optimal_leaf_order(d, dist);
  return d;
}

/// Flat labels from the cut that leaves `k` clusters.
inline ClusterAssignment cut_dendrogram(const Dendrogram& d, int k) {
  if (k < 1 || k > d.n) throw Error(Errc::InvalidK, "k=" + std::to_string(k) + " outside [1, " + std::to_string(d.n) + "]");
  std::vector<int> parent(2 * d.n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int s = 0; s < d.n - k; ++s) {
    parent[find(d.merges[s].a)] = d.n + s;
    parent[find(d.merges[s].b)] = d.n + s;
  }
  ClusterAssignment out;
  out.labels.resize(d.n);
  for (int i = 0; i < d.n; ++i) out.labels[i] = find(i);
  out.k = canonicalize_labels(out.labels);
  return out;
}

}  // namespace wifisense
