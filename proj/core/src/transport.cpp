#include "transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slowfast/error.hpp"

namespace slowfast::detail {

double transport_cost(std::span<const double> supply, std::span<const double> demand,
                      const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t n = supply.size(), m = demand.size();
  if (n == 0 || m == 0) return 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> c(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      c[i * m + j] = cost(i, j);
      if (!(c[i * m + j] >= 0.0)) throw DomainError("transport costs must be nonnegative");
    }
  }
  double total = 0.0;
  for (double s : supply) total += s;
  const double eps = 1e-14 * std::max(total, 1e-300);

  std::vector<double> left(supply.begin(), supply.end());
  std::vector<double> need(demand.begin(), demand.end());
  std::vector<double> flow(n * m, 0.0);
  // Node v < n is source v, node n + j is sink j.
  const std::size_t nodes = n + m;
  std::vector<double> pot(nodes, 0.0), dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> done(nodes);
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  for (;;) {
    bool any = false;
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), none);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (left[i] > eps) {
        dist[i] = 0.0;
        any = true;
      }
    }
    if (!any) break;

    std::size_t target = none;
    for (;;) {
      std::size_t u = none;
      double best = inf;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      }
      if (u == none) break;
      done[u] = 1;
      if (u >= n && need[u - n] > eps) {
        target = u;
        break;
      }
      if (u < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) continue;
          const double d = dist[u] + std::max(0.0, c[u * m + j] + pot[u] - pot[v]);
          if (d < dist[v]) {
            dist[v] = d;
            parent[v] = u;
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || flow[i * m + j] <= eps) continue;
          const double d = dist[u] + std::max(0.0, -c[i * m + j] + pot[u] - pot[i]);
          if (d < dist[i]) {
            dist[i] = d;
            parent[i] = u;
          }
        }
      }
    }
    if (target == none) break;  // remaining imbalance is rounding noise

    const double dt = dist[target];
    for (std::size_t v = 0; v < nodes; ++v) pot[v] += std::min(dist[v], dt);

    // Bottleneck along the path back to a source with spare supply.
    double amount = need[target - n];
    std::size_t v = target;
    while (parent[v] != none) {
      const std::size_t u = parent[v];
      if (v < n) amount = std::min(amount, flow[v * m + (u - n)]);
      v = u;
    }
    amount = std::min(amount, left[v]);
    left[v] -= amount;
    need[target - n] -= amount;
    v = target;
    while (parent[v] != none) {
      const std::size_t u = parent[v];
      if (v >= n) {
        flow[u * m + (v - n)] += amount;
      } else {
        flow[v * m + (u - n)] -= amount;
      }
      v = u;
    }
  }

  double value = 0.0;
  for (std::size_t k = 0; k < n * m; ++k) {
    if (flow[k] > 0.0) value += flow[k] * c[k];
  }
  return value;
}

}  // namespace slowfast::detail
