#include "ppdiff/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "ppdiff/errors.hpp"

namespace ppdiff {

namespace {

struct Basis {
  // Node ids: rows are 0..n-1, cols are n..n+m-1. The basis is a spanning tree
  // with n+m-1 edges, each edge a basic cell (i, j).
  int n, m;
  std::vector<std::vector<int>> adj;  // neighbour node ids
  std::vector<double> flow;           // n*m, only basic cells meaningful
  std::vector<bool> basic;            // n*m

  Basis(int n_, int m_) : n(n_), m(m_), adj(n_ + m_), flow(static_cast<std::size_t>(n_) * m_, 0.0),
                          basic(static_cast<std::size_t>(n_) * m_, false) {}

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(i) * m + j; }

  void add_edge(int i, int j) {
    basic[cell(i, j)] = true;
    adj[i].push_back(n + j);
    adj[n + j].push_back(i);
  }

  void remove_edge(int i, int j) {
    basic[cell(i, j)] = false;
    auto& ai = adj[i];
    ai.erase(std::find(ai.begin(), ai.end(), n + j));
    auto& aj = adj[n + j];
    aj.erase(std::find(aj.begin(), aj.end(), i));
  }
};

}  // namespace

double transport_min_cost(int n, int m, const std::vector<double>& cost,
                          const std::vector<double>& supply, const std::vector<double>& demand) {
  if (n < 1 || m < 1 || cost.size() != static_cast<std::size_t>(n) * m ||
      supply.size() != static_cast<std::size_t>(n) || demand.size() != static_cast<std::size_t>(m)) {
    throw UsageError("transport_min_cost: inconsistent sizes");
  }
  double total_s = 0.0, total_d = 0.0;
  for (double v : supply) {
    if (!(v > 0.0) || v != std::floor(v)) throw UsageError("transport_min_cost: supplies must be positive integers");
    total_s += v;
  }
  for (double v : demand) {
    if (!(v > 0.0) || v != std::floor(v)) throw UsageError("transport_min_cost: demands must be positive integers");
    total_d += v;
  }
  if (total_s != total_d) throw UsageError("transport_min_cost: supply/demand totals differ");

  Basis B(n, m);
  std::vector<double> rem_s = supply, rem_d = demand;

  // Least-cost greedy start. Ties and exhausted rows/cols handled so that
  // exactly n+m-1 cells (possibly with zero flow) enter the basis.
  {
    std::vector<bool> row_done(n, false), col_done(m, false);
    int rows_left = n, cols_left = m;
    while (rows_left > 0 && cols_left > 0) {
      int bi = -1, bj = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (row_done[i]) continue;
        const double* cr = cost.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
          if (!col_done[j] && cr[j] < best) {
            best = cr[j];
            bi = i;
            bj = j;
          }
        }
      }
      const double q = std::min(rem_s[bi], rem_d[bj]);
      B.add_edge(bi, bj);
      B.flow[B.cell(bi, bj)] = q;
      rem_s[bi] -= q;
      rem_d[bj] -= q;
      // Close only one side per step (even on ties), so exactly n+m-1 cells
      // enter and the basis stays a spanning tree; ties leave a zero-remainder
      // line active that later absorbs a degenerate zero-flow cell.
      if (rem_s[bi] == 0.0 && (rem_d[bj] > 0.0 || rows_left > 1)) {
        row_done[bi] = true;
        --rows_left;
      } else {
        col_done[bj] = true;
        --cols_left;
      }
    }
  }

  std::vector<double> u(n, 0.0), v(m, 0.0);
  std::vector<int> parent(n + m, -1), order;
  order.reserve(n + m);
  std::vector<bool> seen(n + m, false);

  const long max_iters = 2000L * (n + m) + 20000L;
  for (long iter = 0;; ++iter) {
    if (iter > max_iters) {
      throw NumericError("transport_min_cost: pivot limit exceeded");
    }
    // Potentials from the basis tree (u[root] = 0).
    std::fill(seen.begin(), seen.end(), false);
    order.clear();
    order.push_back(0);
    seen[0] = true;
    u[0] = 0.0;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const int x = order[head];
      for (int y : B.adj[x]) {
        if (seen[y]) continue;
        seen[y] = true;
        if (x < n) {
          v[y - n] = cost[B.cell(x, y - n)] - u[x];
        } else {
          u[y] = cost[B.cell(y, x - n)] - v[x - n];
        }
        order.push_back(y);
      }
    }

    // Entering cell: most negative reduced cost.
    int ei = -1, ej = -1;
    double best = -1e-12;
    for (int i = 0; i < n; ++i) {
      const double* cr = cost.data() + static_cast<std::size_t>(i) * m;
      const double ui = u[i];
      for (int j = 0; j < m; ++j) {
        const double r = cr[j] - ui - v[j];
        if (r < best && !B.basic[B.cell(i, j)]) {
          best = r;
          ei = i;
          ej = j;
        }
      }
    }
    if (ei < 0) break;  // optimal

    // Unique tree path from row node ei to col node n+ej; adding (ei,ej)
    // closes the pivot cycle.
    std::fill(seen.begin(), seen.end(), false);
    std::fill(parent.begin(), parent.end(), -1);
    std::queue<int> q;
    q.push(ei);
    seen[ei] = true;
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      if (x == n + ej) break;
      for (int y : B.adj[x]) {
        if (!seen[y]) {
          seen[y] = true;
          parent[y] = x;
          q.push(y);
        }
      }
    }
    std::vector<int> path;  // node sequence from entering col back to entering row
    for (int x = n + ej; x != -1; x = parent[x]) path.push_back(x);
    std::reverse(path.begin(), path.end());  // ei ... n+ej

    // Cycle cells alternate +/- starting with the entering cell as +.
    // path edges: (path[0], path[1]), (path[1], path[2]), ... get -, +, -, ...
    double theta = std::numeric_limits<double>::infinity();
    int li = -1, lj = -1;
    for (std::size_t e = 0; e + 1 < path.size(); ++e) {
      if (e % 2 == 0) {  // minus edge
        const int a = path[e], b = path[e + 1];
        const int i = a < n ? a : b;
        const int j = a < n ? b - n : a - n;
        const double f = B.flow[B.cell(i, j)];
        if (f < theta) {
          theta = f;
          li = i;
          lj = j;
        }
      }
    }
    for (std::size_t e = 0; e + 1 < path.size(); ++e) {
      const int a = path[e], b = path[e + 1];
      const int i = a < n ? a : b;
      const int j = a < n ? b - n : a - n;
      B.flow[B.cell(i, j)] += (e % 2 == 0) ? -theta : theta;
    }
    B.remove_edge(li, lj);
    B.add_edge(ei, ej);
    B.flow[B.cell(ei, ej)] = theta;
  }

  double obj = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const std::size_t c = B.cell(i, j);
      if (B.basic[c] && B.flow[c] != 0.0) obj += cost[c] * B.flow[c];
    }
  }
  return obj;
}

}  // namespace ppdiff
