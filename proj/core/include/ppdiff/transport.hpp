#pragma once

#include <vector>

namespace ppdiff {

// Exact minimum-cost transportation plan objective for integer-valued supplies
// and demands (transportation simplex with least-cost initialization). cost is
// row-major n x m. Supplies and demands must be positive integers stored as
// doubles with equal totals; flows then stay integral, so the optimum is exact
// up to cost arithmetic.
double transport_min_cost(int n, int m, const std::vector<double>& cost,
                          const std::vector<double>& supply, const std::vector<double>& demand);

}  // namespace ppdiff
