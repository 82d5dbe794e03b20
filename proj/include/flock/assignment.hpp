#pragma once

#include <vector>

namespace flocking {

// Hungarian method on a square cost matrix. Returns column[row] such that the
// summed cost is minimal. Ties resolve deterministically.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

} // namespace flocking
