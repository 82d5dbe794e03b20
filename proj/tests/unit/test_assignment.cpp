#include "flock/assignment.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

using namespace flocking;

namespace {

double total(const std::vector<std::vector<double>>& cost, const std::vector<int>& col)
{
    double sum = 0.0;
    for (std::size_t r = 0; r < col.size(); ++r)
        sum += cost[r][static_cast<std::size_t>(col[r])];
    return sum;
}

// Exhaustive search over permutations.
double brute_force(const std::vector<std::vector<double>>& cost)
{
    std::vector<int> perm(cost.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, total(cost, perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

TEST_CASE("assignment is a permutation with brute-force optimal cost")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int n = 1; n <= 7; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<std::vector<double>> cost(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
            for (auto& row : cost)
                for (auto& c : row)
                    c = u(gen);
            const auto col = min_cost_assignment(cost);
            REQUIRE(col.size() == static_cast<std::size_t>(n));
            std::vector<int> sorted = col;
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < n; ++i)
                CHECK(sorted[static_cast<std::size_t>(i)] == i);
            CHECK(std::abs(total(cost, col) - brute_force(cost)) < 1e-9);
        }
    }
}

TEST_CASE("empty and diagonal cost matrices")
{
    CHECK(min_cost_assignment({}).empty());
    const std::vector<std::vector<double>> diag = {{0, 5, 5}, {5, 0, 5}, {5, 5, 0}};
    CHECK(min_cost_assignment(diag) == std::vector<int>{0, 1, 2});
}
