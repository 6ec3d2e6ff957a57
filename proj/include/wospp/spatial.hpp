#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wospp/vec2.hpp"

namespace wospp {

// Uniform-cell hash for fixed-radius neighbor queries in the plane.
class NeighborGrid {
public:
    NeighborGrid() = default;
    NeighborGrid(std::span<const Vec2> points, double cell_size) { rebuild(points, cell_size); }

    void rebuild(std::span<const Vec2> points, double cell_size);

    // Indices j != i with |p_j - p_i| <= radius, in ascending index order.
    void within(std::size_t i, double radius, std::vector<int>& out) const;

    [[nodiscard]] std::size_t size() const { return points_.size(); }

private:
    [[nodiscard]] std::int64_t cell_of(double v) const;
    static std::uint64_t key(std::int64_t cx, std::int64_t cy);

    std::vector<Vec2> points_;
    double cell_ = 1.0;
    std::vector<std::uint64_t> keys_;  // sorted cell keys, parallel to order_
    std::vector<int> order_;
};

// Communication graph helpers (edge iff distance <= range).
std::vector<std::vector<int>> adjacency(std::span<const Vec2> points, double range);
bool is_connected(std::span<const Vec2> points, double range);
// Hop distances from `source`; -1 for unreachable agents.
std::vector<int> hop_distances(const std::vector<std::vector<int>>& adj, int source);
// Maximum finite hop distance over all pairs.
int hop_diameter(std::span<const Vec2> points, double range);

}  // namespace wospp
