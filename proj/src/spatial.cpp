#include "wospp/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace wospp {

std::int64_t NeighborGrid::cell_of(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
}

std::uint64_t NeighborGrid::key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xFFFFFFFFULL);
}

void NeighborGrid::rebuild(std::span<const Vec2> points, double cell_size) {
    points_.assign(points.begin(), points.end());
    cell_ = cell_size;
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<std::uint64_t> k(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i)
        k[i] = key(cell_of(points_[i].x), cell_of(points_[i].y));
    std::sort(order_.begin(), order_.end(), [&](int a, int b) {
        return k[a] != k[b] ? k[a] < k[b] : a < b;
    });
    keys_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) keys_[i] = k[order_[i]];
}

void NeighborGrid::within(std::size_t i, double radius, std::vector<int>& out) const {
    out.clear();
    const Vec2 p = points_[i];
    const double r2 = radius * radius;
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / cell_));
    const std::int64_t cx = cell_of(p.x);
    const std::int64_t cy = cell_of(p.y);
    for (std::int64_t dx = -reach; dx <= reach; ++dx) {
        for (std::int64_t dy = -reach; dy <= reach; ++dy) {
            const std::uint64_t kk = key(cx + dx, cy + dy);
            auto [lo, hi] = std::equal_range(keys_.begin(), keys_.end(), kk);
            for (auto it = lo; it != hi; ++it) {
                const int j = order_[static_cast<std::size_t>(it - keys_.begin())];
                if (static_cast<std::size_t>(j) == i) continue;
                if ((points_[j] - p).norm_sq() <= r2) out.push_back(j);
            }
        }
    }
    std::sort(out.begin(), out.end());
}

std::vector<std::vector<int>> adjacency(std::span<const Vec2> points, double range) {
    NeighborGrid grid(points, range);
    std::vector<std::vector<int>> adj(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) grid.within(i, range, adj[i]);
    return adj;
}

std::vector<int> hop_distances(const std::vector<std::vector<int>>& adj, int source) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<int> queue{source};
    dist[static_cast<std::size_t>(source)] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (dist[static_cast<std::size_t>(v)] < 0) {
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

bool is_connected(std::span<const Vec2> points, double range) {
    if (points.empty()) return true;
    const auto dist = hop_distances(adjacency(points, range), 0);
    return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

int hop_diameter(std::span<const Vec2> points, double range) {
    const auto adj = adjacency(points, range);
    int best = 0;
    for (std::size_t s = 0; s < adj.size(); ++s) {
        for (int d : hop_distances(adj, static_cast<int>(s))) best = std::max(best, d);
    }
    return best;
}

}  // namespace wospp
