#pragma once

// Reference computations written independently of the library, used to check it.

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <vector>

#include "wospp/vec2.hpp"

namespace oracle {

using wospp::Vec2;

inline std::vector<std::vector<int>> brute_adjacency(const std::vector<Vec2>& p, double r) {
    std::vector<std::vector<int>> adj(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j)
            if (i != j && std::hypot(p[i].x - p[j].x, p[i].y - p[j].y) <= r)
                adj[i].push_back(static_cast<int>(j));
    return adj;
}

inline std::vector<int> bfs(const std::vector<std::vector<int>>& adj, int src) {
    std::vector<int> d(adj.size(), -1);
    std::deque<int> q{src};
    d[static_cast<std::size_t>(src)] = 0;
    while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int v : adj[static_cast<std::size_t>(u)])
            if (d[static_cast<std::size_t>(v)] < 0) {
                d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
                q.push_back(v);
            }
    }
    return d;
}

// Smallest arc containing all phases: try every phase as the arc start.
inline double arc_width(const std::vector<int>& timers, int cycle_max) {
    const double two_pi = 2.0 * std::numbers::pi;
    double best = two_pi;
    for (int s : timers) {
        const double start = two_pi * s / cycle_max;
        double w = 0.0;
        for (int t : timers) {
            double d = two_pi * t / cycle_max - start;
            while (d < 0) d += two_pi;
            while (d >= two_pi) d -= two_pi;
            w = std::max(w, d);
        }
        best = std::min(best, w);
    }
    return best;
}

inline double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Indices of the convex hull vertices (monotone chain; collinear points dropped).
inline std::vector<int> hull(const std::vector<Vec2>& p) {
    std::vector<int> idx(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return p[a].x < p[b].x || (p[a].x == p[b].x && p[a].y < p[b].y);
    });
    std::vector<int> h(2 * p.size());
    std::size_t k = 0;
    for (int i : idx) {
        while (k >= 2 && cross(p[h[k - 2]], p[h[k - 1]], p[i]) <= 0) --k;
        h[k++] = i;
    }
    for (std::size_t j = idx.size() - 1, t = k + 1; j-- > 0;) {
        const int i = idx[j];
        while (k >= t && cross(p[h[k - 2]], p[h[k - 1]], p[i]) <= 0) --k;
        h[k++] = i;
    }
    h.resize(k - 1);
    return h;
}

inline double angle_between(Vec2 a, Vec2 b) {
    const double c = (a.x * b.x + a.y * b.y) / (std::hypot(a.x, a.y) * std::hypot(b.x, b.y));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace oracle
