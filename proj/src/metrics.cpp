#include "wospp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wospp/spatial.hpp"

namespace wospp {

double delta_phi_max(std::span<const int> timers, int cycle_max) {
    if (timers.size() < 2) return 0.0;
    std::vector<double> phases;
    phases.reserve(timers.size());
    for (int t : timers) phases.push_back(wrap_angle(kTwoPi * t / cycle_max));
    std::sort(phases.begin(), phases.end());
    double largest_gap = kTwoPi - phases.back() + phases.front();
    for (std::size_t i = 1; i < phases.size(); ++i)
        largest_gap = std::max(largest_gap, phases[i] - phases[i - 1]);
    const double width = kTwoPi - largest_gap;
    return width < 0.0 ? 0.0 : width;
}

std::optional<double> delta_phi_max(const Layer& layer) {
    std::vector<int> timers;
    timers.reserve(layer.cores.size());
    for (const auto& c : layer.cores) {
        if (!c.timer) return std::nullopt;
        timers.push_back(*c.timer);
    }
    return delta_phi_max(timers, layer.params.cycle_max);
}

Vec2 centroid(std::span<const Vec2> positions) {
    Vec2 sum{};
    for (Vec2 p : positions) sum += p;
    return positions.empty() ? sum : sum * (1.0 / static_cast<double>(positions.size()));
}

double rms_to_centroid(std::span<const Vec2> positions) {
    if (positions.empty()) return 0.0;
    const Vec2 c = centroid(positions);
    double acc = 0.0;
    for (Vec2 p : positions) acc += (p - c).norm_sq();
    return std::sqrt(acc / static_cast<double>(positions.size()));
}

double n_err_percent(double n_est_mean, int true_n) {
    return 100.0 * (true_n - n_est_mean) / true_n;
}

std::optional<AngularError> mean_angular_error(std::span<const std::optional<Vec2>> estimates,
                                               std::span<const Vec2> reference_bearings) {
    AngularError out;
    double acc = 0.0;
    const std::size_t n = std::min(estimates.size(), reference_bearings.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!estimates[i]) {
            ++out.excluded;
            continue;
        }
        acc += circular_difference(estimates[i]->angle(), reference_bearings[i].angle());
        ++out.paired;
    }
    if (out.paired == 0) return std::nullopt;
    out.mean = acc / out.paired;
    return out;
}

int candidate_count(std::span<const PrimitiveScratch> scratch) {
    return static_cast<int>(
        std::count_if(scratch.begin(), scratch.end(), [](const auto& s) { return s.candidate; }));
}

int leader_count(std::span<const PrimitiveScratch> scratch) {
    return static_cast<int>(
        std::count_if(scratch.begin(), scratch.end(), [](const auto& s) { return s.leader; }));
}

double mean_nn_distance(std::span<const Vec2> positions) {
    if (positions.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < positions.size(); ++j)
            if (j != i) best = std::min(best, (positions[i] - positions[j]).norm_sq());
        acc += std::sqrt(best);
    }
    return acc / static_cast<double>(positions.size());
}

MeanStd n_est_stats(std::span<const PrimitiveScratch> scratch) {
    MeanStd out;
    if (scratch.empty()) return out;
    for (const auto& s : scratch) out.mean += s.n_est;
    out.mean /= static_cast<double>(scratch.size());
    double var = 0.0;
    for (const auto& s : scratch) var += (s.n_est - out.mean) * (s.n_est - out.mean);
    out.std = std::sqrt(var / static_cast<double>(scratch.size()));
    return out;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

std::vector<Vec2> reference_bearings(std::span<const Vec2> positions, Vec2 target) {
    std::vector<Vec2> out;
    out.reserve(positions.size());
    for (Vec2 p : positions) {
        const Vec2 d = target - p;
        const double n = d.norm();
        out.push_back(n > 0.0 ? d * (1.0 / n) : Vec2{1.0, 0.0});
    }
    return out;
}

std::vector<MetricSample> collect_metrics(const SwarmState& state) {
    std::vector<MetricSample> out;
    const std::int64_t t = state.timestep;
    out.push_back({t, metric::kRmsToCentroid, rms_to_centroid(state.positions), std::nullopt, {}});
    out.push_back({t, metric::kMeanNnDistance, mean_nn_distance(state.positions), std::nullopt, {}});

    for (const auto& layer : state.layers) {
        const int ch = layer.channel;
        if (auto dphi = delta_phi_max(layer)) out.push_back({t, metric::kDeltaPhiMax, *dphi, ch, {}});
        switch (layer.binding.id) {
            case PrimitiveId::LeaderElection:
                out.push_back({t, metric::kCandidateCount,
                               static_cast<double>(candidate_count(layer.scratch)), ch, {}});
                break;
            case PrimitiveId::EstimateCount: {
                const auto stats = n_est_stats(layer.scratch);
                out.push_back({t, metric::kNEstMean, stats.mean, ch, {}});
                out.push_back({t, metric::kNEstStd, stats.std, ch, {}});
                out.push_back({t, metric::kNErrPercent,
                               n_err_percent(stats.mean, static_cast<int>(state.size())), ch, {}});
                break;
            }
            case PrimitiveId::LocalizeCenter:
            case PrimitiveId::LocalizeObject: {
                Vec2 target = centroid(state.positions);
                if (layer.binding.id == PrimitiveId::LocalizeObject) {
                    const auto& stim = layer.binding.stimulus ? layer.binding.stimulus : state.stimulus;
                    if (!stim) break;
                    target = stim->position;
                }
                std::vector<std::optional<Vec2>> est;
                est.reserve(layer.scratch.size());
                for (const auto& s : layer.scratch) est.push_back(s.estimate_bearing);
                const auto refs = reference_bearings(state.positions, target);
                if (auto err = mean_angular_error(est, refs))
                    out.push_back({t, metric::kMeanAngularError, err->mean, ch, {}});
                break;
            }
            default:
                break;
        }
    }
    return out;
}

}  // namespace wospp
