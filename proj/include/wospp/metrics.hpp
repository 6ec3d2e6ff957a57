#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wospp/engine.hpp"

namespace wospp {

struct MetricSample {
    std::int64_t timestep = 0;
    std::string name;
    double value = 0.0;
    std::optional<int> channel;  // absent for swarm-wide (positional) metrics
    std::optional<std::vector<double>> per_agent;

    friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

namespace metric {
inline constexpr const char* kDeltaPhiMax = "delta_phi_max";
inline constexpr const char* kRmsToCentroid = "rms_to_centroid";
inline constexpr const char* kCandidateCount = "candidate_count";
inline constexpr const char* kMeanAngularError = "mean_angular_error";
inline constexpr const char* kNEstMean = "n_est_mean";
inline constexpr const char* kNEstStd = "n_est_std";
inline constexpr const char* kNErrPercent = "n_err_percent";
inline constexpr const char* kMeanNnDistance = "mean_nn_distance";
}  // namespace metric

// Width of the smallest arc containing all timer phases 2π·t/cycle_max, in [0, 2π).
double delta_phi_max(std::span<const int> timers, int cycle_max);
// Undefined (absent) when any agent's timer is deactivated.
std::optional<double> delta_phi_max(const Layer& layer);

Vec2 centroid(std::span<const Vec2> positions);
double rms_to_centroid(std::span<const Vec2> positions);

// 100·(N − n_est)/N; positive means underestimate.
double n_err_percent(double n_est_mean, int true_n);

struct AngularError {
    double mean = 0.0;  // radians
    int paired = 0;
    int excluded = 0;  // agents without an estimate
};
// Absent when no agent has an estimate.
std::optional<AngularError> mean_angular_error(std::span<const std::optional<Vec2>> estimates,
                                               std::span<const Vec2> reference_bearings);

int candidate_count(std::span<const PrimitiveScratch> scratch);
int leader_count(std::span<const PrimitiveScratch> scratch);
double mean_nn_distance(std::span<const Vec2> positions);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
MeanStd n_est_stats(std::span<const PrimitiveScratch> scratch);

// Spearman rank correlation with average ranks for ties. NaN when undefined.
double spearman(std::span<const double> a, std::span<const double> b);

// Reference bearings for the localization primitives: toward the current centroid
// (localize_center) or the stimulus position (localize_object).
std::vector<Vec2> reference_bearings(std::span<const Vec2> positions, Vec2 target);

// The observables relevant to the current bindings at this timestep.
std::vector<MetricSample> collect_metrics(const SwarmState& state);

}  // namespace wospp
