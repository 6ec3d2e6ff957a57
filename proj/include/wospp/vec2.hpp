#pragma once

#include <cmath>
#include <numbers>

namespace wospp {

// Planar vector in units of perception range.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;

    [[nodiscard]] double norm() const { return std::hypot(x, y); }
    [[nodiscard]] constexpr double norm_sq() const { return x * x + y * y; }
    [[nodiscard]] double angle() const { return std::atan2(y, x); }
};

[[nodiscard]] constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

[[nodiscard]] inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

[[nodiscard]] inline Vec2 unit_from_angle(double radians) {
    return {std::cos(radians), std::sin(radians)};
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into [0, 2π).
[[nodiscard]] inline double wrap_angle(double radians) {
    double a = std::fmod(radians, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

// Absolute angular difference on the circle, in [0, π].
[[nodiscard]] inline double circular_difference(double a, double b) {
    double d = std::fabs(wrap_angle(a) - wrap_angle(b));
    return d > std::numbers::pi ? kTwoPi - d : d;
}

}  // namespace wospp
