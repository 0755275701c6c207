#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cvb {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

inline Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
inline Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
inline Vec2 operator*(double s, Vec2 a) { return a *= s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm2(const Vec2& a) { return dot(a, a); }

// log N(x; mu, I_2)
inline double log_normal2_iso(const Vec2& x, const Vec2& mu) {
    return -kLog2Pi - 0.5 * norm2(x - mu);
}

double log_sum_exp(std::span<const double> logs);

// Replaces logits by normalized probabilities; returns log of the normalizer.
double softmax_inplace(std::span<double> logits);

// x*log(x) with the 0*log(0) := 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double normal_cdf(double z);
double normal_quantile(double u);  // inverse of normal_cdf on (0,1)

}  // namespace cvb
