#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bzlm {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad parameter ranges, CFL violation, ...).
struct ConfigError : SimError {
    using SimError::SimError;
};

/// Numerical failure outside the time loop (root finding, non-finite inputs).
struct NumericError : SimError {
    using SimError::SimError;
};

/// Geometric inconsistency (empty contact zone, point outside a mask).
struct GeometryError : SimError {
    using SimError::SimError;
};

/// Disordered placement could not fit the requested marble count.
struct PackingError : SimError {
    int placed = 0;
    PackingError(const std::string& msg, int placed_count)
        : SimError(msg), placed(placed_count) {}
};

/// Field went non-finite (or activator below tolerance) during stepping.
struct BlowUpError : SimError {
    using SimError::SimError;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

/// Seeded RNG with hand-rolled distributions.
///
/// mt19937_64 output is pinned by the standard; the std:: distribution
/// adapters are not, so uniform/normal are implemented here to keep runs
/// bit-reproducible across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform point in a disc of given radius about the origin.
    Vec2 in_disc(double radius) {
        const double r = radius * std::sqrt(uniform01());
        const double a = 2.0 * M_PI * uniform01();
        return {r * std::cos(a), r * std::sin(a)};
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bzlm
