#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbe {

//---------------------------------------------------------------------------//
// ERRORS
//---------------------------------------------------------------------------//
struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error
{
    using Error::Error;
};

//! Two-body collision with vanishing relative momentum.
struct DegenerateCollision : Error
{
    using Error::Error;
};

//! Cross-section model producing negative or non-finite values.
struct InvalidModel : Error
{
    using Error::Error;
};

struct QuadratureFailure : Error
{
    QuadratureFailure(std::string const& what, double estimate)
        : Error(what), error_estimate(estimate)
    {
    }
    double error_estimate;
};

struct CorruptedField : Error
{
    using Error::Error;
};

struct PositivityViolation : Error
{
    using Error::Error;
};

struct NotFound : Error
{
    using Error::Error;
};

//---------------------------------------------------------------------------//
// SMALL 3-VECTOR
//---------------------------------------------------------------------------//
struct Vec3
{
    double x{0};
    double y{0};
    double z{0};

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(Vec3 const& o)
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(Vec3 const& o)
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(double a)
    {
        x *= a;
        y *= a;
        z *= a;
        return *this;
    }
    bool operator==(Vec3 const&) const = default;
};

inline Vec3 operator+(Vec3 a, Vec3 const& b) { return a += b; }
inline Vec3 operator-(Vec3 a, Vec3 const& b) { return a -= b; }
inline Vec3 operator-(Vec3 const& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }

inline double dot(Vec3 const& a, Vec3 const& b)
{
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline double norm2(Vec3 const& a) { return dot(a, a); }
inline double norm(Vec3 const& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(Vec3 const& a, Vec3 const& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline bool is_finite(Vec3 const& a)
{
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

inline constexpr double pi = 3.14159265358979323846;

//---------------------------------------------------------------------------//
// DETERMINISTIC REDUCTION
//---------------------------------------------------------------------------//
/*!
 * Pairwise (tree) summation.
 *
 * The reduction tree depends only on the length of the input, so a given
 * array always sums to the same bits regardless of how it was produced.
 */
double pairwise_sum(std::span<double const> values);

//! Gauss-Legendre rule on [-1, 1].
struct GaussRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

//! Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int n, double a, double b);

}  // namespace rbe
