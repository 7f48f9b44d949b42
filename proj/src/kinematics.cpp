#include "rbe/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace rbe {

namespace {

constexpr double degenerate_s = 1e-12;
constexpr double parallel_tol = 1e-9;

// (p0 - p10) without cancellation: (|p|^2 - |p1|^2) / (p0 + p10).
double energy_difference(Momentum const& p, Momentum const& p1)
{
    return dot(p.p - p1.p, p.p + p1.p) / (p.p0 + p1.p0);
}

double g_squared(Momentum const& p, Momentum const& p1)
{
    Vec3 d = p1.p - p.p;
    double de = energy_difference(p1, p);
    return std::max(0.0, (norm2(d) - de * de) * 0.25);
}

}  // namespace

double energy(Vec3 const& p)
{
    if (!is_finite(p))
        throw InvalidArgument("energy: non-finite momentum component");
    return std::sqrt(1.0 + norm2(p));
}

double invariant_s(Momentum const& p, Momentum const& p1)
{
    double e = p.p0 + p1.p0;
    double ptot = norm(p.p + p1.p);
    return (e - ptot) * (e + ptot);
}

double invariant_g(Momentum const& p, Momentum const& p1)
{
    return std::sqrt(g_squared(p, p1));
}

PairFrame::PairFrame(Momentum const& p, Momentum const& p1)
    : total_(p.p + p1.p)
{
    double g2 = g_squared(p, p1);
    g_ = std::sqrt(g2);
    s_ = 4.0 + 4.0 * g2;
    double rs = std::sqrt(s_);
    double e = p.p0 + p1.p0;
    boost_ = 1.0 / (rs * (e + rs));

    if (g_ == 0.0)
    {
        e3_ = {0, 0, 1};
        e1_ = {1, 0, 0};
        e2_ = {0, 1, 0};
        return;
    }

    // Boost p into the CM frame: k* = k + ((P.k)/(sqrt(s)(E+sqrt(s))) - e/sqrt(s)) P
    double c = dot(total_, p.p) * boost_ - p.p0 / rs;
    Vec3 pstar = p.p + c * total_;
    e3_ = (1.0 / norm(pstar)) * pstar;

    Vec3 ref{0, 0, 1};
    if (norm(cross(ref, e3_)) < parallel_tol)
        ref = {1, 0, 0};
    Vec3 perp = ref - dot(ref, e3_) * e3_;
    e1_ = (1.0 / norm(perp)) * perp;
    e2_ = cross(e3_, e1_);
}

CollisionOutcome
post_collision(Momentum const& p, Momentum const& p1, double theta, double psi)
{
    if (!(theta >= 0.0 && theta <= pi) || !(psi >= 0.0 && psi < 2 * pi))
        throw InvalidArgument("post_collision: angle out of range");
    if (theta == 0.0)
        return {p, p1};

    PairFrame frame(p, p1);
    if (frame.g() == 0.0)
        throw DegenerateCollision("post_collision: identical momenta (g = 0)");

    Vec3 n = frame.direction(std::cos(theta), std::sin(theta), std::cos(psi),
                             std::sin(psi));
    Vec3 out = frame.outgoing(n);
    return {Momentum(out), Momentum(frame.total_momentum() - out)};
}

double scattering_angle(Momentum const& p, Momentum const& p1,
                        Momentum const& p_prime)
{
    double s = invariant_s(p, p1);
    if (!(s > 4.0 + degenerate_s))
        throw DegenerateCollision("scattering_angle: s <= 4 (g = 0)");

    double de_rel = energy_difference(p, p1);
    double de_out = energy_difference(p, p_prime);
    double bracket = de_rel * de_out - dot(p.p - p1.p, p.p - p_prime.p);
    // sin^2(theta/2) = bracket / (4 - s); 4 - s = -4 g^2
    double g2 = g_squared(p, p1);
    double half = std::clamp(-bracket / (4.0 * g2), 0.0, 1.0);
    if (half <= 0.5)
        return 2.0 * std::asin(std::sqrt(half));
    return 2.0 * std::acos(std::sqrt(1.0 - half));
}

bool transition_symmetry_check(Momentum const& p, Momentum const& p1,
                               double theta, double psi)
{
    constexpr double tol = 1e-10;
    auto close = [](double a, double b) {
        return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1.0});
    };

    CollisionOutcome out = post_collision(p, p1, theta, psi);
    double g = invariant_g(p, p1);
    double s = invariant_s(p, p1);

    bool ok = invariant_g(p1, p) == g;
    ok = ok && close(invariant_s(p1, p), s);
    ok = ok && close(invariant_g(out.p_prime, out.p1_prime), g);
    ok = ok && close(invariant_g(out.p1_prime, out.p_prime), g);
    ok = ok && close(invariant_s(out.p_prime, out.p1_prime), s);
    if (ok && s > 4.0 + degenerate_s)
    {
        // The inverse collision scatters by the same angle.
        double fwd = std::cos(scattering_angle(p, p1, out.p_prime));
        double bwd = std::cos(scattering_angle(out.p_prime, out.p1_prime, p));
        ok = std::abs(fwd - bwd) <= tol;
    }
    return ok;
}

}  // namespace rbe
