/**
 * Relativistic two-body collision kinematics for unit-mass particles.
 *
 * Everything here is dimensionless (m = c = 1). A momentum p carries its
 * mass-shell energy p0 = sqrt(1 + |p|^2). For a colliding pair the
 * invariants are
 *
 *   s = (p0 + p10)^2 - |p + p1|^2      (total invariant, s = 4 + 4 g^2)
 *   g = sqrt(|p1 - p|^2 - (p10 - p0)^2) / 2
 *
 * Post-collision momenta are built in the zero-total-momentum frame: each
 * particle there has momentum magnitude g, and scattering by (theta, psi)
 * rotates the relative direction.
 */
#pragma once

#include "rbe/common.hpp"

namespace rbe {

//! Mass-shell energy sqrt(1 + |p|^2); throws on non-finite input.
double energy(Vec3 const& p);

struct Momentum
{
    Vec3 p;
    double p0{1};

    Momentum() = default;
    explicit Momentum(Vec3 const& mom) : p(mom), p0(energy(mom)) {}
};

struct CollisionGeometry
{
    double g{0};
    double s{4};
    double theta{0};
    double psi{0};
};

struct CollisionOutcome
{
    Momentum p_prime;
    Momentum p1_prime;
};

double invariant_s(Momentum const& p, Momentum const& p1);

//! Radicand is clamped at zero: it is analytically nonnegative.
double invariant_g(Momentum const& p, Momentum const& p1);

/*!
 * Scatter a pair by polar angle theta and azimuth psi in the
 * center-of-momentum frame.
 *
 * The azimuth is measured in a frame whose third axis is the CM direction
 * of p, and whose first axis is the part of the lab z axis orthogonal to it
 * (lab x when z is parallel within 1e-9).
 *
 * Throws DegenerateCollision when g == 0 unless theta == 0.
 */
CollisionOutcome
post_collision(Momentum const& p, Momentum const& p1, double theta, double psi);

/*!
 * Scattering angle from the invariant expression
 *   cos(theta) = 1 - 2[(p0-p10)(p0-p0') - (p-p1).(p-p')]/(4-s).
 *
 * Evaluated through the half-angle sin^2(theta/2) to keep small angles
 * accurate. Throws DegenerateCollision when s <= 4 + 1e-12.
 */
double scattering_angle(Momentum const& p, Momentum const& p1,
                        Momentum const& p_prime);

//! g and s symmetric under particle exchange and under pre/post swap.
bool transition_symmetry_check(Momentum const& p, Momentum const& p1,
                               double theta, double psi);

//---------------------------------------------------------------------------//
/*!
 * Precomputed boost and azimuthal frame for one colliding pair.
 *
 * The collision integrals scatter the same pair over many angular nodes, so
 * the boost and frame are built once and reused.
 */
class PairFrame
{
  public:
    PairFrame(Momentum const& p, Momentum const& p1);

    double g() const { return g_; }
    double s() const { return s_; }

    //! Outgoing momentum of the first particle for unit CM direction n.
    Vec3 outgoing(Vec3 const& n) const
    {
        Vec3 k = g_ * n;
        double c = dot(total_, k) * boost_ + 0.5;
        return k + c * total_;
    }

    //! Linear part of outgoing(): outgoing(n) = scatter(n) + total / 2.
    Vec3 scatter(Vec3 const& n) const
    {
        Vec3 k = g_ * n;
        return k + (dot(total_, k) * boost_) * total_;
    }

    Vec3 const& e1() const { return e1_; }
    Vec3 const& e2() const { return e2_; }
    Vec3 const& e3() const { return e3_; }

    //! CM direction for angles given through their sines and cosines.
    Vec3 direction(double cos_t, double sin_t, double cos_p, double sin_p) const
    {
        double a = sin_t * cos_p;
        double b = sin_t * sin_p;
        return {a * e1_.x + b * e2_.x + cos_t * e3_.x,
                a * e1_.y + b * e2_.y + cos_t * e3_.y,
                a * e1_.z + b * e2_.z + cos_t * e3_.z};
    }

    Vec3 const& total_momentum() const { return total_; }

  private:
    Vec3 total_;
    double g_{0};
    double s_{4};
    double boost_{0};  // 1 / (sqrt(s) (E + sqrt(s)))
    Vec3 e1_, e2_, e3_;
};

}  // namespace rbe
