/**
 * Quadrature evaluation of the collision operator.
 *
 * With p1 running over lattice nodes and Omega over an angular product rule,
 *
 *   Q+(f)(p) = (1/p0) sum_{p1} sum_Omega f(p') f(p1') B / p10 w_Omega h^3
 *   L(f)(p)  = (1/p0) sum_{p1} sum_Omega f(p1)        B / p10 w_Omega h^3
 *   Q~_n(f)  = (Q+_n(f) - f L_n(f)) / (1 + m / n)
 *
 * where m is the momentum-space mass of |f| at the spatial cell and the
 * subscript n means B is replaced by B_n. f(p'), f(p1') are trilinear
 * interpolants for gridded fields and exact for closed-form ones.
 *
 * A scattering outcome with p' or p1' outside the lattice cube is dropped
 * from gain, loss and entropy production alike, so discrete gain and loss
 * see the same set of collisions.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rbe/kernels.hpp"
#include "rbe/kinematics.hpp"
#include "rbe/phase_space.hpp"

namespace rbe {

namespace detail {
class CellView;
class GridView;
}

//! Gauss-Legendre in cos(theta) times the uniform rule in psi.
class AngularQuadrature
{
  public:
    //! n_psi must be even so the rule is symmetric under psi -> pi - psi.
    AngularQuadrature(int n_theta, int n_psi);

    int n_theta() const { return n_theta_; }
    int n_psi() const { return n_psi_; }
    std::size_t size() const { return static_cast<std::size_t>(n_theta_) * n_psi_; }

    double theta(int i) const { return theta_[i]; }
    double cos_theta(int i) const { return cos_t_[i]; }
    double sin_theta(int i) const { return sin_t_[i]; }
    double psi(int j) const { return (j + 0.5) * 2.0 * pi / n_psi_; }
    double cos_psi(int j) const { return cos_p_[j]; }
    double sin_psi(int j) const { return sin_p_[j]; }
    //! Weight of node (i, j): GL weight times 2 pi / n_psi.
    double weight(int i) const { return w_[i]; }
    double weight_sum() const;

  private:
    int n_theta_;
    int n_psi_;
    std::vector<double> theta_, cos_t_, sin_t_, cos_p_, sin_p_, w_;
};

//! psi(p) = b0 + b.p + c0 p0, or an arbitrary test function when set.
struct CollisionInvariant
{
    double b0{0};
    Vec3 b{};
    double c0{0};
    std::function<double(Momentum const&)> test_function;

    double operator()(Momentum const& p) const
    {
        if (test_function)
            return test_function(p);
        return b0 + dot(b, p.p) + c0 * p.p0;
    }
};

//! Spherical product rule for the p1 integral of the single-node operators.
struct SphericalRule
{
    double radius{0};
    BallQuadrature ball{};
};

/*!
 * Settings shared by every collision evaluation. Without trunc the plain
 * kernel B is used and no normalization is applied. With p1_rule the p1
 * sum of gain and loss_operator runs over a spherical Gauss rule instead of
 * the lattice and no outcome is dropped.
 */
struct CollisionSettings
{
    CrossSectionModel model = CrossSectionModel::constant(0.0);
    std::optional<TruncationParams> trunc;
    AngularQuadrature quad{16, 16};
    std::optional<SphericalRule> p1_rule;
};

double gain(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
            CollisionSettings const& cs);
double loss_operator(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
                     CollisionSettings const& cs);
//! Requires cs.trunc.
double q_tilde(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
               CollisionSettings const& cs);

struct WeakFormResult
{
    double value{0};
    //! Same sum with |f'f1' - f f1| and the four |psi| terms: the rounding scale.
    double scale{0};
};

/*!
 * (1/4) sum B/(p0 p10) [f'f1' - f f1][psi + psi1 - psi' - psi1'] w over
 * both lattice momenta, angles and spatial cells. The invariant bracket is
 * formed from the same outcome as the collision term.
 */
WeakFormResult weak_form(DistributionField const& f, CollisionInvariant const& psi,
                         CollisionSettings const& cs);

//! (1/4) sum B/(p0 p10) (a - b) ln(a / b) w, a = f'f1', b = f f1; summand 0 when a == b.
double entropy_production(DistributionField const& f, CollisionSettings const& cs);

//---------------------------------------------------------------------------//
/*!
 * Whole-field evaluator.
 *
 * The pair list and per-pair kernel weights depend only on the lattice and
 * settings and are built once. Each unordered pair of lattice momenta is
 * scattered over the angular rule once; its gain contribution is shared by
 * both members because the outcome set of (p1, p) is that of (p, p1) under
 * psi -> pi - psi.
 */
class CollisionOperator
{
  public:
    CollisionOperator(MomentumLattice const& lattice, CollisionSettings settings);

    struct Evaluation
    {
        //! Per (x_cell, p_node), x-major like the field.
        std::vector<double> gain;
        //! L(f): multiply by f to obtain Q-.
        std::vector<double> loss;
        //! Normalized operator Q~_n, or Q+ - f L without truncation.
        std::vector<double> q;
        //! Normalization 1 / (1 + m/n) per spatial cell.
        std::vector<double> normalization;
        //! Entropy production with the same normalization; 0 if not requested.
        double entropy_production{0};
    };

    Evaluation evaluate(DistributionField const& f, bool with_entropy = false) const;
    WeakFormResult weak_form(DistributionField const& f, CollisionInvariant const& psi) const;

    CollisionSettings const& settings() const { return cs_; }
    std::size_t pair_count() const { return pairs_.size(); }

  private:
    template<bool Entropy, class Sampler>
    double sweep(Sampler const& F, double const* fv, std::size_t lo, std::size_t hi, double* gain,
                 double* loss) const;

    struct Pair
    {
        std::uint32_t i;
        std::uint32_t j;
    };

    MomentumLattice lattice_;
    CollisionSettings cs_;
    std::vector<Vec3> nodes_;
    std::vector<double> p0_;
    std::vector<Pair> pairs_;
};

//! 1 / (1 + m/n) with m = int |f| d^3p at the cell; 1 without truncation.
double normalization_factor(DistributionField const& f, std::size_t x_cell,
                            std::optional<TruncationParams> const& trunc);

}  // namespace rbe
