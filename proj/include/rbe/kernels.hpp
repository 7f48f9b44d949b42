/**
 * Cross-section models and the relativistic collision kernel.
 *
 *   B(g, theta)   = g sqrt(s) sigma(g, theta) / 2 = g sqrt(1 + g^2) sigma
 *   A(g)          = int_{S^2} B(g, theta) dOmega
 *   sigma_n       = sigma 1{sigma <= n} 1{g >= 1/n} 1{sin(theta) >= 1/n}
 *                         1{p0 + p10 <= n}
 *   B_n           = g sqrt(s) sigma_n / 2
 *
 * The truncated kernel keeps the factor 1/2 so that B_n -> B pointwise.
 */
#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "rbe/common.hpp"

namespace rbe {

enum class CrossSectionFamily
{
    constant,
    power_law,
    tabulated
};

//! sigma on a rectangular (g, theta) grid, row-major in g.
struct CrossSectionTable
{
    std::vector<double> g;
    std::vector<double> theta;
    std::vector<double> values;
};

/*!
 * Read a table: header `g_count theta_count`, the g grid, the theta grid,
 * then g_count * theta_count values row-major. Whitespace separated.
 */
CrossSectionTable read_cross_section_table(std::istream& in);
CrossSectionTable load_cross_section_table(std::string const& path);
void write_cross_section_table(std::ostream& out, CrossSectionTable const& table);

class CrossSectionModel
{
  public:
    //! sigma = c0
    static CrossSectionModel constant(double c0);
    //! sigma = c0 g^a (sin theta)^b, a, b >= 0
    static CrossSectionModel power_law(double c0, double a, double b);
    //! Bilinear in (g, theta), clamped at the table edges.
    static CrossSectionModel tabulated(CrossSectionTable table);

    CrossSectionFamily family() const { return family_; }
    double c0() const { return c0_; }
    double exponent_g() const { return a_; }
    double exponent_sin() const { return b_; }
    CrossSectionTable const& table() const { return *table_; }

    double sigma(double g, double theta) const;

    //! True when sigma does not depend on theta.
    bool isotropic() const;
    //! True when sigma is identically zero.
    bool vanishes() const;

  private:
    CrossSectionModel() = default;

    CrossSectionFamily family_{CrossSectionFamily::constant};
    double c0_{0};
    double a_{0};
    double b_{0};
    std::shared_ptr<CrossSectionTable const> table_;
};

struct TruncationParams
{
    int n{1};

    TruncationParams() = default;
    explicit TruncationParams(int n_value);
};

//! g sqrt(4 + 4 g^2) sigma / 2; InvalidModel when sigma < 0 or not finite.
double kernel_B(double g, double theta, CrossSectionModel const& model);

double truncated_sigma(double g, double theta, double p0, double p10,
                       CrossSectionModel const& model,
                       TruncationParams const& trunc);

double truncated_kernel_Bn(double g, double theta, double p0, double p10,
                           CrossSectionModel const& model,
                           TruncationParams const& trunc);

struct QuadratureResult
{
    double value{0};
    double error_estimate{0};
};

/*!
 * A(g) by composite Gauss-Legendre in theta, refined by doubling until two
 * successive rules agree to 1e-10 relative. Throws QuadratureFailure with
 * the last difference when 4096 nodes per panel are not enough.
 */
QuadratureResult angular_integral_A(double g, CrossSectionModel const& model);

//! Node counts for momentum-ball quadrature in spherical coordinates.
struct BallQuadrature
{
    int n_radial{64};
    int n_polar{32};
    int n_azimuth{32};

    BallQuadrature doubled() const
    {
        return {2 * n_radial, 2 * n_polar, 2 * n_azimuth};
    }
};

struct ConditionReport
{
    double radius{0};
    std::vector<double> probes;
    //! (1/p0^2) int_{B_R} A(g)/p10 d^3p1
    std::vector<double> jiang_values;
    //! (1/p0) int_{B_R} A(g)/p10 d^3p1
    std::vector<double> de_values;
    //! Node-doubling differences for jiang_values.
    std::vector<double> error_estimates;
    double hard_bound_constant{0};
};

/*!
 * Evaluate the ball integrals behind the two admissibility conditions at
 * each probe momentum |p| (taken along z; the integral is rotation
 * invariant). The hard-bound constant is inf A(g)/g^2 with the probe
 * magnitudes used as g values.
 */
ConditionReport check_jiang_condition(CrossSectionModel const& model,
                                      double radius,
                                      std::vector<double> const& probes,
                                      BallQuadrature const& quad = {});

//! inf over probes of A(g)/g^2; > 0 certifies A(g) >= C g^2 on the probes.
double check_hard_lower_bound(CrossSectionModel const& model,
                              std::vector<double> const& g_probes);

struct TruncationConvergence
{
    //! max over p1 samples of int_{B_R x S^2} |B_n - B|, one per n.
    std::vector<double> values;
    //! Smallest n for which every indicator passes on all quadrature points
    //! where B > 0 (0 if no such integer fits in an int).
    long clearing_n{0};
};

struct TruncationConvergenceOptions
{
    BallQuadrature ball{24, 12, 12};
    int n_theta{32};
    int n_samples{12};
    unsigned long seed{2024};
};

TruncationConvergence
truncation_convergence(CrossSectionModel const& model, double radius,
                       double ball_k, std::vector<int> const& n_list,
                       TruncationConvergenceOptions const& opts = {});

}  // namespace rbe
