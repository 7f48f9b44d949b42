/**
 * Phase-space grids, distribution fields, and moment functionals.
 *
 * Momentum space is a node-centered cube [-p_max, p_max]^3 with n_axis
 * nodes per axis; integrals are midpoint sums with the cell volume h^3.
 * Physical space is either a single homogeneous cell (x = 0, unit volume)
 * or a periodic box of period 2 x_max with cell-centered nodes.
 *
 * Field values are stored x-major: index = x_cell * n_momentum + p_node.
 */
#pragma once

#include <algorithm>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rbe/common.hpp"
#include "rbe/kernels.hpp"

namespace rbe {

class MomentumLattice
{
  public:
    MomentumLattice(double p_max, int n_axis);

    double p_max() const { return p_max_; }
    int n_axis() const { return n_; }
    double spacing() const { return h_; }
    double cell_volume() const { return h_ * h_ * h_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }

    double coord(int i) const { return -p_max_ + i * h_; }
    std::size_t index(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    Vec3 node(std::size_t idx) const
    {
        int k = static_cast<int>(idx % n_);
        int j = static_cast<int>((idx / n_) % n_);
        int i = static_cast<int>(idx / (static_cast<std::size_t>(n_) * n_));
        return {coord(i), coord(j), coord(k)};
    }

    //! Half-width of the union of node cells, p_max + h/2.
    double extent() const { return extent_; }

    //! True inside the union of node cells.
    bool contains(Vec3 const& p) const
    {
        return std::abs(p.x) <= extent_ && std::abs(p.y) <= extent_ && std::abs(p.z) <= extent_;
    }

    /*!
     * Trilinear interpolation of node values. In the half cell beyond the
     * outer nodes the boundary values are extended as constants; zero
     * outside the union of cells.
     */
    double interpolate(double const* values, Vec3 const& p) const
    {
        if (!contains(p))
            return 0.0;
        double u[3] = {(p.x + p_max_) * inv_h_, (p.y + p_max_) * inv_h_, (p.z + p_max_) * inv_h_};
        int i[3];
        double f[3];
        for (int a = 0; a < 3; ++a)
        {
            double v = std::clamp(u[a], 0.0, double(n_ - 1));
            int c = static_cast<int>(v);
            if (c > n_ - 2)
                c = n_ - 2;
            i[a] = c;
            f[a] = v - c;
        }
        std::size_t const sj = n_;
        std::size_t const si = sj * n_;
        double const* b = values + i[0] * si + i[1] * sj + i[2];
        double c00 = b[0] + f[2] * (b[1] - b[0]);
        double c01 = b[sj] + f[2] * (b[sj + 1] - b[sj]);
        double c10 = b[si] + f[2] * (b[si + 1] - b[si]);
        double c11 = b[si + sj] + f[2] * (b[si + sj + 1] - b[si + sj]);
        double c0 = c00 + f[1] * (c01 - c00);
        double c1 = c10 + f[1] * (c11 - c10);
        return c0 + f[0] * (c1 - c0);
    }

    bool operator==(MomentumLattice const& o) const
    {
        return p_max_ == o.p_max_ && n_ == o.n_;
    }

  private:
    double p_max_;
    int n_;
    double h_;
    double inv_h_;
    double extent_;
};

enum class SpatialMode
{
    homogeneous,
    periodic
};

class SpatialGrid
{
  public:
    static SpatialGrid homogeneous();
    static SpatialGrid periodic(double x_max, int n_axis);

    SpatialMode mode() const { return mode_; }
    bool is_homogeneous() const { return mode_ == SpatialMode::homogeneous; }
    double x_max() const { return x_max_; }
    int n_axis() const { return n_; }
    double spacing() const { return dx_; }
    double cell_volume() const { return is_homogeneous() ? 1.0 : dx_ * dx_ * dx_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }

    Vec3 node(std::size_t idx) const;
    //! Map a point into the fundamental domain [-x_max, x_max)^3.
    Vec3 wrap(Vec3 const& x) const;

    bool operator==(SpatialGrid const& o) const
    {
        return mode_ == o.mode_ && x_max_ == o.x_max_ && n_ == o.n_;
    }

  private:
    SpatialGrid(SpatialMode mode, double x_max, int n_axis);

    SpatialMode mode_;
    double x_max_;
    int n_;
    double dx_;
};

//! Closed-form density f(x, p).
using Profile = std::function<double(Vec3 const& x, Vec3 const& p)>;

/*!
 * Nonnegative density on a spatial grid times a momentum lattice.
 *
 * A field is either purely gridded, or carries an analytic profile. With a
 * profile, values off the lattice are the profile evaluated exactly plus the
 * trilinear interpolant of whatever the node values deviate from it; a field
 * that was never modified is therefore evaluated with no interpolation error.
 */
class DistributionField
{
  public:
    static DistributionField gridded(SpatialGrid space, MomentumLattice lattice,
                                     std::vector<double> values, double time = 0.0);
    static DistributionField closed_form(SpatialGrid space, MomentumLattice lattice,
                                         Profile profile, double time = 0.0);

    SpatialGrid const& space() const { return space_; }
    MomentumLattice const& lattice() const { return lattice_; }
    double time() const { return time_; }
    bool is_closed_form() const { return static_cast<bool>(profile_); }
    //! Closed form with node values equal to the profile.
    bool is_exact() const { return is_closed_form() && residual_.empty(); }

    std::span<double const> values() const { return values_; }
    std::span<double const> cell_values(std::size_t x_cell) const
    {
        return std::span<double const>(values_).subspan(x_cell * lattice_.size(),
                                                        lattice_.size());
    }
    double at(std::size_t x_cell, std::size_t p_node) const
    {
        return values_[x_cell * lattice_.size() + p_node];
    }

    //! Density at spatial node x_cell and arbitrary momentum p.
    double evaluate(std::size_t x_cell, Vec3 const& p) const;
    //! Density at arbitrary (x, p); x is wrapped into the periodic box.
    double evaluate(Vec3 const& x, Vec3 const& p) const;

    //! Exact profile value (requires a closed form).
    double profile_value(Vec3 const& x, Vec3 const& p) const;
    std::span<double const> residual() const { return residual_; }

    //! Same grids and profile, new node values.
    DistributionField with_values(std::vector<double> values) const;
    DistributionField with_time(double t) const;
    //! Drop the profile, keep the node values.
    DistributionField as_gridded() const;

    /*!
     * f(x - t p/p0, p): free transport by time t (negative t transports
     * backwards). Exact for the profile part; the gridded part uses periodic
     * trilinear interpolation in x, and integer cell shifts are copied.
     */
    DistributionField streamed(double t) const;

  private:
    DistributionField(SpatialGrid space, MomentumLattice lattice);
    std::vector<double> sample_profile() const;
    double residual_at(std::size_t x_cell, Vec3 const& p) const;

    SpatialGrid space_;
    MomentumLattice lattice_;
    std::vector<double> values_;
    std::shared_ptr<Profile const> profile_;
    double stream_time_{0};
    // node samples of the streamed profile; values_ = samples_ + residual_
    std::shared_ptr<std::vector<double> const> samples_;
    std::vector<double> residual_;
    double time_{0};
};

//---------------------------------------------------------------------------//
// INITIAL DATA
//---------------------------------------------------------------------------//
enum class InitialKind
{
    juttner,
    double_juttner,
    gaussian_x_juttner_p,
    indicator_box
};

struct InitialSpec
{
    InitialKind kind{InitialKind::juttner};
    double beta{1.0};
    double amplitude{1.0};
    //! Drift four-velocity spatial part (double_juttner uses +/- drift).
    Vec3 drift{};
    //! Gaussian width and center in x (gaussian_x_juttner_p).
    double width{1.0};
    Vec3 center{};
    //! indicator_box: half widths in x and p around center / p_center.
    double x_half{0.0};
    double p_half{0.0};
    Vec3 p_center{};
};

DistributionField make_initial(InitialSpec const& spec, SpatialGrid const& space,
                               MomentumLattice const& lattice);

/*!
 * f0^n = min(f0 1{|x|^2 + |p|^2 <= n}, n) + exp(-(|x|^2 + p0)) / n.
 * Closed-form input stays closed form.
 */
DistributionField truncate_initial(DistributionField const& f0, TruncationParams const& trunc);

//---------------------------------------------------------------------------//
// MOMENTS
//---------------------------------------------------------------------------//
struct MomentRecord
{
    double time{0};
    double mass{0};
    Vec3 momentum{};
    double energy{0};
    double inertia{0};
    double h_value{0};
    double abs_log_mass{0};
    double entropy_production{0};
    //! 2 int int f x.p/p0, the time derivative of the inertia.
    double inertia_rate{0};
};

//! Midpoint sums; 0 ln 0 = 0. Throws CorruptedField on NaN or negative values.
MomentRecord moments(DistributionField const& f);

//! int |f| d^3p at one spatial cell.
double local_mass(DistributionField const& f, std::size_t x_cell);

enum class DistanceWeight
{
    unit,
    moment  // 1 + |x|^2 + p0
};

double weighted_l1_distance(DistributionField const& f, DistributionField const& h,
                            DistanceWeight weight = DistanceWeight::unit);

//---------------------------------------------------------------------------//
// I/O
//---------------------------------------------------------------------------//
void write_checkpoint(std::ostream& out, DistributionField const& f);
DistributionField read_checkpoint(std::istream& in);

void write_moment_csv_header(std::ostream& out);
void write_moment_csv_row(std::ostream& out, MomentRecord const& r);
void write_moment_csv(std::ostream& out, std::span<MomentRecord const> records);

}  // namespace rbe
