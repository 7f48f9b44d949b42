/**
 * Transport along characteristics, the truncated Picard map and its
 * positive part, fixed-point iteration on a time window, and time marching.
 *
 * The Picard map on the mesh t_k = k dt, k = 0..K, is
 *
 *   J(phi)(t_k, x, p) = f0n(x - t_k p/p0, p)
 *                     + sum_m w_km Q~_n(phi(t_m))(x - (t_k - t_m) p/p0, p)
 *
 * with trapezoid weights w_km on [0, t_k].
 */
#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "rbe/collision.hpp"
#include "rbe/phase_space.hpp"

namespace rbe {

enum class Direction
{
    forward,
    backward
};

//! f(x - t p/p0, p) forward, f(x + t p/p0, p) backward; identity when homogeneous.
DistributionField characteristic_shift(DistributionField const& f, double t, Direction d);

enum class SolverMode
{
    picard_window,
    march
};

struct SolverConfig
{
    SolverMode mode{SolverMode::march};
    //! Final time T of the window or the march.
    double window{1.0};
    double dt{0.1};
    double tol{1e-8};
    int max_iter{30};
    double c_n{0};
    //! March only: evaluate entropy production for every record.
    bool with_entropy{false};

    //! Number of steps K with K dt = window.
    int steps() const;
    void validate() const;
};

using Trajectory = std::vector<DistributionField>;

struct IterationTrace
{
    //! sup_t of the L1 distance between successive iterates.
    std::vector<double> distances;
    //! ln of sup_t exp(-2 C_n t) (L1 distance at t); -inf for a zero distance.
    std::vector<double> log_weighted;
    //! Ratio of successive weighted distances; the first entry is NaN.
    std::vector<double> ratios;
};

void write_trace_csv(std::ostream& out, IterationTrace const& trace);

//! A collision evaluation produced a non-finite value.
struct CorruptedIteration : CorruptedField
{
    CorruptedIteration(std::string const& what, int index) : CorruptedField(what), time_index(index)
    {
    }
    int time_index;
};

struct NonConvergence : Error
{
    NonConvergence(std::string const& what, IterationTrace t) : Error(what), trace(std::move(t)) {}
    IterationTrace trace;
};

//! Negative mass beyond the clamp threshold in a march step.
struct StepSizeError : Error
{
    using Error::Error;
};

//! Transported f0n at every mesh time: the image of phi = 0.
Trajectory free_trajectory(DistributionField const& f0n, SolverConfig const& cfg);

Trajectory picard_map(Trajectory const& phi, DistributionField const& f0n,
                      CollisionOperator const& op, SolverConfig const& cfg);
//! max(0, J(phi)) pointwise.
Trajectory positive_picard_map(Trajectory const& phi, DistributionField const& f0n,
                               CollisionOperator const& op, SolverConfig const& cfg);

/*!
 * 3 sup(B_n) V(n) with sup(B_n) = n^2 sqrt(1 + n^2) and
 * V(n) = (4 pi/3)(n^2 - 1)^{3/2}; 0 for n = 1.
 */
double compute_lipschitz_cn(TruncationParams const& trunc);

struct FixedPointResult
{
    Trajectory solution;
    IterationTrace trace;
};

/*!
 * Iterate the positive Picard map from the free trajectory until the sup
 * over the mesh of the unweighted L1 distance between successive iterates
 * drops below cfg.tol. Throws NonConvergence after cfg.max_iter.
 */
FixedPointResult solve_fixed_point(DistributionField const& f0n, CollisionOperator const& op,
                                   SolverConfig const& cfg);

//! ln sup_t exp(-2 c_n t) ||a(t) - b(t)||_1 over a common mesh.
double log_weighted_distance(Trajectory const& a, Trajectory const& b, double c_n);

struct SolutionBounds
{
    //! ln sup_t exp(-c_n t) ||f(t)||, minus ln ||f0n||, for the sup and L1 norms.
    double log_sup_excess{0};
    double log_l1_excess{0};
    bool holds(double slack = 1e-9) const
    {
        return log_sup_excess <= std::log1p(slack) && log_l1_excess <= std::log1p(slack);
    }
};

SolutionBounds solution_bounds(Trajectory const& f, DistributionField const& f0n, double c_n);

struct MarchResult
{
    std::vector<MomentRecord> records;
    DistributionField final_field;
    //! Steps in which small negative values were set to 0.
    int clamped_steps{0};
    double clamped_mass{0};
};

using StepCallback = std::function<void(int step, DistributionField const& f)>;

/*!
 * Strang splitting: half-step transport, midpoint-rule collision step with
 * Q~_n, half-step transport. Negative values whose mass is at most 1e-6 of
 * the total are set to 0; larger violations throw StepSizeError, as does a
 * step with dt times the largest normalized loss rate above 2.
 */
MarchResult solve_march(DistributionField const& f0n, CollisionOperator const& op,
                        SolverConfig const& cfg, StepCallback const& on_step = {});

}  // namespace rbe
