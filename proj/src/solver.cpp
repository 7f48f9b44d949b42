#include "rbe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

namespace rbe {

DistributionField characteristic_shift(DistributionField const& f, double t, Direction d)
{
    return f.streamed(d == Direction::forward ? t : -t);
}

int SolverConfig::steps() const
{
    return static_cast<int>(std::lround(window / dt));
}

void SolverConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidArgument("solver: dt must be positive");
    if (!(window >= 0.0) || !std::isfinite(window))
        throw InvalidArgument("solver: window must be nonnegative");
    if (!(tol > 0.0))
        throw InvalidArgument("solver: tol must be positive");
    if (max_iter < 1)
        throw InvalidArgument("solver: max_iter must be at least 1");
    if (!(c_n >= 0.0))
        throw InvalidArgument("solver: c_n must be nonnegative");
    if (std::abs(steps() * dt - window) > 1e-9 * std::max(1.0, window))
        throw InvalidArgument("solver: window must be a multiple of dt");
}

void write_trace_csv(std::ostream& out, IterationTrace const& trace)
{
    out << "iter,distance,ratio\n";
    char buf[96];
    for (std::size_t k = 0; k < trace.distances.size(); ++k)
    {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k + 1, trace.distances[k],
                      trace.ratios[k]);
        out << buf;
    }
}

//---------------------------------------------------------------------------//
// PICARD MAP
//---------------------------------------------------------------------------//
Trajectory free_trajectory(DistributionField const& f0n, SolverConfig const& cfg)
{
    cfg.validate();
    Trajectory out;
    for (int k = 0; k <= cfg.steps(); ++k)
        out.push_back(f0n.streamed(k * cfg.dt).with_time(k * cfg.dt));
    return out;
}

namespace {

void check_finite(std::vector<double> const& v, int index)
{
    for (double x : v)
    {
        if (!std::isfinite(x))
            throw CorruptedIteration("non-finite collision term at time index "
                                         + std::to_string(index),
                                     index);
    }
}

// The midpoint rule damps f' = -lambda f only for lambda dt <= 2.
void check_loss_stiffness(CollisionOperator::Evaluation const& e, std::size_t n_p, double dt)
{
    double worst = 0;
    for (std::size_t i = 0; i < e.loss.size(); ++i)
        worst = std::max(worst, e.loss[i] * e.normalization[i / n_p]);
    if (worst * dt > 2.0)
    {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "march: dt times the largest loss rate is %.3g > 2; reduce dt", worst * dt);
        throw StepSizeError(buf);
    }
}

Trajectory apply_map(Trajectory const& phi, DistributionField const& f0n, CollisionOperator const& op,
                     SolverConfig const& cfg, bool clamp)
{
    cfg.validate();
    int const K = cfg.steps();
    if (phi.size() != static_cast<std::size_t>(K) + 1)
        throw InvalidArgument("picard map: trajectory does not match the time mesh");

    // collision term of every stored slice, as signed gridded fields
    std::vector<DistributionField> q;
    q.reserve(phi.size());
    for (int m = 0; m <= K; ++m)
    {
        auto ev = op.evaluate(phi[m]);
        check_finite(ev.q, m);
        q.push_back(DistributionField::gridded(phi[m].space(), phi[m].lattice(), std::move(ev.q)));
    }

    Trajectory out;
    out.reserve(phi.size());
    double const dt = cfg.dt;
    for (int k = 0; k <= K; ++k)
    {
        double const t = k * dt;
        DistributionField base = f0n.streamed(t);
        std::vector<double> v(base.values().begin(), base.values().end());
        for (int m = 0; m <= k && k > 0; ++m)
        {
            double w = (m == 0 || m == k) ? 0.5 * dt : dt;
            DistributionField shifted = q[m].streamed(t - m * dt);
            auto s = shifted.values();
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] += w * s[i];
        }
        if (clamp)
        {
            for (double& x : v)
                x = std::max(x, 0.0);
        }
        out.push_back(base.with_values(std::move(v)).with_time(t));
    }
    return out;
}

}  // namespace

Trajectory picard_map(Trajectory const& phi, DistributionField const& f0n, CollisionOperator const& op,
                      SolverConfig const& cfg)
{
    return apply_map(phi, f0n, op, cfg, false);
}

Trajectory positive_picard_map(Trajectory const& phi, DistributionField const& f0n,
                               CollisionOperator const& op, SolverConfig const& cfg)
{
    return apply_map(phi, f0n, op, cfg, true);
}

double compute_lipschitz_cn(TruncationParams const& trunc)
{
    double const n = trunc.n;
    if (n <= 1.0)
        return 0.0;
    double sup_b = n * n * std::sqrt(1.0 + n * n);
    double volume = 4.0 * pi / 3.0 * std::pow(n * n - 1.0, 1.5);
    return 3.0 * sup_b * volume;
}

//---------------------------------------------------------------------------//
// FIXED POINT
//---------------------------------------------------------------------------//
namespace {

double log_or_ninf(double v)
{
    return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

}  // namespace

double log_weighted_distance(Trajectory const& a, Trajectory const& b, double c_n)
{
    if (a.size() != b.size())
        throw InvalidArgument("weighted distance: trajectories differ in length");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        double d = weighted_l1_distance(a[k], b[k]);
        best = std::max(best, -2.0 * c_n * a[k].time() + log_or_ninf(d));
    }
    return best;
}

FixedPointResult solve_fixed_point(DistributionField const& f0n, CollisionOperator const& op,
                                   SolverConfig const& cfg)
{
    if (cfg.mode != SolverMode::picard_window)
        throw InvalidArgument("solve_fixed_point needs mode picard_window");
    FixedPointResult res;
    res.solution = free_trajectory(f0n, cfg);
    for (int it = 0; it < cfg.max_iter; ++it)
    {
        Trajectory next = positive_picard_map(res.solution, f0n, op, cfg);
        double dist = 0;
        double logw = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < next.size(); ++k)
        {
            double d = weighted_l1_distance(next[k], res.solution[k]);
            dist = std::max(dist, d);
            logw = std::max(logw, -2.0 * cfg.c_n * next[k].time() + log_or_ninf(d));
        }
        double ratio = std::numeric_limits<double>::quiet_NaN();
        if (!res.trace.log_weighted.empty())
        {
            double prev = res.trace.log_weighted.back();
            ratio = std::isinf(logw) && logw < 0 ? 0.0 : std::exp(logw - prev);
        }
        res.trace.distances.push_back(dist);
        res.trace.log_weighted.push_back(logw);
        res.trace.ratios.push_back(ratio);
        res.solution = std::move(next);
        if (dist < cfg.tol)
            return res;
    }
    throw NonConvergence("fixed-point iteration did not converge in " + std::to_string(cfg.max_iter)
                             + " iterations",
                         res.trace);
}

SolutionBounds solution_bounds(Trajectory const& f, DistributionField const& f0n, double c_n)
{
    auto norms = [](DistributionField const& g) {
        double sup = 0;
        for (double v : g.values())
            sup = std::max(sup, std::abs(v));
        std::vector<double> a(g.values().begin(), g.values().end());
        for (double& v : a)
            v = std::abs(v);
        double l1 = pairwise_sum(a) * g.space().cell_volume() * g.lattice().cell_volume();
        return std::pair{sup, l1};
    };
    auto [sup0, l10] = norms(f0n);
    SolutionBounds b;
    b.log_sup_excess = -std::numeric_limits<double>::infinity();
    b.log_l1_excess = -std::numeric_limits<double>::infinity();
    for (auto const& g : f)
    {
        auto [sup, l1] = norms(g);
        double w = -c_n * g.time();
        b.log_sup_excess = std::max(b.log_sup_excess, w + log_or_ninf(sup) - log_or_ninf(sup0));
        b.log_l1_excess = std::max(b.log_l1_excess, w + log_or_ninf(l1) - log_or_ninf(l10));
    }
    return b;
}

//---------------------------------------------------------------------------//
// MARCH
//---------------------------------------------------------------------------//
namespace {

// Sets small negatives to zero; returns the negative mass removed.
double clamp_negatives(std::vector<double>& v, DistributionField const& like, double mass)
{
    double const vol = like.space().cell_volume() * like.lattice().cell_volume();
    double neg = 0;
    for (double x : v)
    {
        if (x < 0.0)
            neg -= x;
    }
    neg *= vol;
    if (neg == 0.0)
        return 0.0;
    if (neg > 1e-6 * mass)
    {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "march: negative mass %.3g exceeds 1e-6 of the total %.6g; reduce dt", neg,
                      mass);
        throw StepSizeError(buf);
    }
    for (double& x : v)
        x = std::max(x, 0.0);
    return neg;
}

}  // namespace

MarchResult solve_march(DistributionField const& f0n, CollisionOperator const& op,
                        SolverConfig const& cfg, StepCallback const& on_step)
{
    if (cfg.mode != SolverMode::march)
        throw InvalidArgument("solve_march needs mode march");
    cfg.validate();
    int const K = cfg.steps();
    double const dt = cfg.dt;
    bool const homogeneous = f0n.space().is_homogeneous();

    DistributionField f = f0n.with_time(0.0);
    MarchResult res{{}, f, 0, 0.0};

    auto record = [&](DistributionField const& g, double entropy) {
        MomentRecord r = moments(g);
        r.entropy_production = entropy;
        res.records.push_back(r);
    };

    std::optional<CollisionOperator::Evaluation> first;
    if (cfg.with_entropy)
    {
        first = op.evaluate(f, true);
        record(f, first->entropy_production);
    }
    else
    {
        record(f, 0.0);
    }
    if (on_step)
        on_step(0, f);

    auto clamp = [&](std::vector<double>& v, DistributionField const& like, double mass) {
        double removed = clamp_negatives(v, like, mass);
        if (removed > 0.0)
        {
            ++res.clamped_steps;
            res.clamped_mass += removed;
        }
        return removed > 0.0;
    };
    // Streaming a closed form with a residual can undershoot where the
    // residual is negative; gridded transport cannot.
    auto stream = [&](DistributionField const& g, double t, double mass) {
        DistributionField s = g.streamed(t);
        if (!s.is_closed_form())
            return s;
        std::vector<double> v(s.values().begin(), s.values().end());
        return clamp(v, s, mass) ? s.with_values(std::move(v)) : s;
    };

    for (int k = 1; k <= K; ++k)
    {
        double const t = k * dt;
        double const mass = res.records.back().mass;
        DistributionField half = stream(f, 0.5 * dt, mass);

        // midpoint rule for df/dt = Q~(f)
        CollisionOperator::Evaluation e1 =
            (homogeneous && first) ? std::move(*first) : op.evaluate(half);
        check_finite(e1.q, k);
        check_loss_stiffness(e1, f.lattice().size(), dt);
        std::vector<double> mid(half.values().begin(), half.values().end());
        for (std::size_t i = 0; i < mid.size(); ++i)
            mid[i] += 0.5 * dt * e1.q[i];
        auto e2 = op.evaluate(half.with_values(mid));
        check_finite(e2.q, k);
        std::vector<double> next(half.values().begin(), half.values().end());
        for (std::size_t i = 0; i < next.size(); ++i)
            next[i] += dt * e2.q[i];

        clamp(next, half, mass);
        f = stream(half.with_values(std::move(next)), 0.5 * dt, mass).with_time(t);

        first.reset();
        if (cfg.with_entropy)
        {
            first = op.evaluate(f, true);
            record(f, first->entropy_production);
        }
        else
        {
            record(f, 0.0);
        }
        if (on_step)
            on_step(k, f);
    }
    res.final_field = f;
    return res;
}

}  // namespace rbe
