#include "rbe/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "json.hpp"

namespace rbe {

namespace {

constexpr double bound_slack = 1e-6;

void require_records(std::span<MomentRecord const> records, std::size_t n, char const* who)
{
    if (records.size() < n)
        throw InvalidArgument(std::string(who) + ": not enough records");
}

std::string fmt(char const* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double final_time(RunRecord const& run)
{
    return run.records.back().time - run.records.front().time;
}

}  // namespace

VerificationReport conservation_drift(std::span<MomentRecord const> records, double tolerance)
{
    require_records(records, 2, "conservation_drift");
    MomentRecord const& r0 = records.front();
    auto scale = [&](double m0) { return std::max(std::abs(m0), r0.mass); };
    double worst = 0;
    std::string which = "mass";
    auto track = [&](double v, double v0, char const* name) {
        double d = std::abs(v - v0) / scale(v0);
        if (d > worst)
        {
            worst = d;
            which = name;
        }
    };
    for (auto const& r : records)
    {
        track(r.mass, r0.mass, "mass");
        track(r.momentum.x, r0.momentum.x, "momentum x");
        track(r.momentum.y, r0.momentum.y, "momentum y");
        track(r.momentum.z, r0.momentum.z, "momentum z");
        track(r.energy, r0.energy, "energy");
    }
    VerificationReport rep;
    rep.name = "conservation_drift";
    rep.claim = "max_t |m(t) - m(0)| / scale <= tolerance for mass, momentum, energy";
    rep.bound = tolerance;
    rep.measured = worst;
    rep.tolerance = tolerance;
    rep.pass = worst <= tolerance;
    rep.note = "largest drift in " + which;
    return rep;
}

VerificationReport inertia_identity_check(RunRecord const& run, double tolerance)
{
    if (run.mode == SpatialMode::homogeneous)
        throw NotApplicable("inertia_identity_check needs an inhomogeneous run");
    auto const& r = run.records;
    require_records(r, 3, "inertia_identity_check");
    double diff = 0;
    double rate = 0;
    for (std::size_t k = 1; k + 1 < r.size(); ++k)
    {
        double fd = (r[k + 1].inertia - r[k - 1].inertia) / (r[k + 1].time - r[k - 1].time);
        diff = std::max(diff, std::abs(fd - r[k].inertia_rate));
        rate = std::max(rate, std::abs(r[k].inertia_rate));
    }
    VerificationReport rep;
    rep.name = "inertia_identity";
    rep.claim = "d/dt int int f |x|^2 = 2 int int f x.p/p0 (central difference)";
    rep.bound = tolerance;
    rep.measured = rate > 0.0 ? diff / rate : diff;
    rep.tolerance = tolerance;
    rep.pass = rep.measured <= tolerance;
    rep.note = "max |difference| / max |rate| = " + fmt("%.3e", diff) + " / " + fmt("%.3e", rate);
    return rep;
}

VerificationReport gronwall_inertia_bound(RunRecord const& run)
{
    require_records(run.records, 1, "gronwall_inertia_bound");
    MomentRecord const& r0 = run.records.front();
    double sup = 0;
    for (auto const& r : run.records)
        sup = std::max(sup, r.inertia);
    VerificationReport rep;
    rep.name = "gronwall_inertia";
    rep.claim = "sup_t int int f |x|^2 <= e^T int int f0 (1 + |x|^2)";
    rep.bound = std::exp(final_time(run)) * (r0.mass + r0.inertia);
    rep.measured = sup;
    rep.tolerance = bound_slack;
    rep.pass = sup <= rep.bound * (1.0 + bound_slack);
    return rep;
}

std::vector<VerificationReport> h_theorem_check(std::span<MomentRecord const> records,
                                                double resolved_floor)
{
    require_records(records, 2, "h_theorem_check");
    VerificationReport mono;
    mono.name = "h_theorem_monotone";
    mono.claim = "H(t_{k+1}) <= H(t_k) + 1e-10 |H(t_k)|";
    mono.tolerance = 1e-10;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < records.size(); ++k)
    {
        double h0 = records[k].h_value;
        double inc = (records[k + 1].h_value - h0) / std::max(std::abs(h0), 1e-300);
        worst = std::max(worst, inc);
    }
    mono.measured = worst;
    mono.bound = mono.tolerance;
    mono.pass = worst <= mono.tolerance;
    mono.note = "largest relative increase per step";

    VerificationReport ident;
    ident.name = "h_theorem_identity";
    ident.claim = "|dH/dt + D| <= 0.05 max(D, 1e-12) where D is resolved";
    ident.tolerance = 0.05;
    ident.bound = 0.05;
    double mis = 0;
    int used = 0;
    double at = 0;
    for (std::size_t k = 1; k + 1 < records.size(); ++k)
    {
        double d = records[k].entropy_production;
        if (!(d > resolved_floor))
            continue;
        double dh = (records[k + 1].h_value - records[k - 1].h_value)
                    / (records[k + 1].time - records[k - 1].time);
        double m = std::abs(dh + d) / std::max(d, 1e-12);
        if (m >= mis)
        {
            mis = m;
            at = records[k].time;
        }
        ++used;
    }
    ident.measured = mis;
    ident.pass = mis <= ident.bound;
    ident.note = used > 0 ? std::to_string(used) + " interior times; worst at t = " + fmt("%g", at)
                          : "no interior time with resolved D";
    return {mono, ident};
}

double entropy_mass_rhs(RunRecord const& run)
{
    require_records(run.records, 1, "entropy_mass_bound");
    MomentRecord const& r0 = run.records.front();
    double c1 = run.mode == SpatialMode::homogeneous ? entropy_constant_c1_homogeneous
                                                     : entropy_constant_c1;
    return 2.0 * std::exp(final_time(run)) * (r0.inertia + r0.mass) + 2.0 * r0.energy
           + r0.abs_log_mass + c1;
}

VerificationReport entropy_mass_bound(RunRecord const& run)
{
    double sup = 0;
    for (auto const& r : run.records)
        sup = std::max(sup, r.abs_log_mass);
    VerificationReport rep;
    rep.name = "entropy_mass_bound";
    rep.claim = "sup_t int int f|ln f| <= int int f0 [2e^T(|x|^2+1) + 2p0 + |ln f0|] + C1";
    rep.bound = entropy_mass_rhs(run);
    rep.measured = sup;
    rep.tolerance = bound_slack;
    rep.pass = sup <= rep.bound * (1.0 + bound_slack);
    return rep;
}

VerificationReport apriori_moment_bound(RunRecord const& run)
{
    require_records(run.records, 1, "apriori_moment_bound");
    MomentRecord const& r0 = run.records.front();
    double sup = 0;
    for (auto const& r : run.records)
        sup = std::max(sup, r.mass + r.inertia + r.energy + r.abs_log_mass);
    VerificationReport rep;
    rep.name = "apriori_moment_bound";
    rep.claim = "sup_t int int f (1 + |x|^2 + p0 + |ln f|) <= C_T";
    rep.bound = r0.mass + r0.energy + std::exp(final_time(run)) * (r0.mass + r0.inertia)
                + entropy_mass_rhs(run);
    rep.measured = sup;
    rep.tolerance = bound_slack;
    rep.pass = sup <= rep.bound * (1.0 + bound_slack);
    return rep;
}

TailConvergence loss_tail_convergence(DistributionField const& f, CollisionSettings const& cs,
                                      double radius, std::vector<double> const& k_list,
                                      double ratio_bound)
{
    auto const& lat = f.lattice();
    if (k_list.empty())
        throw InvalidArgument("loss_tail_convergence: empty k list");
    for (std::size_t i = 0; i < k_list.size(); ++i)
    {
        if (!(k_list[i] >= 0.0) || (i > 0 && !(k_list[i] > k_list[i - 1])))
            throw InvalidArgument("loss_tail_convergence: k values must increase");
    }
    if (k_list.back() > lat.p_max())
        throw InvalidArgument("loss_tail_convergence: k exceeds the lattice");

    std::size_t const np = lat.size();
    std::vector<Vec3> nodes(np);
    std::vector<double> p0(np), r(np);
    for (std::size_t i = 0; i < np; ++i)
    {
        nodes[i] = lat.node(i);
        p0[i] = energy(nodes[i]);
        r[i] = norm(nodes[i]);
    }
    auto const& q = cs.quad;

    TailConvergence out;
    out.k_values = k_list;
    out.tails.assign(k_list.size(), 0.0);
    std::vector<std::vector<double>> cells(k_list.size(), std::vector<double>(f.space().size()));
    for (std::size_t ix = 0; ix < f.space().size(); ++ix)
    {
        double norm_f = normalization_factor(f, ix, cs.trunc);
        std::vector<std::vector<double>> per_k(k_list.size());
        for (std::size_t i = 0; i < np; ++i)
        {
            if (r[i] > radius)
                continue;
            std::vector<double> tail(k_list.size(), 0.0);
            for (std::size_t j = 0; j < np; ++j)
            {
                if (r[j] <= k_list.front() || j == i)
                    continue;
                double g = invariant_g(Momentum(nodes[i]), Momentum(nodes[j]));
                double a = 0;
                for (int t = 0; t < q.n_theta(); ++t)
                {
                    double b = cs.trunc ? truncated_kernel_Bn(g, q.theta(t), p0[i], p0[j], cs.model, *cs.trunc)
                                        : kernel_B(g, q.theta(t), cs.model);
                    a += b * q.weight(t) * q.n_psi();
                }
                double v = std::abs(f.at(ix, j)) * a / p0[j];
                for (std::size_t k = 0; k < k_list.size(); ++k)
                {
                    if (r[j] > k_list[k])
                        tail[k] += v;
                }
            }
            for (std::size_t k = 0; k < k_list.size(); ++k)
                per_k[k].push_back(norm_f * tail[k] * lat.cell_volume() / p0[i]);
        }
        for (std::size_t k = 0; k < k_list.size(); ++k)
            cells[k][ix] = pairwise_sum(per_k[k]) * lat.cell_volume();
    }
    for (std::size_t k = 0; k < k_list.size(); ++k)
        out.tails[k] = pairwise_sum(cells[k]) * f.space().cell_volume();

    bool decreasing = true;
    for (std::size_t k = 1; k < out.tails.size(); ++k)
        decreasing = decreasing && out.tails[k] < out.tails[k - 1];
    double ratio = out.tails.front() > 0.0 ? out.tails.back() / out.tails.front() : 0.0;
    VerificationReport& rep = out.report;
    rep.name = "loss_tail_convergence";
    rep.claim = "tail norms strictly decreasing in k, last/first <= " + fmt("%g", ratio_bound);
    rep.bound = ratio_bound;
    rep.measured = ratio;
    rep.tolerance = 0.0;
    rep.pass = decreasing && ratio <= ratio_bound;
    rep.note = decreasing ? "strictly decreasing" : "not strictly decreasing";
    return out;
}

VerificationReport contraction_check(IterationTrace const& trace, double tol, double ratio_bound)
{
    if (trace.distances.empty())
        throw InvalidArgument("contraction_check: empty trace");
    double worst = 0;
    for (std::size_t k = 1; k < trace.ratios.size(); ++k)
    {
        if (std::isfinite(trace.ratios[k]))
            worst = std::max(worst, trace.ratios[k]);
    }
    VerificationReport rep;
    rep.name = "contraction";
    rep.claim = "successive weighted distance ratios <= " + fmt("%g", ratio_bound)
                + ", final distance < " + fmt("%g", tol);
    rep.bound = ratio_bound;
    rep.measured = worst;
    rep.tolerance = tol;
    bool converged = trace.distances.back() < tol;
    rep.pass = worst <= ratio_bound && converged;
    rep.note = std::to_string(trace.distances.size()) + " iterations, final distance "
               + fmt("%.3e", trace.distances.back());
    return rep;
}

namespace {

std::pair<double, double> min_max(DistributionField const& f)
{
    auto v = f.values();
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {*lo, *hi};
}

}  // namespace

VerificationReport positivity_check(Trajectory const& solution, Trajectory const& image, double rel)
{
    double smin = std::numeric_limits<double>::infinity();
    for (auto const& f : solution)
        smin = std::min(smin, min_max(f).first);
    double worst = -std::numeric_limits<double>::infinity();
    for (auto const& f : image)
    {
        auto [lo, hi] = min_max(f);
        worst = std::max(worst, hi > 0.0 ? -lo / hi : (lo < 0.0 ? 1.0 : 0.0));
    }
    VerificationReport rep;
    rep.name = "positivity";
    rep.claim = "min f >= 0, and min J(f) >= -" + fmt("%g", rel) + " max J(f) per slice";
    rep.bound = rel;
    rep.measured = worst;
    rep.tolerance = rel;
    rep.pass = smin >= 0.0 && worst <= rel;
    rep.note = "solution min " + fmt("%.3e", smin);
    return rep;
}

VerificationReport march_positivity_check(DistributionField const& f)
{
    VerificationReport rep;
    rep.name = "positivity";
    rep.claim = "min f >= 0";
    rep.measured = min_max(f).first;
    rep.pass = rep.measured >= 0.0;
    return rep;
}

void write_reports_json(std::ostream& out, std::span<VerificationReport const> reports)
{
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (auto const& r : reports)
    {
        nlohmann::ordered_json j;
        j["name"] = r.name;
        j["claim"] = r.claim;
        j["bound"] = r.bound;
        j["measured"] = r.measured;
        j["tolerance"] = r.tolerance;
        j["pass"] = r.pass;
        j["note"] = r.note;
        doc.push_back(std::move(j));
    }
    out << doc.dump(2) << '\n';
}

void write_reports_table(std::ostream& out, std::span<VerificationReport const> reports)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s %-5s %14s %14s\n", "check", "pass", "measured", "bound");
    out << buf;
    for (auto const& r : reports)
    {
        std::snprintf(buf, sizeof buf, "%-24s %-5s %14.6g %14.6g\n", r.name.c_str(),
                      r.pass ? "yes" : "NO", r.measured, r.bound);
        out << buf;
    }
}

}  // namespace rbe
