#include "rbe/collision.hpp"

#include <algorithm>
#include <cmath>

#include "rbe/parallel.hpp"

namespace rbe {

AngularQuadrature::AngularQuadrature(int n_theta, int n_psi) : n_theta_(n_theta), n_psi_(n_psi)
{
    if (n_theta < 1 || n_psi < 2 || n_psi % 2 != 0)
        throw InvalidArgument("angular quadrature needs n_theta >= 1 and even n_psi >= 2");
    GaussRule rule = gauss_legendre(n_theta);
    for (int i = 0; i < n_theta; ++i)
    {
        double c = rule.nodes[i];
        cos_t_.push_back(c);
        sin_t_.push_back(std::sqrt((1.0 - c) * (1.0 + c)));
        theta_.push_back(std::acos(c));
        w_.push_back(rule.weights[i] * 2.0 * pi / n_psi);
    }
    for (int j = 0; j < n_psi; ++j)
    {
        cos_p_.push_back(std::cos(psi(j)));
        sin_p_.push_back(std::sin(psi(j)));
    }
}

double AngularQuadrature::weight_sum() const
{
    return pairwise_sum(w_) * n_psi_;
}

namespace detail {

// f at arbitrary momentum for one spatial cell, without per-call dispatch
// on the field representation.
class CellView
{
  public:
    CellView(DistributionField const& f, std::size_t cell)
        : f_(&f), lat_(&f.lattice()), x_(f.space().node(cell)), profile_(f.is_closed_form())
    {
        std::size_t off = cell * lat_->size();
        if (!profile_)
            grid_ = f.values().data() + off;
        else if (!f.residual().empty())
            grid_ = f.residual().data() + off;
    }

    double operator()(Vec3 const& p) const
    {
        double v = grid_ ? lat_->interpolate(grid_, p) : 0.0;
        if (profile_)
            v += f_->profile_value(x_, p);
        return v;
    }

  private:
    DistributionField const* f_;
    MomentumLattice const* lat_;
    Vec3 x_;
    bool profile_;
    double const* grid_{nullptr};
};

// Trilinear interpolant of one cell's node values.
class GridView
{
  public:
    GridView(MomentumLattice const& lat, double const* grid) : lat_(&lat), grid_(grid) {}
    double operator()(Vec3 const& p) const { return lat_->interpolate(grid_, p); }

  private:
    MomentumLattice const* lat_;
    double const* grid_;
};

}  // namespace detail

namespace {

using detail::CellView;

// Kernel times angular weight per theta node; false when all vanish.
bool kernel_weights(double g, double p0, double p10, CollisionSettings const& cs, double* bw)
{
    bool any = false;
    auto const& q = cs.quad;
    for (int i = 0; i < q.n_theta(); ++i)
    {
        double b = cs.trunc ? truncated_kernel_Bn(g, q.theta(i), p0, p10, cs.model, *cs.trunc)
                            : kernel_B(g, q.theta(i), cs.model);
        bw[i] = b * q.weight(i);
        any = any || bw[i] != 0.0;
    }
    return any;
}

template<class Visit>
void for_each_outcome(PairFrame const& fr, double const* bw, AngularQuadrature const& q,
                      MomentumLattice const* drop_outside, Visit&& visit)
{
    Vec3 const total = fr.total_momentum();
    for (int i = 0; i < q.n_theta(); ++i)
    {
        if (bw[i] == 0.0)
            continue;
        for (int j = 0; j < q.n_psi(); ++j)
        {
            Vec3 n = fr.direction(q.cos_theta(i), q.sin_theta(i), q.cos_psi(j), q.sin_psi(j));
            Vec3 a = fr.outgoing(n);
            Vec3 b = total - a;
            if (drop_outside && (!drop_outside->contains(a) || !drop_outside->contains(b)))
                continue;
            visit(a, b, bw[i]);
        }
    }
}

struct P1Node
{
    Vec3 p;
    double weight;
};

std::vector<P1Node> p1_nodes(MomentumLattice const& lat, std::optional<SphericalRule> const& rule)
{
    std::vector<P1Node> nodes;
    if (!rule)
    {
        for (std::size_t k = 0; k < lat.size(); ++k)
            nodes.push_back({lat.node(k), lat.cell_volume()});
        return nodes;
    }
    if (!(rule->radius > 0.0))
        throw InvalidArgument("spherical p1 rule needs a positive radius");
    GaussRule r = gauss_legendre(rule->ball.n_radial, 0.0, rule->radius);
    GaussRule c = gauss_legendre(rule->ball.n_polar);
    int const na = rule->ball.n_azimuth;
    for (std::size_t a = 0; a < r.nodes.size(); ++a)
    {
        for (std::size_t b = 0; b < c.nodes.size(); ++b)
        {
            double st = std::sqrt((1 - c.nodes[b]) * (1 + c.nodes[b]));
            for (int k = 0; k < na; ++k)
            {
                double ph = (k + 0.5) * 2.0 * pi / na;
                double rr = r.nodes[a];
                Vec3 p{rr * st * std::cos(ph), rr * st * std::sin(ph), rr * c.nodes[b]};
                nodes.push_back({p, r.weights[a] * rr * rr * c.weights[b] * 2.0 * pi / na});
            }
        }
    }
    return nodes;
}

enum class SingleNode
{
    gain,
    loss
};

double single_node(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
                   CollisionSettings const& cs, SingleNode which)
{
    auto const& lat = f.lattice();
    if (x_cell >= f.space().size() || p_node >= lat.size())
        throw InvalidArgument("collision: node index out of range");
    if (cs.model.vanishes())
        return 0.0;

    Momentum p(lat.node(p_node));
    CellView F(f, x_cell);
    MomentumLattice const* drop = cs.p1_rule ? nullptr : &lat;
    std::vector<double> bw(cs.quad.n_theta());

    double total = 0;
    for (auto const& node : p1_nodes(lat, cs.p1_rule))
    {
        Momentum p1(node.p);
        double g = invariant_g(p, p1);
        if (g == 0.0 || !kernel_weights(g, p.p0, p1.p0, cs, bw.data()))
            continue;
        PairFrame fr(p, p1);
        double acc = 0;
        if (which == SingleNode::gain)
        {
            for_each_outcome(fr, bw.data(), cs.quad, drop,
                             [&](Vec3 const& a, Vec3 const& b, double w) { acc += F(a) * F(b) * w; });
        }
        else
        {
            for_each_outcome(fr, bw.data(), cs.quad, drop,
                             [&](Vec3 const&, Vec3 const&, double w) { acc += w; });
            acc *= F(p1.p);
        }
        total += acc * node.weight / p1.p0;
    }
    return total / p.p0;
}

}  // namespace

double normalization_factor(DistributionField const& f, std::size_t x_cell,
                            std::optional<TruncationParams> const& trunc)
{
    if (!trunc)
        return 1.0;
    return 1.0 / (1.0 + local_mass(f, x_cell) / trunc->n);
}

double gain(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
            CollisionSettings const& cs)
{
    return single_node(f, x_cell, p_node, cs, SingleNode::gain);
}

double loss_operator(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
                     CollisionSettings const& cs)
{
    return single_node(f, x_cell, p_node, cs, SingleNode::loss);
}

double q_tilde(DistributionField const& f, std::size_t x_cell, std::size_t p_node,
               CollisionSettings const& cs)
{
    if (!cs.trunc)
        throw InvalidArgument("q_tilde requires truncation parameters");
    double g = gain(f, x_cell, p_node, cs);
    double l = loss_operator(f, x_cell, p_node, cs);
    return (g - f.at(x_cell, p_node) * l) * normalization_factor(f, x_cell, cs.trunc);
}

WeakFormResult weak_form(DistributionField const& f, CollisionInvariant const& psi,
                         CollisionSettings const& cs)
{
    CollisionOperator op(f.lattice(), cs);
    return op.weak_form(f, psi);
}

double entropy_production(DistributionField const& f, CollisionSettings const& cs)
{
    CollisionOperator op(f.lattice(), cs);
    return op.evaluate(f, true).entropy_production;
}

//---------------------------------------------------------------------------//
// WHOLE-FIELD EVALUATOR
//---------------------------------------------------------------------------//
CollisionOperator::CollisionOperator(MomentumLattice const& lattice, CollisionSettings settings)
    : lattice_(lattice), cs_(std::move(settings))
{
    if (cs_.p1_rule)
        throw InvalidArgument("whole-field evaluation runs on the lattice only");
    std::size_t const np = lattice_.size();
    for (std::size_t k = 0; k < np; ++k)
    {
        nodes_.push_back(lattice_.node(k));
        p0_.push_back(energy(nodes_.back()));
    }
    if (cs_.model.vanishes())
        return;

    std::vector<double> bw(cs_.quad.n_theta());
    for (std::size_t i = 0; i < np; ++i)
    {
        Momentum a(nodes_[i]);
        for (std::size_t j = i + 1; j < np; ++j)
        {
            if (cs_.trunc && p0_[i] + p0_[j] > cs_.trunc->n)
                continue;
            Momentum b(nodes_[j]);
            double g = invariant_g(a, b);
            if (kernel_weights(g, a.p0, b.p0, cs_, bw.data()))
                pairs_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
        }
    }
}

template<bool Entropy, class Sampler>
double CollisionOperator::sweep(Sampler const& F, double const* fv, std::size_t lo, std::size_t hi,
                                double* gain, double* loss) const
{
    auto const& q = cs_.quad;
    int const nt = q.n_theta();
    int const npsi = q.n_psi();
    double const vol = lattice_.cell_volume();
    double const ext = lattice_.extent();
    std::vector<double> bw(nt);
    std::vector<Vec3> rot(npsi);
    double entropy = 0;
    for (std::size_t k = lo; k < hi; ++k)
    {
        std::uint32_t const i = pairs_[k].i;
        std::uint32_t const j = pairs_[k].j;
        Momentum a;
        a.p = nodes_[i];
        a.p0 = p0_[i];
        Momentum b;
        b.p = nodes_[j];
        b.p0 = p0_[j];
        PairFrame fr(a, b);
        kernel_weights(fr.g(), a.p0, b.p0, cs_, bw.data());
        Vec3 const total = fr.total_momentum();
        Vec3 const half = 0.5 * total;
        Vec3 const u = fr.scatter(fr.e1());
        Vec3 const v = fr.scatter(fr.e2());
        Vec3 const w3 = fr.scatter(fr.e3());
        for (int jp = 0; jp < npsi; ++jp)
            rot[jp] = q.cos_psi(jp) * u + q.sin_psi(jp) * v;
        double const fij = fv[i] * fv[j];
        double gsum = 0;
        double lsum = 0;
        double dsum = 0;
        for (int it = 0; it < nt; ++it)
        {
            double const w = bw[it];
            if (w == 0.0)
                continue;
            Vec3 const base = half + q.cos_theta(it) * w3;
            double const st = q.sin_theta(it);
            for (int jp = 0; jp < npsi; ++jp)
            {
                Vec3 const off = st * rot[jp];
                Vec3 const pa = base + off;
                Vec3 const pb = total - pa;
                if (std::abs(pa.x) > ext || std::abs(pa.y) > ext || std::abs(pa.z) > ext ||
                    std::abs(pb.x) > ext || std::abs(pb.y) > ext || std::abs(pb.z) > ext)
                    continue;
                double const prod = F(pa) * F(pb);
                gsum += w * prod;
                lsum += w;
                if constexpr (Entropy)
                {
                    if (prod != fij)
                    {
                        if (!(prod > 0.0))
                            throw PositivityViolation(
                                "entropy production: nonpositive interpolated density");
                        dsum += w * (prod - fij) * std::log(prod / fij);
                    }
                }
            }
        }
        double const c = vol / (a.p0 * b.p0);
        gain[i] += c * gsum;
        gain[j] += c * gsum;
        loss[i] += c * lsum * fv[j];
        loss[j] += c * lsum * fv[i];
        // ordered pairs count twice, times the 1/4 prefactor
        entropy += 0.5 * c * vol * dsum;
    }
    return entropy;
}

CollisionOperator::Evaluation CollisionOperator::evaluate(DistributionField const& f,
                                                          bool with_entropy) const
{
    if (!(f.lattice() == lattice_))
        throw InvalidArgument("collision operator built for a different lattice");
    auto const& space = f.space();
    std::size_t const nx = space.size();
    std::size_t const np = lattice_.size();

    Evaluation ev;
    ev.gain.assign(nx * np, 0.0);
    ev.loss.assign(nx * np, 0.0);
    ev.q.assign(nx * np, 0.0);
    ev.normalization.resize(nx);
    for (std::size_t ix = 0; ix < nx; ++ix)
        ev.normalization[ix] = normalization_factor(f, ix, cs_.trunc);
    if (pairs_.empty())
        return ev;

    if (with_entropy)
    {
        for (double v : f.values())
        {
            if (!(v > 0.0))
                throw PositivityViolation("entropy production needs a strictly positive field");
        }
    }

    // Fixed work split: chunks of the pair list per cell, independent of
    // the thread count; partial results are reduced in chunk order.
    std::size_t const chunks = nx == 1 ? 64 : 1;
    std::size_t const items = nx * chunks;
    struct Partial
    {
        std::vector<double> gain, loss;
        double entropy{0};
    };
    std::vector<Partial> partial(items);

    parallel_for(items, [&](std::size_t item) {
        std::size_t ix = item / chunks;
        std::size_t c = item % chunks;
        std::size_t lo = pairs_.size() * c / chunks;
        std::size_t hi = pairs_.size() * (c + 1) / chunks;
        Partial& out = partial[item];
        out.gain.assign(np, 0.0);
        out.loss.assign(np, 0.0);
        CellView F(f, ix);
        double const* fv = f.values().data() + ix * np;
        detail::GridView G(lattice_, fv);
        double* gp = out.gain.data();
        double* lp = out.loss.data();
        if (f.is_closed_form())
            out.entropy = with_entropy ? sweep<true>(F, fv, lo, hi, gp, lp)
                                       : sweep<false>(F, fv, lo, hi, gp, lp);
        else
            out.entropy = with_entropy ? sweep<true>(G, fv, lo, hi, gp, lp)
                                       : sweep<false>(G, fv, lo, hi, gp, lp);
    });

    std::vector<double> cell_entropy(nx, 0.0);
    for (std::size_t ix = 0; ix < nx; ++ix)
    {
        double* g = ev.gain.data() + ix * np;
        double* l = ev.loss.data() + ix * np;
        double dcell = 0;
        for (std::size_t c = 0; c < chunks; ++c)
        {
            Partial const& part = partial[ix * chunks + c];
            for (std::size_t k = 0; k < np; ++k)
            {
                g[k] += part.gain[k];
                l[k] += part.loss[k];
            }
            dcell += part.entropy;
        }
        double norm = ev.normalization[ix];
        for (std::size_t k = 0; k < np; ++k)
            ev.q[ix * np + k] = norm * (g[k] - f.at(ix, k) * l[k]);
        cell_entropy[ix] = norm * dcell * space.cell_volume();
    }
    ev.entropy_production = with_entropy ? pairwise_sum(cell_entropy) : 0.0;
    return ev;
}

WeakFormResult CollisionOperator::weak_form(DistributionField const& f,
                                            CollisionInvariant const& psi) const
{
    if (!(f.lattice() == lattice_))
        throw InvalidArgument("collision operator built for a different lattice");
    auto const& space = f.space();
    std::size_t const np = lattice_.size();
    std::vector<double> psi_node(np);
    for (std::size_t k = 0; k < np; ++k)
    {
        Momentum m;
        m.p = nodes_[k];
        m.p0 = p0_[k];
        psi_node[k] = psi(m);
    }
    double const vol = lattice_.cell_volume();
    std::vector<double> cell_value(space.size()), cell_scale(space.size());
    std::vector<double> bw(cs_.quad.n_theta());
    for (std::size_t ix = 0; ix < space.size(); ++ix)
    {
        CellView F(f, ix);
        double const* fv = f.values().data() + ix * np;
        double value = 0;
        double scale = 0;
        for (auto const& pr : pairs_)
        {
            Momentum a;
            a.p = nodes_[pr.i];
            a.p0 = p0_[pr.i];
            Momentum b;
            b.p = nodes_[pr.j];
            b.p0 = p0_[pr.j];
            PairFrame fr(a, b);
            kernel_weights(fr.g(), a.p0, b.p0, cs_, bw.data());
            double fij = fv[pr.i] * fv[pr.j];
            double psi_in = psi_node[pr.i] + psi_node[pr.j];
            double psi_abs = std::abs(psi_node[pr.i]) + std::abs(psi_node[pr.j]);
            double v = 0;
            double s = 0;
            for_each_outcome(fr, bw.data(), cs_.quad, &lattice_,
                             [&](Vec3 const& pa, Vec3 const& pb, double w) {
                                 double qa = psi(Momentum(pa));
                                 double qb = psi(Momentum(pb));
                                 double df = w * (F(pa) * F(pb) - fij);
                                 v += df * (psi_in - qa - qb);
                                 s += std::abs(df) * (psi_abs + std::abs(qa) + std::abs(qb));
                             });
            // ordered pairs count twice, times the 1/4 prefactor
            double c = 0.5 * vol * vol / (a.p0 * b.p0);
            value += c * v;
            scale += c * s;
        }
        double norm = normalization_factor(f, ix, cs_.trunc) * space.cell_volume();
        cell_value[ix] = norm * value;
        cell_scale[ix] = norm * scale;
    }
    return {pairwise_sum(cell_value), pairwise_sum(cell_scale)};
}

}  // namespace rbe
