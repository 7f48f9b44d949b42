#include "rbe/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include "rbe/kinematics.hpp"

namespace rbe {

namespace {

void validate_table(CrossSectionTable const& t)
{
    if (t.g.empty() || t.theta.empty())
        throw InvalidModel("cross-section table: empty grid");
    if (t.values.size() != t.g.size() * t.theta.size())
        throw InvalidModel("cross-section table: value count does not match grid");
    auto increasing = [](std::vector<double> const& v) {
        return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
    };
    if (!increasing(t.g) || !increasing(t.theta))
        throw InvalidModel("cross-section table: grids must be strictly increasing");
    for (double v : t.values)
    {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidModel("cross-section table: negative or non-finite sigma");
    }
}

// Bracketing index and fraction on a sorted grid, clamped at the edges.
std::pair<std::size_t, double> locate(std::vector<double> const& grid, double x)
{
    if (grid.size() == 1 || x <= grid.front())
        return {0, 0.0};
    if (x >= grid.back())
        return {grid.size() - 2, 1.0};
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    return {i, (x - grid[i]) / (grid[i + 1] - grid[i])};
}

// Composite Gauss-Legendre in theta over the given breakpoints.
template<class F>
double theta_panels(F&& f, std::vector<double> const& breaks, GaussRule const& rule)
{
    double total = 0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
    {
        double a = breaks[k];
        double b = breaks[k + 1];
        double half = 0.5 * (b - a);
        double mid = 0.5 * (a + b);
        double panel = 0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        {
            double th = mid + half * rule.nodes[i];
            panel += rule.weights[i] * f(th) * std::sin(th);
        }
        total += half * panel;
    }
    return 2.0 * pi * total;
}

std::vector<double> theta_breakpoints(CrossSectionModel const& model)
{
    std::vector<double> breaks;
    int const panels = 8;
    for (int k = 0; k <= panels; ++k)
        breaks.push_back(pi * k / panels);
    if (model.family() == CrossSectionFamily::tabulated)
    {
        for (double th : model.table().theta)
        {
            if (th > 0.0 && th < pi)
                breaks.push_back(th);
        }
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    }
    return breaks;
}

}  // namespace

//---------------------------------------------------------------------------//
CrossSectionTable read_cross_section_table(std::istream& in)
{
    CrossSectionTable t;
    long ng = 0;
    long nt = 0;
    if (!(in >> ng >> nt) || ng < 1 || nt < 1)
        throw InvalidModel("cross-section table: bad header");
    t.g.resize(ng);
    t.theta.resize(nt);
    t.values.resize(ng * nt);
    for (auto& v : t.g)
        if (!(in >> v))
            throw InvalidModel("cross-section table: truncated g grid");
    for (auto& v : t.theta)
        if (!(in >> v))
            throw InvalidModel("cross-section table: truncated theta grid");
    for (auto& v : t.values)
        if (!(in >> v))
            throw InvalidModel("cross-section table: truncated values");
    validate_table(t);
    return t;
}

CrossSectionTable load_cross_section_table(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open cross-section table '" + path + "'");
    return read_cross_section_table(in);
}

void write_cross_section_table(std::ostream& out, CrossSectionTable const& t)
{
    auto prec = out.precision(17);
    out << t.g.size() << ' ' << t.theta.size() << '\n';
    for (double v : t.g)
        out << v << ' ';
    out << '\n';
    for (double v : t.theta)
        out << v << ' ';
    out << '\n';
    for (std::size_t i = 0; i < t.g.size(); ++i)
    {
        for (std::size_t j = 0; j < t.theta.size(); ++j)
            out << t.values[i * t.theta.size() + j] << ' ';
        out << '\n';
    }
    out.precision(prec);
}

//---------------------------------------------------------------------------//
CrossSectionModel CrossSectionModel::constant(double c0)
{
    if (!(c0 >= 0.0) || !std::isfinite(c0))
        throw InvalidModel("constant cross section must be finite and >= 0");
    CrossSectionModel m;
    m.family_ = CrossSectionFamily::constant;
    m.c0_ = c0;
    return m;
}

CrossSectionModel CrossSectionModel::power_law(double c0, double a, double b)
{
    if (!(c0 >= 0.0) || !std::isfinite(c0))
        throw InvalidModel("power-law prefactor must be finite and >= 0");
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw InvalidModel("power-law exponents must be finite and >= 0");
    CrossSectionModel m;
    m.family_ = CrossSectionFamily::power_law;
    m.c0_ = c0;
    m.a_ = a;
    m.b_ = b;
    return m;
}

CrossSectionModel CrossSectionModel::tabulated(CrossSectionTable table)
{
    validate_table(table);
    CrossSectionModel m;
    m.family_ = CrossSectionFamily::tabulated;
    m.table_ = std::make_shared<CrossSectionTable const>(std::move(table));
    return m;
}

double CrossSectionModel::sigma(double g, double theta) const
{
    switch (family_)
    {
        case CrossSectionFamily::constant:
            return c0_;
        case CrossSectionFamily::power_law: {
            double v = c0_;
            if (a_ != 0.0)
                v *= std::pow(g, a_);
            if (b_ != 0.0)
                v *= std::pow(std::abs(std::sin(theta)), b_);
            return v;
        }
        case CrossSectionFamily::tabulated: {
            auto const& t = *table_;
            auto [i, fg] = locate(t.g, g);
            auto [j, ft] = locate(t.theta, theta);
            std::size_t nt = t.theta.size();
            std::size_t i1 = std::min(i + 1, t.g.size() - 1);
            std::size_t j1 = std::min(j + 1, nt - 1);
            double v00 = t.values[i * nt + j];
            double v01 = t.values[i * nt + j1];
            double v10 = t.values[i1 * nt + j];
            double v11 = t.values[i1 * nt + j1];
            return (1 - fg) * ((1 - ft) * v00 + ft * v01) + fg * ((1 - ft) * v10 + ft * v11);
        }
    }
    return 0.0;
}

bool CrossSectionModel::isotropic() const
{
    switch (family_)
    {
        case CrossSectionFamily::constant:
            return true;
        case CrossSectionFamily::power_law:
            return b_ == 0.0;
        case CrossSectionFamily::tabulated:
            return table_->theta.size() == 1;
    }
    return false;
}

bool CrossSectionModel::vanishes() const
{
    if (family_ == CrossSectionFamily::tabulated)
    {
        return std::all_of(table_->values.begin(), table_->values.end(),
                           [](double v) { return v == 0.0; });
    }
    return c0_ == 0.0;
}

TruncationParams::TruncationParams(int n_value) : n(n_value)
{
    if (n < 1)
        throw InvalidArgument("truncation n must be >= 1");
}

//---------------------------------------------------------------------------//
double kernel_B(double g, double theta, CrossSectionModel const& model)
{
    if (g == 0.0)
        return 0.0;
    double sig = model.sigma(g, theta);
    if (!(sig >= 0.0) || !std::isfinite(sig))
        throw InvalidModel("kernel_B: cross section negative or not finite");
    return g * std::sqrt(4.0 + 4.0 * g * g) * sig * 0.5;
}

double truncated_sigma(double g, double theta, double p0, double p10,
                       CrossSectionModel const& model, TruncationParams const& trunc)
{
    double n = trunc.n;
    if (p0 + p10 > n || g * n < 1.0 || std::sin(theta) * n < 1.0)
        return 0.0;
    double sig = model.sigma(g, theta);
    return sig <= n ? sig : 0.0;
}

double truncated_kernel_Bn(double g, double theta, double p0, double p10,
                           CrossSectionModel const& model, TruncationParams const& trunc)
{
    double sig = truncated_sigma(g, theta, p0, p10, model, trunc);
    if (sig == 0.0)
        return 0.0;
    return g * std::sqrt(4.0 + 4.0 * g * g) * sig * 0.5;
}

//---------------------------------------------------------------------------//
QuadratureResult angular_integral_A(double g, CrossSectionModel const& model)
{
    if (!(g >= 0.0))
        throw InvalidArgument("angular_integral_A: g must be >= 0");
    if (g == 0.0)
        return {0.0, 0.0};

    // Isotropic sigma: the S^2 integral of a constant is exact.
    if (model.isotropic())
        return {4.0 * pi * kernel_B(g, 0.5 * pi, model), 0.0};

    auto integrand = [&](double th) { return kernel_B(g, th, model); };
    std::vector<double> breaks = theta_breakpoints(model);

    int nodes = 16;
    double coarse = theta_panels(integrand, breaks, gauss_legendre(nodes));
    double diff = 0;
    for (nodes = 32; nodes <= 4096; nodes *= 2)
    {
        double fine = theta_panels(integrand, breaks, gauss_legendre(nodes));
        diff = std::abs(fine - coarse);
        if (diff <= 1e-10 * std::abs(fine) || diff <= 1e-300)
            return {fine, diff};
        coarse = fine;
    }
    throw QuadratureFailure("angular_integral_A: no convergence with 4096 nodes per panel", diff);
}

namespace {

// Integral of A(g(p, p1)) / p10 over |p1| <= R with p = |p| z.
double ball_integral(CrossSectionModel const& model, double radius, double pmag,
                     BallQuadrature const& q)
{
    GaussRule radial = gauss_legendre(q.n_radial, 0.0, radius);
    GaussRule polar = gauss_legendre(q.n_polar);
    Momentum p(Vec3{0, 0, pmag});
    double dphi = 2.0 * pi / q.n_azimuth;

    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(q.n_radial) * q.n_polar);
    for (int i = 0; i < q.n_radial; ++i)
    {
        double r = radial.nodes[i];
        for (int j = 0; j < q.n_polar; ++j)
        {
            double mu = polar.nodes[j];
            double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            double acc = 0;
            for (int k = 0; k < q.n_azimuth; ++k)
            {
                double phi = (k + 0.5) * dphi;
                Momentum p1(Vec3{r * st * std::cos(phi), r * st * std::sin(phi), r * mu});
                double a = angular_integral_A(invariant_g(p, p1), model).value;
                acc += a / p1.p0 * dphi;
            }
            terms.push_back(acc * r * r * radial.weights[i] * polar.weights[j]);
        }
    }
    return pairwise_sum(terms);
}

}  // namespace

ConditionReport check_jiang_condition(CrossSectionModel const& model, double radius,
                                      std::vector<double> const& probes,
                                      BallQuadrature const& quad)
{
    if (!(radius > 0.0))
        throw InvalidArgument("check_jiang_condition: R must be > 0");
    if (!std::is_sorted(probes.begin(), probes.end()))
        throw InvalidArgument("check_jiang_condition: probes must be increasing");

    ConditionReport rep;
    rep.radius = radius;
    rep.probes = probes;
    for (double pm : probes)
    {
        double p0 = energy({0, 0, pm});
        double v = ball_integral(model, radius, pm, quad);
        double v2 = ball_integral(model, radius, pm, quad.doubled());
        rep.jiang_values.push_back(v2 / (p0 * p0));
        rep.de_values.push_back(v2 / p0);
        rep.error_estimates.push_back(std::abs(v2 - v) / (p0 * p0));
    }
    std::vector<double> positive;
    for (double pm : probes)
        if (pm > 0.0)
            positive.push_back(pm);
    rep.hard_bound_constant = positive.empty() ? 0.0 : check_hard_lower_bound(model, positive);
    return rep;
}

double check_hard_lower_bound(CrossSectionModel const& model,
                              std::vector<double> const& g_probes)
{
    double best = std::numeric_limits<double>::infinity();
    for (double g : g_probes)
    {
        if (!(g > 0.0))
            throw InvalidArgument("check_hard_lower_bound: probes must be positive");
        best = std::min(best, angular_integral_A(g, model).value / (g * g));
    }
    return g_probes.empty() ? 0.0 : best;
}

//---------------------------------------------------------------------------//
TruncationConvergence
truncation_convergence(CrossSectionModel const& model, double radius, double ball_k,
                       std::vector<int> const& n_list,
                       TruncationConvergenceOptions const& opts)
{
    if (!(radius > 0.0) || !(ball_k > 0.0))
        throw InvalidArgument("truncation_convergence: R and k must be > 0");
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw InvalidArgument("truncation_convergence: n_list must be increasing");

    // p1 samples: origin, the pole, then uniform in the ball.
    std::vector<Momentum> samples{Momentum(Vec3{0, 0, 0}), Momentum(Vec3{0, 0, ball_k})};
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    while (static_cast<int>(samples.size()) < opts.n_samples)
    {
        Vec3 v{u(rng), u(rng), u(rng)};
        if (norm2(v) <= 1.0)
            samples.emplace_back(ball_k * v);
    }

    GaussRule radial = gauss_legendre(opts.ball.n_radial, 0.0, radius);
    GaussRule polar = gauss_legendre(opts.ball.n_polar);
    GaussRule angle = gauss_legendre(opts.n_theta);
    double dphi = 2.0 * pi / opts.ball.n_azimuth;

    std::vector<double> theta_nodes;
    for (double mu : angle.nodes)
        theta_nodes.push_back(std::acos(mu));

    TruncationConvergence out;
    out.values.assign(n_list.size(), 0.0);
    double need = 1.0;
    for (auto const& p1 : samples)
    {
        std::vector<std::vector<double>> terms(n_list.size());
        for (int i = 0; i < opts.ball.n_radial; ++i)
        {
            double r = radial.nodes[i];
            for (int j = 0; j < opts.ball.n_polar; ++j)
            {
                double mu = polar.nodes[j];
                double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                for (int k = 0; k < opts.ball.n_azimuth; ++k)
                {
                    double phi = (k + 0.5) * dphi;
                    Momentum p(Vec3{r * st * std::cos(phi), r * st * std::sin(phi), r * mu});
                    double g = invariant_g(p, p1);
                    double w = r * r * radial.weights[i] * polar.weights[j] * dphi * 2.0 * pi;
                    for (std::size_t t = 0; t < theta_nodes.size(); ++t)
                    {
                        double th = theta_nodes[t];
                        double b = kernel_B(g, th, model);
                        if (b > 0.0)
                        {
                            need = std::max({need, std::ceil(model.sigma(g, th)),
                                             std::ceil(1.0 / g), std::ceil(1.0 / std::sin(th)),
                                             std::ceil(p.p0 + p1.p0)});
                        }
                        for (std::size_t m = 0; m < n_list.size(); ++m)
                        {
                            double bn = truncated_kernel_Bn(g, th, p.p0, p1.p0, model,
                                                            TruncationParams(n_list[m]));
                            terms[m].push_back(w * angle.weights[t] * std::abs(bn - b));
                        }
                    }
                }
            }
        }
        for (std::size_t m = 0; m < n_list.size(); ++m)
            out.values[m] = std::max(out.values[m], pairwise_sum(terms[m]));
    }
    out.clearing_n = need < static_cast<double>(std::numeric_limits<int>::max())
                         ? static_cast<long>(need)
                         : 0;
    return out;
}

}  // namespace rbe
