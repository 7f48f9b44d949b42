#include "rbe/phase_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "rbe/kinematics.hpp"

namespace rbe {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

//---------------------------------------------------------------------------//
// GRIDS
//---------------------------------------------------------------------------//
MomentumLattice::MomentumLattice(double p_max, int n_axis) : p_max_(p_max), n_(n_axis)
{
    if (n_axis < 2)
        throw InvalidArgument("momentum lattice needs at least 2 points per axis");
    if (!(p_max > 0.0) || !std::isfinite(p_max))
        throw InvalidArgument("momentum lattice extent must be positive");
    h_ = 2.0 * p_max / (n_axis - 1);
    inv_h_ = 1.0 / h_;
    extent_ = p_max + 0.5 * h_;
}

SpatialGrid::SpatialGrid(SpatialMode mode, double x_max, int n_axis)
    : mode_(mode), x_max_(x_max), n_(n_axis), dx_(0)
{
    if (mode == SpatialMode::periodic)
        dx_ = 2.0 * x_max / n_axis;
}

SpatialGrid SpatialGrid::homogeneous()
{
    return SpatialGrid(SpatialMode::homogeneous, 0.0, 1);
}

SpatialGrid SpatialGrid::periodic(double x_max, int n_axis)
{
    if (n_axis < 1)
        throw InvalidArgument("spatial grid needs at least 1 point per axis");
    if (!(x_max > 0.0) || !std::isfinite(x_max))
        throw InvalidArgument("spatial box half-width must be positive");
    return SpatialGrid(SpatialMode::periodic, x_max, n_axis);
}

Vec3 SpatialGrid::node(std::size_t idx) const
{
    if (is_homogeneous())
        return {};
    int k = static_cast<int>(idx % n_);
    int j = static_cast<int>((idx / n_) % n_);
    int i = static_cast<int>(idx / (static_cast<std::size_t>(n_) * n_));
    auto c = [&](int m) { return -x_max_ + (m + 0.5) * dx_; };
    return {c(i), c(j), c(k)};
}

Vec3 SpatialGrid::wrap(Vec3 const& x) const
{
    if (is_homogeneous())
        return {};
    double const period = 2.0 * x_max_;
    Vec3 r;
    for (int a = 0; a < 3; ++a)
    {
        double v = x[a] + x_max_;
        v -= period * std::floor(v / period);
        if (v >= period)
            v -= period;
        r[a] = v - x_max_;
    }
    return r;
}

//---------------------------------------------------------------------------//
// DISTRIBUTION FIELD
//---------------------------------------------------------------------------//
namespace {

void check_values(std::span<double const> values)
{
    for (double v : values)
    {
        if (!std::isfinite(v))
            throw CorruptedField("distribution field holds a non-finite value");
    }
}

struct AxisShift
{
    int offset;
    double frac;
};

// Cell offset and fraction for sampling at x - d * dx on a periodic axis.
AxisShift axis_shift(double d)
{
    double r = std::round(d);
    if (std::abs(d - r) < 1e-12)
        return {static_cast<int>(r), 0.0};
    double f = std::floor(d);
    return {static_cast<int>(f), d - f};
}

int wrap_index(long i, int n)
{
    long m = i % n;
    return static_cast<int>(m < 0 ? m + n : m);
}

// Periodic trilinear shift of x-major values: out(x, p) = in(x - t v(p), p).
std::vector<double> shift_values(std::vector<double> const& in, SpatialGrid const& space,
                                 MomentumLattice const& lattice, double t)
{
    std::size_t const np = lattice.size();
    int const n = space.n_axis();
    std::vector<double> out(in.size(), 0.0);
    for (std::size_t ip = 0; ip < np; ++ip)
    {
        Vec3 p = lattice.node(ip);
        Vec3 v = (1.0 / energy(p)) * p;
        AxisShift s[3];
        for (int a = 0; a < 3; ++a)
            s[a] = axis_shift(t * v[a] / space.spacing());
        for (int i = 0; i < n; ++i)
        {
            for (int j = 0; j < n; ++j)
            {
                for (int k = 0; k < n; ++k)
                {
                    double acc = 0;
                    for (int c = 0; c < 8; ++c)
                    {
                        int bits[3] = {(c >> 2) & 1, (c >> 1) & 1, c & 1};
                        double w = 1.0;
                        int idx[3];
                        int const pos[3] = {i, j, k};
                        bool skip = false;
                        for (int a = 0; a < 3; ++a)
                        {
                            if (bits[a])
                            {
                                if (s[a].frac == 0.0)
                                {
                                    skip = true;
                                    break;
                                }
                                w *= s[a].frac;
                            }
                            else
                            {
                                w *= 1.0 - s[a].frac;
                            }
                            idx[a] = wrap_index(static_cast<long>(pos[a]) - s[a].offset - bits[a], n);
                        }
                        if (skip)
                            continue;
                        std::size_t cell = (static_cast<std::size_t>(idx[0]) * n + idx[1]) * n + idx[2];
                        acc += w * in[cell * np + ip];
                    }
                    std::size_t cell = (static_cast<std::size_t>(i) * n + j) * n + k;
                    out[cell * np + ip] = acc;
                }
            }
        }
    }
    return out;
}

}  // namespace

DistributionField::DistributionField(SpatialGrid space, MomentumLattice lattice)
    : space_(space), lattice_(lattice)
{
}

DistributionField DistributionField::gridded(SpatialGrid space, MomentumLattice lattice,
                                             std::vector<double> values, double time)
{
    if (values.size() != space.size() * lattice.size())
        throw InvalidArgument("field value count does not match the grids");
    check_values(values);
    DistributionField f(space, lattice);
    f.values_ = std::move(values);
    f.time_ = time;
    return f;
}

DistributionField DistributionField::closed_form(SpatialGrid space, MomentumLattice lattice,
                                                 Profile profile, double time)
{
    if (!profile)
        throw InvalidArgument("closed-form field needs a callable");
    DistributionField f(space, lattice);
    f.profile_ = std::make_shared<Profile const>(std::move(profile));
    f.time_ = time;
    auto samples = f.sample_profile();
    check_values(samples);
    f.values_ = samples;
    f.samples_ = std::make_shared<std::vector<double> const>(std::move(samples));
    return f;
}

std::vector<double> DistributionField::sample_profile() const
{
    std::size_t const np = lattice_.size();
    std::vector<double> out(space_.size() * np);
    for (std::size_t ix = 0; ix < space_.size(); ++ix)
    {
        Vec3 x = space_.node(ix);
        for (std::size_t ip = 0; ip < np; ++ip)
            out[ix * np + ip] = profile_value(x, lattice_.node(ip));
    }
    return out;
}

double DistributionField::profile_value(Vec3 const& x, Vec3 const& p) const
{
    if (!profile_)
        throw InvalidArgument("field has no closed form");
    if (stream_time_ == 0.0 || space_.is_homogeneous())
        return (*profile_)(space_.wrap(x), p);
    Vec3 back = x - (stream_time_ / energy(p)) * p;
    return (*profile_)(space_.wrap(back), p);
}

double DistributionField::residual_at(std::size_t x_cell, Vec3 const& p) const
{
    return lattice_.interpolate(residual_.data() + x_cell * lattice_.size(), p);
}

double DistributionField::evaluate(std::size_t x_cell, Vec3 const& p) const
{
    if (!profile_)
        return lattice_.interpolate(values_.data() + x_cell * lattice_.size(), p);
    double v = profile_value(space_.node(x_cell), p);
    if (!residual_.empty())
        v += residual_at(x_cell, p);
    return v;
}

double DistributionField::evaluate(Vec3 const& x, Vec3 const& p) const
{
    if (space_.is_homogeneous())
        return evaluate(std::size_t{0}, p);

    double v = 0;
    if (profile_)
    {
        v = profile_value(x, p);
        if (residual_.empty())
            return v;
    }
    double const* base = profile_ ? residual_.data() : values_.data();

    // periodic trilinear in x over the cell-centered nodes
    int const n = space_.n_axis();
    Vec3 w = space_.wrap(x);
    int i0[3];
    double fr[3];
    for (int a = 0; a < 3; ++a)
    {
        double u = (w[a] + space_.x_max()) / space_.spacing() - 0.5;
        double fl = std::floor(u);
        i0[a] = static_cast<int>(fl);
        fr[a] = u - fl;
    }
    for (int c = 0; c < 8; ++c)
    {
        int bits[3] = {(c >> 2) & 1, (c >> 1) & 1, c & 1};
        double wt = 1.0;
        int idx[3];
        for (int a = 0; a < 3; ++a)
        {
            wt *= bits[a] ? fr[a] : 1.0 - fr[a];
            idx[a] = wrap_index(static_cast<long>(i0[a]) + bits[a], n);
        }
        if (wt == 0.0)
            continue;
        std::size_t cell = (static_cast<std::size_t>(idx[0]) * n + idx[1]) * n + idx[2];
        v += wt * lattice_.interpolate(base + cell * lattice_.size(), p);
    }
    return v;
}

DistributionField DistributionField::with_values(std::vector<double> values) const
{
    if (values.size() != values_.size())
        throw InvalidArgument("field value count does not match the grids");
    check_values(values);
    DistributionField f = *this;
    f.values_ = std::move(values);
    f.residual_.clear();
    if (profile_)
    {
        auto const& s = *samples_;
        bool exact = true;
        for (std::size_t i = 0; i < s.size() && exact; ++i)
            exact = f.values_[i] == s[i];
        if (!exact)
        {
            f.residual_.resize(s.size());
            for (std::size_t i = 0; i < s.size(); ++i)
                f.residual_[i] = f.values_[i] - s[i];
        }
    }
    return f;
}

DistributionField DistributionField::with_time(double t) const
{
    DistributionField f = *this;
    f.time_ = t;
    return f;
}

DistributionField DistributionField::as_gridded() const
{
    return gridded(space_, lattice_, values_, time_);
}

DistributionField DistributionField::streamed(double t) const
{
    if (space_.is_homogeneous() || t == 0.0)
        return *this;
    DistributionField f = *this;
    if (!profile_)
    {
        f.values_ = shift_values(values_, space_, lattice_, t);
        return f;
    }
    f.stream_time_ = stream_time_ + t;
    auto samples = f.sample_profile();
    check_values(samples);
    f.values_ = samples;
    if (!residual_.empty())
    {
        f.residual_ = shift_values(residual_, space_, lattice_, t);
        for (std::size_t i = 0; i < samples.size(); ++i)
            f.values_[i] += f.residual_[i];
    }
    f.samples_ = std::make_shared<std::vector<double> const>(std::move(samples));
    return f;
}

//---------------------------------------------------------------------------//
// INITIAL DATA
//---------------------------------------------------------------------------//
DistributionField make_initial(InitialSpec const& spec, SpatialGrid const& space,
                               MomentumLattice const& lattice)
{
    if (!(spec.beta > 0.0) || !std::isfinite(spec.beta))
        throw InvalidArgument("initial data: beta must be positive");
    if (!(spec.amplitude >= 0.0) || !std::isfinite(spec.amplitude))
        throw InvalidArgument("initial data: amplitude must be nonnegative");

    double const beta = spec.beta;
    double const amp = spec.amplitude;
    Profile profile;
    switch (spec.kind)
    {
        case InitialKind::juttner:
            profile = [=](Vec3 const&, Vec3 const& p) { return amp * std::exp(-beta * energy(p)); };
            break;
        case InitialKind::double_juttner: {
            if (!is_finite(spec.drift))
                throw InvalidArgument("initial data: drift must be finite");
            Vec3 u = spec.drift;
            double u0 = energy(u);
            profile = [=](Vec3 const&, Vec3 const& p) {
                double p0 = energy(p);
                double up = dot(u, p);
                return amp * (std::exp(-beta * (u0 * p0 - up)) + std::exp(-beta * (u0 * p0 + up)));
            };
            break;
        }
        case InitialKind::gaussian_x_juttner_p: {
            if (!(spec.width > 0.0))
                throw InvalidArgument("initial data: gaussian width must be positive");
            double inv = 1.0 / (2.0 * spec.width * spec.width);
            Vec3 c = space.is_homogeneous() ? Vec3{} : spec.center;
            profile = [=](Vec3 const& x, Vec3 const& p) {
                return amp * std::exp(-norm2(x - c) * inv) * std::exp(-beta * energy(p));
            };
            break;
        }
        case InitialKind::indicator_box: {
            Vec3 c = spec.center;
            Vec3 pc = spec.p_center;
            double xh = spec.x_half;
            double ph = spec.p_half;
            bool homogeneous = space.is_homogeneous();
            profile = [=](Vec3 const& x, Vec3 const& p) {
                for (int a = 0; a < 3; ++a)
                {
                    if (!(std::abs(p[a] - pc[a]) < ph))
                        return 0.0;
                    if (!homogeneous && !(std::abs(x[a] - c[a]) < xh))
                        return 0.0;
                }
                return amp;
            };
            break;
        }
    }
    return DistributionField::closed_form(space, lattice, std::move(profile));
}

DistributionField truncate_initial(DistributionField const& f0, TruncationParams const& trunc)
{
    double const n = trunc.n;
    auto apply = [n](double v, Vec3 const& x, Vec3 const& p) {
        double p0 = energy(p);
        double r2 = norm2(x);
        double core = (r2 + norm2(p) <= n) ? std::min(v, n) : 0.0;
        return core + std::exp(-(r2 + p0)) / n;
    };

    if (f0.is_exact())
    {
        auto base = f0;
        Profile profile = [base, apply](Vec3 const& x, Vec3 const& p) {
            return apply(base.profile_value(x, p), x, p);
        };
        return DistributionField::closed_form(f0.space(), f0.lattice(), std::move(profile),
                                              f0.time());
    }

    auto const& space = f0.space();
    auto const& lattice = f0.lattice();
    std::size_t const np = lattice.size();
    std::vector<double> out(f0.values().size());
    for (std::size_t ix = 0; ix < space.size(); ++ix)
    {
        Vec3 x = space.node(ix);
        for (std::size_t ip = 0; ip < np; ++ip)
            out[ix * np + ip] = apply(f0.at(ix, ip), x, lattice.node(ip));
    }
    return DistributionField::gridded(space, lattice, std::move(out), f0.time());
}

//---------------------------------------------------------------------------//
// MOMENTS
//---------------------------------------------------------------------------//
MomentRecord moments(DistributionField const& f)
{
    auto const& space = f.space();
    auto const& lattice = f.lattice();
    std::size_t const np = lattice.size();
    std::size_t const nx = space.size();

    enum { mass, px, py, pz, en, inertia, h, abslog, rate, count };
    std::vector<std::vector<double>> terms(count, std::vector<double>(np));
    std::vector<std::vector<double>> cells(count, std::vector<double>(nx));

    std::vector<Vec3> nodes(np);
    std::vector<double> p0(np);
    for (std::size_t ip = 0; ip < np; ++ip)
    {
        nodes[ip] = lattice.node(ip);
        p0[ip] = energy(nodes[ip]);
    }

    for (std::size_t ix = 0; ix < nx; ++ix)
    {
        Vec3 x = space.node(ix);
        double r2 = norm2(x);
        for (std::size_t ip = 0; ip < np; ++ip)
        {
            double v = f.at(ix, ip);
            if (std::isnan(v))
                throw CorruptedField("moments: NaN in field");
            if (v < 0.0 || !std::isfinite(v))
                throw CorruptedField("moments: negative or infinite density");
            Vec3 const& p = nodes[ip];
            double lg = v > 0.0 ? std::log(v) : 0.0;
            terms[mass][ip] = v;
            terms[px][ip] = v * p.x;
            terms[py][ip] = v * p.y;
            terms[pz][ip] = v * p.z;
            terms[en][ip] = v * p0[ip];
            terms[inertia][ip] = v * r2;
            terms[h][ip] = v * lg;
            terms[abslog][ip] = v * std::abs(lg);
            terms[rate][ip] = 2.0 * v * dot(x, p) / p0[ip];
        }
        for (int q = 0; q < count; ++q)
            cells[q][ix] = pairwise_sum(terms[q]);
    }

    double const vol = space.cell_volume() * lattice.cell_volume();
    auto total = [&](int q) { return vol * pairwise_sum(cells[q]); };

    MomentRecord r;
    r.time = f.time();
    r.mass = total(mass);
    r.momentum = {total(px), total(py), total(pz)};
    r.energy = total(en);
    r.inertia = total(inertia);
    r.h_value = total(h);
    r.abs_log_mass = total(abslog);
    r.inertia_rate = total(rate);
    return r;
}

double local_mass(DistributionField const& f, std::size_t x_cell)
{
    auto vals = f.cell_values(x_cell);
    std::vector<double> a(vals.size());
    std::transform(vals.begin(), vals.end(), a.begin(), [](double v) { return std::abs(v); });
    return pairwise_sum(a) * f.lattice().cell_volume();
}

double weighted_l1_distance(DistributionField const& f, DistributionField const& h,
                            DistanceWeight weight)
{
    if (!(f.space() == h.space()) || !(f.lattice() == h.lattice()))
        throw InvalidArgument("weighted_l1_distance: grids differ");
    auto const& space = f.space();
    auto const& lattice = f.lattice();
    std::size_t const np = lattice.size();
    std::vector<double> terms(np);
    std::vector<double> cells(space.size());
    for (std::size_t ix = 0; ix < space.size(); ++ix)
    {
        double r2 = norm2(space.node(ix));
        for (std::size_t ip = 0; ip < np; ++ip)
        {
            double d = std::abs(f.at(ix, ip) - h.at(ix, ip));
            if (weight == DistanceWeight::moment)
                d *= 1.0 + r2 + energy(lattice.node(ip));
            terms[ip] = d;
        }
        cells[ix] = pairwise_sum(terms);
    }
    return pairwise_sum(cells) * space.cell_volume() * lattice.cell_volume();
}

//---------------------------------------------------------------------------//
// I/O
//---------------------------------------------------------------------------//
namespace {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_checkpoint(std::ostream& out, DistributionField const& f)
{
    auto const& s = f.space();
    auto const& l = f.lattice();
    out << "RBEF1\n"
        << (s.is_homogeneous() ? "homogeneous" : "periodic") << ' ' << format_double(s.x_max())
        << ' ' << s.n_axis() << ' ' << format_double(l.p_max()) << ' ' << l.n_axis() << ' '
        << format_double(f.time()) << '\n';
    auto vals = f.values();
    out.write(reinterpret_cast<char const*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!out)
        throw Error("checkpoint: write failed");
}

DistributionField read_checkpoint(std::istream& in)
{
    std::string magic;
    std::getline(in, magic);
    if (magic != "RBEF1")
        throw CorruptedField("checkpoint: bad magic");
    std::string line;
    std::getline(in, line);
    std::istringstream desc(line);
    std::string mode;
    double x_max = 0, p_max = 0, time = 0;
    int x_n = 0, p_n = 0;
    if (!(desc >> mode >> x_max >> x_n >> p_max >> p_n >> time))
        throw CorruptedField("checkpoint: bad grid descriptor");

    SpatialGrid space = SpatialGrid::homogeneous();
    if (mode == "periodic")
        space = SpatialGrid::periodic(x_max, x_n);
    else if (mode != "homogeneous")
        throw CorruptedField("checkpoint: unknown spatial mode '" + mode + "'");
    MomentumLattice lattice(p_max, p_n);

    std::vector<double> values(space.size() * lattice.size());
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double)))
        throw CorruptedField("checkpoint: truncated value block");
    return DistributionField::gridded(space, lattice, std::move(values), time);
}

void write_moment_csv_header(std::ostream& out)
{
    out << "t,mass,px,py,pz,energy,inertia,H,absLogMass,D\n";
}

void write_moment_csv_row(std::ostream& out, MomentRecord const& r)
{
    double const cols[] = {r.time,       r.mass,    r.momentum.x, r.momentum.y,     r.momentum.z,
                           r.energy,     r.inertia, r.h_value,    r.abs_log_mass, r.entropy_production};
    for (std::size_t i = 0; i < std::size(cols); ++i)
        out << (i ? "," : "") << format_double(cols[i]);
    out << '\n';
}

void write_moment_csv(std::ostream& out, std::span<MomentRecord const> records)
{
    write_moment_csv_header(out);
    for (auto const& r : records)
        write_moment_csv_row(out, r);
}

}  // namespace rbe
