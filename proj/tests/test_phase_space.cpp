#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rbe/kinematics.hpp"
#include "rbe/phase_space.hpp"

using namespace rbe;

namespace {

// 4 pi K_2(1): full-space mass of exp(-p0) (scipy quad).
constexpr double juttner_mass_full = 20.418327788876816;
// Same integrand restricted to the cube [-6, 6]^3 (tensor Gauss-Legendre, 200^3).
constexpr double juttner_mass_cube6 = 19.75165483765958;

InitialSpec juttner_spec(double beta = 1.0, double amp = 1.0)
{
    InitialSpec s;
    s.kind = InitialKind::juttner;
    s.beta = beta;
    s.amplitude = amp;
    return s;
}

}  // namespace

TEST_CASE("grids")
{
    MomentumLattice lat(6.0, 24);
    CHECK(lat.spacing() == doctest::Approx(12.0 / 23));
    CHECK(lat.size() == 24 * 24 * 24);
    CHECK(lat.coord(0) == -6.0);
    CHECK(lat.coord(23) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK_THROWS_AS(MomentumLattice(1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(MomentumLattice(0.0, 4), InvalidArgument);

    auto hom = SpatialGrid::homogeneous();
    CHECK(hom.size() == 1);
    CHECK(hom.cell_volume() == 1.0);
    CHECK(hom.node(0) == Vec3{});

    auto box = SpatialGrid::periodic(2.0, 4);
    CHECK(box.spacing() == 1.0);
    CHECK(box.node(0) == Vec3{-1.5, -1.5, -1.5});
    CHECK(box.node(63) == Vec3{1.5, 1.5, 1.5});
    Vec3 w = box.wrap({2.5, -2.5, 6.0});
    CHECK(w.x == doctest::Approx(-1.5));
    CHECK(w.y == doctest::Approx(1.5));
    CHECK(w.z == doctest::Approx(-2.0));
}

TEST_CASE("make_initial")
{
    auto hom = SpatialGrid::homogeneous();
    MomentumLattice lat(6.0, 13);

    auto f = make_initial(juttner_spec(), hom, lat);
    CHECK(f.is_exact());
    CHECK(f.evaluate(std::size_t{0}, Vec3{}) == std::exp(-1.0));
    // node (6, 6) is lattice index 6 on each axis
    CHECK(f.at(0, lat.index(6, 6, 6)) == std::exp(-1.0));
    CHECK_THROWS_AS(make_initial(juttner_spec(0.0), hom, lat), InvalidArgument);
    CHECK_THROWS_AS(make_initial(juttner_spec(-1.0), hom, lat), InvalidArgument);

    InitialSpec box;
    box.kind = InitialKind::indicator_box;
    box.p_half = 0.0;
    auto empty = make_initial(box, hom, lat);
    for (double v : empty.values())
        CHECK(v == 0.0);
    CHECK(moments(empty).mass == 0.0);

    SUBCASE("double juttner is two boosted bumps")
    {
        MomentumLattice wide(10.0, 32);
        InitialSpec dj;
        dj.kind = InitialKind::double_juttner;
        dj.drift = {0, 0, 0.5};
        auto two = make_initial(dj, hom, wide);
        double u0 = std::sqrt(1.25);
        auto one = DistributionField::closed_form(hom, wide, [u0](Vec3 const&, Vec3 const& p) {
            return std::exp(-(u0 * energy(p) - 0.5 * p.z));
        });
        double m2 = moments(two).mass;
        double m1 = moments(one).mass;
        CHECK(m2 == doctest::Approx(2 * m1).epsilon(1e-12));
        // boosted density: u0 times the rest-frame mass
        CHECK(m2 == doctest::Approx(2 * u0 * juttner_mass_full).epsilon(1e-2));
        CHECK(std::abs(moments(two).momentum.z) <= 1e-12 * m2);
    }
}

TEST_CASE("truncate_initial")
{
    auto hom = SpatialGrid::homogeneous();
    MomentumLattice lat(2.0, 5);
    std::size_t origin = lat.index(2, 2, 2);

    auto zero = DistributionField::gridded(hom, lat, std::vector<double>(lat.size(), 0.0));
    auto t1 = truncate_initial(zero, TruncationParams(1));
    CHECK(t1.at(0, origin) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    int const n = 3;
    auto big = DistributionField::gridded(hom, lat, std::vector<double>(lat.size(), 2.0 * n));
    auto tb = truncate_initial(big, TruncationParams(n));
    for (std::size_t ip = 0; ip < lat.size(); ++ip)
    {
        Vec3 p = lat.node(ip);
        double floor = std::exp(-energy(p)) / n;
        double expect = (norm2(p) <= n ? n : 0.0) + floor;
        CHECK(tb.at(0, ip) == doctest::Approx(expect).epsilon(1e-15));
        CHECK(tb.at(0, ip) >= floor);
        CHECK(tb.at(0, ip) > 0.0);
    }

    // closed form stays closed form and matches the node-wise construction
    auto j = make_initial(juttner_spec(1.0, 5.0), hom, lat);
    auto tj = truncate_initial(j, TruncationParams(2));
    auto tg = truncate_initial(j.as_gridded(), TruncationParams(2));
    CHECK(tj.is_exact());
    for (std::size_t i = 0; i < lat.size(); ++i)
        CHECK(tj.values()[i] == tg.values()[i]);
}

TEST_CASE("moments")
{
    auto hom = SpatialGrid::homogeneous();

    MomentumLattice lat(6.0, 24);
    auto zero = DistributionField::gridded(hom, lat, std::vector<double>(lat.size(), 0.0));
    auto mz = moments(zero);
    CHECK(mz.mass == 0.0);
    CHECK(mz.energy == 0.0);
    CHECK(mz.h_value == 0.0);
    CHECK(mz.abs_log_mass == 0.0);

    auto j = make_initial(juttner_spec(), hom, lat);
    auto mj = moments(j);
    CHECK(mj.mass == doctest::Approx(juttner_mass_cube6).epsilon(1e-2));
    CHECK(std::abs(mj.momentum.x) <= 1e-12 * mj.mass);
    CHECK(std::abs(mj.momentum.y) <= 1e-12 * mj.mass);
    CHECK(std::abs(mj.momentum.z) <= 1e-12 * mj.mass);
    // ln f = -p0, so H = -energy and |ln f| mass = energy
    CHECK(mj.h_value == doctest::Approx(-mj.energy).epsilon(1e-13));
    CHECK(mj.abs_log_mass == doctest::Approx(mj.energy).epsilon(1e-13));

    MomentumLattice wide(10.0, 32);
    CHECK(moments(make_initial(juttner_spec(), hom, wide)).mass
          == doctest::Approx(juttner_mass_full).epsilon(1e-3));

    SUBCASE("linearity")
    {
        auto box = SpatialGrid::periodic(2.0, 4);
        MomentumLattice small(3.0, 7);
        InitialSpec g;
        g.kind = InitialKind::gaussian_x_juttner_p;
        g.center = {0.3, 0.0, -0.2};
        g.width = 0.7;
        auto a = make_initial(g, box, small);
        auto b = make_initial(juttner_spec(2.0), box, small);
        std::vector<double> mix(a.values().size());
        for (std::size_t i = 0; i < mix.size(); ++i)
            mix[i] = 2.0 * a.values()[i] + 3.0 * b.values()[i];
        auto mm = moments(DistributionField::gridded(box, small, mix));
        auto ma = moments(a);
        auto mb = moments(b);
        CHECK(mm.mass == doctest::Approx(2 * ma.mass + 3 * mb.mass).epsilon(1e-13));
        CHECK(mm.energy == doctest::Approx(2 * ma.energy + 3 * mb.energy).epsilon(1e-13));
        CHECK(mm.inertia == doctest::Approx(2 * ma.inertia + 3 * mb.inertia).epsilon(1e-13));
        CHECK(std::abs(mm.momentum.x - 2 * ma.momentum.x - 3 * mb.momentum.x) <= 1e-13 * mm.mass);
    }

    std::vector<double> bad(lat.size(), 1.0);
    bad[17] = NAN;
    CHECK_THROWS_AS(DistributionField::gridded(hom, lat, bad), CorruptedField);
}

TEST_CASE("weighted_l1_distance")
{
    auto box = SpatialGrid::periodic(1.0, 2);
    MomentumLattice lat(2.0, 5);
    auto f = make_initial(juttner_spec(), box, lat);
    CHECK(weighted_l1_distance(f, f, DistanceWeight::moment) == 0.0);

    std::vector<double> v(f.values().begin(), f.values().end());
    std::size_t cell = 1 * lat.size() + lat.index(1, 2, 4);
    double delta = 0.25;
    v[cell] += delta;
    auto h = DistributionField::gridded(box, lat, v);
    Vec3 x = box.node(1);
    Vec3 p = lat.node(lat.index(1, 2, 4));
    double vol = box.cell_volume() * lat.cell_volume();
    CHECK(weighted_l1_distance(f, h) == doctest::Approx(delta * vol).epsilon(1e-14));
    CHECK(weighted_l1_distance(f, h, DistanceWeight::moment)
          == doctest::Approx(delta * (1 + norm2(x) + energy(p)) * vol).epsilon(1e-14));

    auto other = make_initial(juttner_spec(), SpatialGrid::homogeneous(), lat);
    CHECK_THROWS_AS(weighted_l1_distance(f, other), InvalidArgument);

    SUBCASE("truncated data converges to compactly supported data")
    {
        auto hom = SpatialGrid::homogeneous();
        MomentumLattice fine(4.0, 17);
        InitialSpec b;
        b.kind = InitialKind::indicator_box;
        b.p_half = 1.6;
        b.amplitude = 1.5;
        auto f0 = make_initial(b, hom, fine);
        std::vector<double> dist;
        for (int n : {4, 8, 16, 64, 1024})
        {
            dist.push_back(weighted_l1_distance(f0, truncate_initial(f0, TruncationParams(n)),
                                                DistanceWeight::moment));
            if (dist.size() > 1)
                CHECK(dist.back() < dist[dist.size() - 2]);
        }
        // once the box is inside the ball only the floor remains, which is O(1/n)
        CHECK(dist[4] == doctest::Approx(dist[3] / 16).epsilon(1e-12));
    }
}

TEST_CASE("free transport")
{
    auto box = SpatialGrid::periodic(2.0, 4);
    MomentumLattice lat(1.5, 2);
    InitialSpec g;
    g.kind = InitialKind::gaussian_x_juttner_p;
    g.width = 0.6;
    g.center = {0.5, 0, 0};
    auto f = make_initial(g, box, lat);

    // every node has |v_a| = 1.5 / sqrt(1 + 3 * 1.5^2): pick t moving one cell
    double t = std::sqrt(1 + 3 * 2.25) / 1.5;
    auto grid = f.as_gridded();
    auto moved = grid.streamed(t);
    for (std::size_t ix = 0; ix < box.size(); ++ix)
    {
        for (std::size_t ip = 0; ip < lat.size(); ++ip)
        {
            Vec3 p = lat.node(ip);
            Vec3 x = box.node(ix);
            Vec3 src = box.wrap(x - Vec3{p.x > 0 ? 1.0 : -1.0, p.y > 0 ? 1.0 : -1.0,
                                         p.z > 0 ? 1.0 : -1.0});
            // locate the source cell exactly
            std::size_t found = box.size();
            for (std::size_t k = 0; k < box.size(); ++k)
                if (norm2(box.node(k) - src) < 1e-20)
                    found = k;
            REQUIRE(found < box.size());
            CHECK(moved.at(ix, ip) == grid.at(found, ip));
        }
    }

    // the closed form streams exactly
    auto exact = f.streamed(0.37);
    CHECK(exact.is_exact());
    Vec3 x{0.1, -0.3, 1.2};
    Vec3 p{1.5, -1.5, 1.5};
    CHECK(exact.evaluate(x, p) == f.evaluate(x - (0.37 / energy(p)) * p, p));

    // fractional shifts of gridded data conserve mass
    auto frac = grid.streamed(0.37);
    CHECK(moments(frac).mass == doctest::Approx(moments(grid).mass).epsilon(1e-13));

    auto hom = make_initial(juttner_spec(), SpatialGrid::homogeneous(), lat);
    auto same = hom.streamed(5.0);
    for (std::size_t i = 0; i < lat.size(); ++i)
        CHECK(same.values()[i] == hom.values()[i]);
}

TEST_CASE("hybrid field keeps the profile exact")
{
    auto hom = SpatialGrid::homogeneous();
    MomentumLattice lat(4.0, 9);
    auto f = make_initial(juttner_spec(), hom, lat);
    Vec3 off{0.3, -0.7, 1.1};
    CHECK(f.evaluate(std::size_t{0}, off) == std::exp(-energy(off)));

    std::vector<double> v(f.values().begin(), f.values().end());
    auto same = f.with_values(v);
    CHECK(same.is_exact());

    v[lat.index(4, 4, 4)] += 0.1;
    auto bumped = f.with_values(v);
    CHECK_FALSE(bumped.is_exact());
    CHECK(bumped.is_closed_form());
    CHECK(bumped.evaluate(std::size_t{0}, Vec3{}) == doctest::Approx(std::exp(-1.0) + 0.1));
    // far from the bump the profile is still exact
    Vec3 far{3.1, 3.2, -2.9};
    CHECK(bumped.evaluate(std::size_t{0}, far) == std::exp(-energy(far)));
}

TEST_CASE("checkpoint and CSV")
{
    auto box = SpatialGrid::periodic(1.5, 3);
    MomentumLattice lat(2.0, 4);
    InitialSpec g;
    g.kind = InitialKind::gaussian_x_juttner_p;
    auto f = make_initial(g, box, lat).with_time(0.125);

    std::stringstream io;
    write_checkpoint(io, f);
    auto back = read_checkpoint(io);
    CHECK(back.time() == 0.125);
    CHECK(back.space() == box);
    CHECK(back.lattice() == lat);
    for (std::size_t i = 0; i < f.values().size(); ++i)
        CHECK(back.values()[i] == f.values()[i]);

    std::istringstream bad("RBEF2\nhomogeneous 0 1 2 4 0\n");
    CHECK_THROWS_AS(read_checkpoint(bad), CorruptedField);
    std::string text = io.str();
    std::istringstream truncated(text.substr(0, text.size() - 8));
    CHECK_THROWS_AS(read_checkpoint(truncated), CorruptedField);

    std::ostringstream csv;
    MomentRecord r;
    r.time = 0.5;
    r.mass = 2.0;
    r.entropy_production = 0.25;
    std::vector<MomentRecord> recs{r};
    write_moment_csv(csv, recs);
    CHECK(csv.str() == "t,mass,px,py,pz,energy,inertia,H,absLogMass,D\n0.5,2,0,0,0,0,0,0,0,0.25\n");
}
