#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "rbe/solver.hpp"

using namespace rbe;

namespace {

CollisionSettings small_settings(double c0, int n)
{
    CollisionSettings cs;
    cs.model = CrossSectionModel::constant(c0);
    cs.trunc = TruncationParams(n);
    cs.quad = AngularQuadrature(4, 4);
    return cs;
}

DistributionField gaussian_blob(int nx, MomentumLattice const& lat)
{
    InitialSpec spec;
    spec.kind = InitialKind::gaussian_x_juttner_p;
    spec.width = 0.5;
    return make_initial(spec, SpatialGrid::periodic(2.0, nx), lat);
}

DistributionField double_juttner_f0n(MomentumLattice const& lat, int n)
{
    InitialSpec spec;
    spec.kind = InitialKind::double_juttner;
    spec.drift = {0, 0, 0.8};
    auto f = make_initial(spec, SpatialGrid::homogeneous(), lat);
    return truncate_initial(f, TruncationParams(n)).as_gridded();
}

SolverConfig window(double T, double dt, double c_n)
{
    SolverConfig cfg;
    cfg.mode = SolverMode::picard_window;
    cfg.window = T;
    cfg.dt = dt;
    cfg.c_n = c_n;
    return cfg;
}

double max_value(DistributionField const& f)
{
    double m = 0;
    for (double v : f.values())
        m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_CASE("characteristic shift")
{
    MomentumLattice lat(2.0, 5);
    auto f = gaussian_blob(8, lat).as_gridded();
    auto same = characteristic_shift(f, 0.0, Direction::forward);
    CHECK(std::equal(same.values().begin(), same.values().end(), f.values().begin()));

    InitialSpec spec;
    auto hom = make_initial(spec, SpatialGrid::homogeneous(), lat);
    auto moved = characteristic_shift(hom, 3.7, Direction::backward);
    CHECK(std::equal(moved.values().begin(), moved.values().end(), hom.values().begin()));

    // round trip error falls under spatial refinement
    double err[2];
    for (int r = 0; r < 2; ++r)
    {
        auto g = gaussian_blob(8 << r, lat).as_gridded();
        auto back = characteristic_shift(characteristic_shift(g, 0.37, Direction::forward), 0.37,
                                         Direction::backward);
        err[r] = weighted_l1_distance(back, g);
    }
    CHECK(err[0] > 0.0);
    CHECK(err[1] <= 0.5 * err[0]);
}

TEST_CASE("Lipschitz constant")
{
    CHECK(compute_lipschitz_cn(TruncationParams(1)) == 0.0);
    CHECK(compute_lipschitz_cn(TruncationParams(2)) == doctest::Approx(584.0321293402002).epsilon(1e-14));
    CHECK(compute_lipschitz_cn(TruncationParams(8)) == doctest::Approx(3242330.939456656).epsilon(1e-14));
}

TEST_CASE("Lipschitz ratio audit on random fixtures")
{
    MomentumLattice lat(2.0, 5);
    auto hom = SpatialGrid::homogeneous();
    int const n = 4;
    CollisionOperator op(lat, small_settings(1.0, n));
    double const cn = compute_lipschitz_cn(TruncationParams(n));
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_field = [&] {
        std::vector<double> v(lat.size());
        for (double& x : v)
            x = u(rng);
        return DistributionField::gridded(hom, lat, v);
    };
    auto norms = [&](std::vector<double> const& v) {
        double sup = 0;
        double l1 = 0;
        for (double x : v)
        {
            sup = std::max(sup, std::abs(x));
            l1 += std::abs(x);
        }
        return std::pair{sup, l1 * lat.cell_volume()};
    };
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        auto phi = random_field();
        auto chi = random_field();
        auto qp = op.evaluate(phi).q;
        auto qc = op.evaluate(chi).q;
        std::vector<double> dq(qp.size()), dphi(qp.size());
        for (std::size_t i = 0; i < qp.size(); ++i)
        {
            dq[i] = qp[i] - qc[i];
            dphi[i] = phi.values()[i] - chi.values()[i];
        }
        auto [qs, q1] = norms(qp);
        auto [ps, p1] = norms(std::vector<double>(phi.values().begin(), phi.values().end()));
        auto [ds, d1] = norms(dq);
        auto [es, e1] = norms(dphi);
        (void)ds;
        (void)es;
        worst = std::max({worst, qs / ps, q1 / p1, d1 / e1});
    }
    CHECK(worst > 0.0);
    CHECK(worst <= cn);
}

TEST_CASE("Picard map")
{
    MomentumLattice lat(2.0, 5);
    auto f0 = truncate_initial(gaussian_blob(4, lat), TruncationParams(4)).as_gridded();
    auto cfg = window(0.5, 0.25, 0.0);

    SUBCASE("no collisions is free streaming")
    {
        CollisionOperator op(lat, small_settings(0.0, 4));
        auto out = picard_map(free_trajectory(f0, cfg), f0, op, cfg);
        REQUIRE(out.size() == 3);
        for (int k = 0; k < 3; ++k)
        {
            auto ref = f0.streamed(0.25 * k);
            CHECK(std::equal(out[k].values().begin(), out[k].values().end(), ref.values().begin()));
            CHECK(out[k].time() == 0.25 * k);
        }
    }
    SUBCASE("first slice is f0n")
    {
        CollisionOperator op(lat, small_settings(1.0, 4));
        std::vector<double> zeros(f0.values().size(), 0.0);
        Trajectory phi(3, f0.with_values(zeros));
        auto out = picard_map(phi, f0, op, cfg);
        CHECK(std::equal(out[0].values().begin(), out[0].values().end(), f0.values().begin()));
    }
    SUBCASE("mesh mismatch")
    {
        CollisionOperator op(lat, small_settings(1.0, 4));
        CHECK_THROWS_AS(picard_map(Trajectory(2, f0), f0, op, cfg), InvalidArgument);
    }
}

TEST_CASE("Juttner is a fixed point in closed form")
{
    MomentumLattice lat(3.0, 7);
    InitialSpec spec;
    auto f = make_initial(spec, SpatialGrid::homogeneous(), lat);
    CollisionOperator op(lat, small_settings(1.0, 8));
    auto cfg = window(0.5, 0.25, compute_lipschitz_cn(TruncationParams(8)));
    auto out = picard_map(free_trajectory(f, cfg), f, op, cfg);
    for (auto const& g : out)
    {
        for (std::size_t i = 0; i < f.values().size(); ++i)
            CHECK(std::abs(g.values()[i] - f.values()[i]) <= 1e-10 * f.values()[i]);
    }
    auto res = solve_fixed_point(f, op, cfg);
    CHECK(res.trace.distances.size() == 1);
    CHECK(res.trace.distances[0] < 1e-12);
}

TEST_CASE("positive Picard map clamps only negative cells")
{
    MomentumLattice lat(2.0, 5);
    auto hom = SpatialGrid::homogeneous();
    auto f0 = double_juttner_f0n(lat, 4);
    CollisionOperator op(lat, small_settings(1.0, 4));
    auto cfg = window(0.25, 0.25, 0.0);
    // a large spike at one node drives the loss at its neighbours past f0n
    std::vector<double> v(f0.values().begin(), f0.values().end());
    v[lat.index(2, 2, 3)] = 1e4;
    Trajectory phi{f0, f0.with_values(v)};
    auto raw = picard_map(phi, f0, op, cfg);
    auto pos = positive_picard_map(phi, f0, op, cfg);
    int negative = 0;
    for (std::size_t i = 0; i < lat.size(); ++i)
    {
        double r = raw[1].values()[i];
        if (r < 0.0)
        {
            ++negative;
            CHECK(pos[1].values()[i] == 0.0);
        }
        else
        {
            CHECK(pos[1].values()[i] == r);
        }
    }
    CHECK(negative > 0);
}

TEST_CASE("fixed point iteration")
{
    MomentumLattice lat(2.0, 5);
    int const n = 8;
    auto f0 = double_juttner_f0n(lat, n);
    double const cn = compute_lipschitz_cn(TruncationParams(n));

    SUBCASE("no collisions converges at once")
    {
        CollisionOperator op(lat, small_settings(0.0, n));
        auto res = solve_fixed_point(f0, op, window(0.5, 0.25, cn));
        CHECK(res.trace.distances.size() == 1);
        CHECK(res.trace.distances[0] == 0.0);
    }
    SUBCASE("double Juttner contracts")
    {
        CollisionOperator op(lat, small_settings(0.05, n));
        auto cfg = window(0.5, 0.125, cn);
        cfg.tol = 1e-10;
        auto res = solve_fixed_point(f0, op, cfg);
        CHECK(res.trace.distances.back() < 1e-10);
        for (std::size_t k = 1; k < res.trace.ratios.size(); ++k)
            CHECK(res.trace.ratios[k] <= 0.55);
        for (auto const& g : res.solution)
            CHECK(*std::min_element(g.values().begin(), g.values().end()) >= 0.0);
        CHECK(solution_bounds(res.solution, f0, cn).holds());

        auto again = picard_map(res.solution, f0, op, cfg);
        CHECK(std::exp(log_weighted_distance(again, res.solution, cn)) < 2 * cfg.tol);
        for (auto const& g : again)
            CHECK(*std::min_element(g.values().begin(), g.values().end()) >= -1e-12 * max_value(g));

        std::ostringstream csv;
        write_trace_csv(csv, res.trace);
        CHECK(csv.str().rfind("iter,distance,ratio\n1,", 0) == 0);
    }
    SUBCASE("iteration budget")
    {
        CollisionOperator op(lat, small_settings(0.05, n));
        auto cfg = window(0.5, 0.125, cn);
        cfg.max_iter = 2;
        cfg.tol = 1e-14;
        CHECK_THROWS_AS(solve_fixed_point(f0, op, cfg), NonConvergence);
        cfg.mode = SolverMode::march;
        CHECK_THROWS_AS(solve_fixed_point(f0, op, cfg), InvalidArgument);
    }
}

TEST_CASE("time marching")
{
    MomentumLattice lat(3.0, 7);
    SolverConfig cfg;
    cfg.window = 1.0;
    cfg.dt = 0.25;

    SUBCASE("free transport keeps moments except inertia")
    {
        auto f0 = truncate_initial(gaussian_blob(4, lat), TruncationParams(8)).as_gridded();
        CollisionOperator op(lat, small_settings(0.0, 8));
        int calls = 0;
        auto res = solve_march(f0, op, cfg, [&](int, DistributionField const&) { ++calls; });
        CHECK(calls == 5);
        REQUIRE(res.records.size() == 5);
        for (auto const& r : res.records)
        {
            CHECK(r.mass == doctest::Approx(res.records[0].mass).epsilon(1e-13));
            CHECK(r.energy == doctest::Approx(res.records[0].energy).epsilon(1e-13));
        }
        CHECK(res.records.back().inertia != res.records[0].inertia);
    }
    SUBCASE("Juttner is stationary in closed form")
    {
        InitialSpec spec;
        auto f = make_initial(spec, SpatialGrid::homogeneous(), lat);
        CollisionOperator op(lat, small_settings(0.2, 8));
        cfg.with_entropy = true;
        auto res = solve_march(f, op, cfg);
        for (auto const& r : res.records)
        {
            CHECK(std::abs(r.mass - res.records[0].mass) <= 1e-10 * res.records[0].mass);
            CHECK(std::abs(r.entropy_production) <= 1e-10);
        }
    }
    SUBCASE("a large step is rejected")
    {
        auto f0 = double_juttner_f0n(lat, 8);
        CollisionOperator op(lat, small_settings(8.0, 8));
        cfg.dt = 1.0;
        CHECK_THROWS_AS(solve_march(f0, op, cfg), StepSizeError);

        // stationary, but dt times the loss rate is past the midpoint rule's range
        InitialSpec spec;
        auto f = make_initial(spec, SpatialGrid::homogeneous(), lat);
        CollisionOperator stiff(lat, small_settings(1.0, 8));
        cfg.dt = 0.25;
        CHECK_THROWS_AS(solve_march(f, stiff, cfg), StepSizeError);
    }
}
