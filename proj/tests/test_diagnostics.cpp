#include "doctest.h"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rbe/diagnostics.hpp"
#include "rbe/solver.hpp"

using namespace rbe;

namespace {

CollisionSettings settings(double c0, int n, int nq = 4)
{
    CollisionSettings cs;
    cs.model = CrossSectionModel::constant(c0);
    cs.trunc = TruncationParams(n);
    cs.quad = AngularQuadrature(nq, nq);
    return cs;
}

RunRecord free_streaming_run(double T)
{
    MomentumLattice lat(2.0, 5);
    InitialSpec spec;
    spec.kind = InitialKind::gaussian_x_juttner_p;
    spec.width = 0.6;
    auto f0 = truncate_initial(make_initial(spec, SpatialGrid::periodic(4.0, 16), lat),
                               TruncationParams(64));
    CollisionOperator op(lat, settings(0.0, 64));
    SolverConfig cfg;
    cfg.window = T;
    cfg.dt = 0.05;
    return {SpatialMode::periodic, solve_march(f0, op, cfg).records};
}

MomentRecord record(double t, double mass, double energy, double h = 0, double d = 0)
{
    MomentRecord r;
    r.time = t;
    r.mass = mass;
    r.energy = energy;
    r.h_value = h;
    r.entropy_production = d;
    return r;
}

}  // namespace

TEST_CASE("conservation drift")
{
    std::vector<MomentRecord> rs{record(0, 2.0, 5.0), record(1, 2.0, 5.0)};
    auto rep = conservation_drift(rs);
    CHECK(rep.pass);
    CHECK(rep.measured == 0.0);

    rs.push_back(record(2, 2.0, 5.01));
    rep = conservation_drift(rs);
    CHECK_FALSE(rep.pass);
    CHECK(rep.measured == doctest::Approx(0.002));
    CHECK(rep.note.find("energy") != std::string::npos);

    // momentum is measured against the mass when its initial value is 0
    rs = {record(0, 2.0, 5.0), record(1, 2.0, 5.0)};
    rs[1].momentum = {0, 0, 1e-3};
    CHECK(conservation_drift(rs).measured == doctest::Approx(5e-4));
    CHECK_THROWS_AS(conservation_drift(std::vector<MomentRecord>{rs[0]}), InvalidArgument);
}

TEST_CASE("inertia identity and Gronwall bound")
{
    auto run = free_streaming_run(1.0);
    auto id = inertia_identity_check(run);
    CHECK(id.measured <= 0.01);
    CHECK(id.pass);
    CHECK(gronwall_inertia_bound(run).pass);
    CHECK(conservation_drift(run.records, 1e-9).pass);
    CHECK(run.records.back().inertia > run.records.front().inertia);

    // centered Gaussian times isotropic Juttner: odd integrand
    CHECK(std::abs(run.records.front().inertia_rate) <= 1e-14 * run.records.front().inertia);

    RunRecord hom{SpatialMode::homogeneous, run.records};
    CHECK_THROWS_AS(inertia_identity_check(hom), NotApplicable);

    RunRecord empty{SpatialMode::periodic, {record(0, 0, 0), record(1, 0, 0)}};
    CHECK(gronwall_inertia_bound(empty).pass);
}

TEST_CASE("H-theorem check")
{
    std::vector<MomentRecord> flat{record(0, 1, 1, -3.0), record(0.5, 1, 1, -3.0),
                                   record(1.0, 1, 1, -3.0)};
    auto reps = h_theorem_check(flat);
    REQUIRE(reps.size() == 2);
    CHECK(reps[0].pass);
    CHECK(reps[1].pass);

    // H = -t^2 + const has dH/dt = -2t, matched by D = 2t
    std::vector<MomentRecord> exact;
    for (int k = 0; k <= 4; ++k)
    {
        double t = 0.25 * k;
        exact.push_back(record(t, 1, 1, 1.0 - t * t, 2 * t));
    }
    reps = h_theorem_check(exact);
    CHECK(reps[0].pass);
    CHECK(reps[1].measured == doctest::Approx(0.0).epsilon(1e-12));

    exact[2].h_value += 1.0;
    reps = h_theorem_check(exact);
    CHECK_FALSE(reps[0].pass);
    CHECK_FALSE(reps[1].pass);
}

TEST_CASE("entropy and a-priori bounds on a stationary Juttner run")
{
    MomentumLattice lat(3.0, 7);
    InitialSpec spec;
    auto f = make_initial(spec, SpatialGrid::homogeneous(), lat);
    CollisionOperator op(lat, settings(0.2, 8));
    SolverConfig cfg;
    cfg.window = 1.0;
    cfg.dt = 0.25;
    cfg.with_entropy = true;
    RunRecord run{SpatialMode::homogeneous, solve_march(f, op, cfg).records};
    auto em = entropy_mass_bound(run);
    CHECK(em.pass);
    CHECK(em.bound > em.measured);
    CHECK(apriori_moment_bound(run).pass);
    CHECK(h_theorem_check(run.records)[0].pass);
    CHECK(conservation_drift(run.records, 1e-10).pass);

    auto streaming = free_streaming_run(0.5);
    CHECK(entropy_mass_bound(streaming).pass);
    CHECK(apriori_moment_bound(streaming).pass);
}

TEST_CASE("loss tail")
{
    MomentumLattice lat(4.0, 9);
    auto hom = SpatialGrid::homogeneous();
    CollisionSettings cs;
    cs.model = CrossSectionModel::power_law(1.0, 2.0, 0.0);
    cs.trunc = TruncationParams(16);
    cs.quad = AngularQuadrature(8, 8);

    InitialSpec spec;
    spec.beta = 2.0;
    auto f = make_initial(spec, hom, lat);
    auto t = loss_tail_convergence(f, cs, 1.0, {1.5, 2.5, 3.5});
    REQUIRE(t.tails.size() == 3);
    CHECK(t.tails[0] > t.tails[1]);
    CHECK(t.tails[1] > t.tails[2]);
    CHECK(t.tails[2] > 0.0);

    // support inside |p| <= 2: empty tail beyond
    spec.kind = InitialKind::indicator_box;
    spec.p_half = 1.2;
    auto box = make_initial(spec, hom, lat);
    auto tb = loss_tail_convergence(box, cs, 1.0, {0.5, 2.0, 3.0});
    CHECK(tb.tails[0] > 0.0);
    CHECK(tb.tails[1] == 0.0);
    CHECK(tb.tails[2] == 0.0);

    CollisionSettings none = cs;
    none.model = CrossSectionModel::constant(0.0);
    for (double v : loss_tail_convergence(f, none, 1.0, {1.0, 2.0}).tails)
        CHECK(v == 0.0);

    CHECK_THROWS_AS(loss_tail_convergence(f, cs, 1.0, {2.0, 5.0}), InvalidArgument);
    CHECK_THROWS_AS(loss_tail_convergence(f, cs, 1.0, {2.0, 1.0}), InvalidArgument);
}

TEST_CASE("report output")
{
    std::vector<VerificationReport> reps(2);
    reps[0].name = "a";
    reps[0].pass = true;
    reps[0].measured = 0.5;
    reps[1].name = "b";
    std::ostringstream js;
    write_reports_json(js, reps);
    auto doc = nlohmann::json::parse(js.str());
    REQUIRE(doc.size() == 2);
    CHECK(doc[0]["name"] == "a");
    CHECK(doc[0]["pass"] == true);
    CHECK(doc[0]["measured"] == 0.5);
    CHECK(doc[1]["pass"] == false);

    std::ostringstream table;
    write_reports_table(table, reps);
    CHECK(table.str().find("NO") != std::string::npos);
}
