#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rbe/kernels.hpp"

using namespace rbe;

TEST_CASE("kernel_B")
{
    auto unit = CrossSectionModel::constant(1.0);
    auto g2 = CrossSectionModel::power_law(1.0, 2.0, 0.0);
    CHECK(kernel_B(0.0, 1.0, unit) == 0.0);
    CHECK(kernel_B(0.0, 0.3, g2) == 0.0);
    CHECK(kernel_B(1.0, pi / 2, unit) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    CHECK(kernel_B(2.0, 0.7, g2) == doctest::Approx(17.88854381999832).epsilon(1e-15));
}

TEST_CASE("cross-section validation")
{
    CHECK_THROWS_AS(CrossSectionModel::constant(-1.0), InvalidModel);
    CHECK_THROWS_AS(CrossSectionModel::power_law(1.0, -0.5, 0.0), InvalidModel);

    std::istringstream corrupt("2 2\n0 1\n0 3.14\n1 1 -2 1\n");
    CHECK_THROWS_AS(read_cross_section_table(corrupt), InvalidModel);
    std::istringstream short_table("2 2\n0 1\n0 3.14\n1 1 1\n");
    CHECK_THROWS_AS(read_cross_section_table(short_table), InvalidModel);
}

TEST_CASE("tabulated sigma is bilinear and clamped")
{
    std::istringstream in("2 2\n0 2\n0 3\n1 2 3 4\n");
    auto model = CrossSectionModel::tabulated(read_cross_section_table(in));
    CHECK(model.sigma(0.0, 0.0) == 1.0);
    CHECK(model.sigma(2.0, 3.0) == 4.0);
    CHECK(model.sigma(1.0, 1.5) == doctest::Approx(2.5));
    // above the table in g the last row is used
    CHECK(model.sigma(10.0, 0.0) == 3.0);
    CHECK(model.sigma(10.0, 1.5) == doctest::Approx(3.5));

    std::ostringstream out;
    write_cross_section_table(out, model.table());
    std::istringstream back(out.str());
    auto again = read_cross_section_table(back);
    CHECK(again.values == model.table().values);
    CHECK(again.theta == model.table().theta);
}

TEST_CASE("truncated sigma and kernel")
{
    auto unit = CrossSectionModel::constant(1.0);
    TruncationParams two(2);
    CHECK(truncated_sigma(1.0, pi / 2, 1.0, 1.0, unit, two) == 1.0);
    CHECK(truncated_sigma(0.4, pi / 2, 1.0, 1.0, unit, two) == 0.0);
    CHECK(truncated_kernel_Bn(1.0, pi / 2, 1.0, 1.0, unit, two)
          == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    // support indicator
    CHECK(truncated_kernel_Bn(1.0, pi / 2, 1.5, 1.0, unit, two) == 0.0);

    // sigma = n + 1 is cut everywhere
    auto big = CrossSectionModel::constant(3.0);
    for (double g : {0.6, 1.0, 5.0})
        for (double th : {0.6, 1.5, 2.5})
            CHECK(truncated_sigma(g, th, 1.0, 1.0, big, two) == 0.0);

    // inactive truncation reproduces B; B_n <= B everywhere
    TruncationParams large(1000);
    for (double g : {0.5, 1.0, 3.0})
    {
        for (double th : {0.3, 1.0, 2.0})
        {
            CHECK(truncated_kernel_Bn(g, th, 2.0, 3.0, unit, large) == kernel_B(g, th, unit));
            for (int n : {1, 2, 3, 5, 8})
            {
                double bn = truncated_kernel_Bn(g, th, 1.2, 2.0, unit, TruncationParams(n));
                CHECK(bn >= 0.0);
                CHECK(bn <= kernel_B(g, th, unit));
            }
        }
    }
    CHECK_THROWS_AS(TruncationParams(0), InvalidArgument);
}

TEST_CASE("angular integral A(g)")
{
    auto unit = CrossSectionModel::constant(1.0);
    CHECK(angular_integral_A(0.0, unit).value == 0.0);
    CHECK(angular_integral_A(1.0, unit).value == doctest::Approx(17.771531752633464).epsilon(1e-12));
    CHECK(angular_integral_A(3.0, unit).value == doctest::Approx(119.21505918955322).epsilon(1e-12));

    // Anisotropic families go through the panel quadrature.
    auto sin2 = CrossSectionModel::power_law(1.0, 0.0, 2.0);
    CHECK(angular_integral_A(1.3, sin2).value == doctest::Approx(17.862329536823545).epsilon(1e-10));
    auto mixed = CrossSectionModel::power_law(1.0, 1.0, 0.5);
    CHECK(angular_integral_A(1.3, mixed).value == doctest::Approx(30.443436464534244).epsilon(1e-8));

    // A theta-dependent table holding a constant reproduces the closed form.
    CrossSectionTable flat{{0.0, 10.0}, {0.0, 1.0, pi}, std::vector<double>(6, 1.0)};
    auto table = CrossSectionModel::tabulated(flat);
    CHECK_FALSE(table.isotropic());
    for (double g : {0.5, 1.0, 3.0})
    {
        double closed = 4 * pi * g * std::sqrt(1 + g * g);
        CHECK(angular_integral_A(g, table).value == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("hard-interaction lower bound")
{
    std::vector<double> probes{0.5, 1.0, 2.0, 4.0};
    auto unit = CrossSectionModel::constant(1.0);
    // inf of 4 pi sqrt(1+g^2)/g, attained at the largest probe
    CHECK(check_hard_lower_bound(unit, probes) == doctest::Approx(12.95311834341519).epsilon(1e-12));
    CHECK(check_hard_lower_bound(CrossSectionModel::constant(0.0), probes) == 0.0);

    // sigma(g) = g / (4 pi sqrt(1+g^2)) on the probe nodes gives A(g) = g^2.
    CrossSectionTable tuned;
    tuned.g = probes;
    tuned.theta = {0.0};
    for (double g : probes)
        tuned.values.push_back(g / (4 * pi * std::sqrt(1 + g * g)));
    CHECK(check_hard_lower_bound(CrossSectionModel::tabulated(tuned), probes)
          == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("admissibility condition ball integrals")
{
    std::vector<double> probes{5, 10, 20, 40};

    SUBCASE("vanishing cross section")
    {
        auto rep = check_jiang_condition(CrossSectionModel::constant(0.0), 1.0, probes, {8, 4, 4});
        for (double v : rep.jiang_values)
            CHECK(v == 0.0);
        for (double v : rep.de_values)
            CHECK(v == 0.0);
    }
    SUBCASE("constant sigma: A(g) ~ p0 so J decays and the DE integral levels off")
    {
        // Reference values from adaptive 2-D quadrature (scipy dblquad).
        double const jiang_ref[] = {5.087720186882844, 2.6092321826857834, 1.313093269998021,
                                    0.6576162103196452};
        double const de_ref[] = {25.94238451261555, 26.222458902617905, 26.294672240234373,
                                 26.31286733140936};
        auto rep = check_jiang_condition(CrossSectionModel::constant(1.0), 1.0, probes);
        for (std::size_t i = 0; i < probes.size(); ++i)
        {
            CHECK(rep.jiang_values[i] == doctest::Approx(jiang_ref[i]).epsilon(1e-8));
            CHECK(rep.de_values[i] == doctest::Approx(de_ref[i]).epsilon(1e-8));
            CHECK(rep.error_estimates[i] <= 1e-8 * rep.jiang_values[i]);
        }
        CHECK(rep.hard_bound_constant > 0.0);
    }
    SUBCASE("sigma = g^2: A(g) ~ p0^2 so the 1/p0^2 integral tends to a constant")
    {
        double const jiang_ref[] = {15.784398047708184, 17.23345979858959, 17.93559002415155,
                                    18.276947484445504};
        auto rep = check_jiang_condition(CrossSectionModel::power_law(1.0, 2.0, 0.0), 1.0, probes);
        for (std::size_t i = 0; i < probes.size(); ++i)
            CHECK(rep.jiang_values[i] == doctest::Approx(jiang_ref[i]).epsilon(1e-8));
        CHECK(rep.jiang_values.back() > rep.jiang_values.front());
    }
    CHECK_THROWS_AS(check_jiang_condition(CrossSectionModel::constant(1.0), 0.0, probes),
                    InvalidArgument);
    CHECK_THROWS_AS(check_jiang_condition(CrossSectionModel::constant(1.0), 1.0, {3.0, 1.0}),
                    InvalidArgument);
}

TEST_CASE("truncation convergence")
{
    auto unit = CrossSectionModel::constant(1.0);
    auto res = truncation_convergence(unit, 2.0, 2.0, {2, 4, 8, 16});
    REQUIRE(res.values.size() == 4);
    for (std::size_t i = 1; i < res.values.size(); ++i)
        CHECK(res.values[i] <= res.values[i - 1]);
    CHECK(res.values[0] > 0.0);
    REQUIRE(res.clearing_n > 0);

    auto cleared = truncation_convergence(unit, 2.0, 2.0,
                                          {static_cast<int>(res.clearing_n),
                                           static_cast<int>(2 * res.clearing_n)});
    CHECK(cleared.values[0] == 0.0);
    CHECK(cleared.values[1] == 0.0);

    auto hard = truncation_convergence(CrossSectionModel::power_law(1.0, 2.0, 0.0), 2.0, 2.0,
                                       {2, 4, 8, 16});
    for (std::size_t i = 1; i < hard.values.size(); ++i)
        CHECK(hard.values[i] < hard.values[i - 1]);
    CHECK(hard.values.back() > 0.0);
}
