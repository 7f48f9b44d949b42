#include "rbe/common.hpp"

#include <cmath>

namespace rbe {

double pairwise_sum(std::span<double const> values)
{
    constexpr std::size_t block = 16;
    if (values.size() <= block)
    {
        double s = 0;
        for (double v : values)
            s += v;
        return s;
    }
    std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

GaussRule gauss_legendre(int n)
{
    if (n < 1)
        throw InvalidArgument("gauss_legendre: node count must be >= 1");

    GaussRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);

    // Newton iteration on P_n from the Tricomi initial guess; roots are
    // symmetric so only half are computed.
    int const m = (n + 1) / 2;
    for (int i = 0; i < m; ++i)
    {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int iter = 0; iter < 100; ++iter)
        {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j)
            {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // Recompute the derivative at the converged root.
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j)
        {
            double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
        }
        dp = n * (x * p1 - p2) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);

        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

GaussRule gauss_legendre(int n, double a, double b)
{
    GaussRule rule = gauss_legendre(n);
    double half = 0.5 * (b - a);
    double mid = 0.5 * (b + a);
    for (int i = 0; i < n; ++i)
    {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

}  // namespace rbe
