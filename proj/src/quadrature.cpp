#include "uhdg/quadrature.hpp"

#include "uhdg/error.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace uhdg {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    if (n < 1)
        throw UnsupportedOrder("Gauss-Legendre rule needs at least one point");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = z;
                p0 = 1.0;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        // Re-evaluate the derivative at the converged root.
        double p0 = 1.0;
        double p1 = z;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (z * p1 - p0) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -z;
        nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1)
        nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

SegmentRule gauss_segment(int n)
{
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre(n, x, w);
    SegmentRule r;
    r.order = 2 * n - 1;
    r.points.resize(x.size());
    r.weights.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.points[i] = 0.5 * (x[i] + 1.0);
        r.weights[i] = 0.5 * w[i];
    }
    return r;
}

namespace {

void check_order(int order)
{
    if (order < 0 || order > kMaxQuadratureOrder)
        throw UnsupportedOrder("quadrature order " + std::to_string(order) +
                               " outside supported range [0, 20]");
}

TriangleRule make_triangle_rule(int order)
{
    const int nxi = std::max(1, (order + 2) / 2);  // ceil((order+1)/2)
    const int neta = std::max(1, (order + 3) / 2); // ceil((order+2)/2)
    const SegmentRule a = gauss_segment(nxi);
    const SegmentRule b = gauss_segment(neta);
    TriangleRule r;
    r.order = order;
    for (std::size_t j = 0; j < b.points.size(); ++j) {
        const double eta = b.points[j];
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            const double xi = a.points[i];
            r.points.emplace_back(xi * (1.0 - eta), eta);
            r.weights.push_back(a.weights[i] * b.weights[j] * (1.0 - eta));
        }
    }
    return r;
}

} // namespace

const TriangleRule& triangle_rule(int order)
{
    check_order(order);
    static std::array<TriangleRule, kMaxQuadratureOrder + 1> rules;
    static std::once_flag once;
    std::call_once(once, [] {
        for (int o = 0; o <= kMaxQuadratureOrder; ++o)
            rules[static_cast<std::size_t>(o)] = make_triangle_rule(o);
    });
    return rules[static_cast<std::size_t>(order)];
}

const SegmentRule& segment_rule(int order)
{
    check_order(order);
    static std::array<SegmentRule, kMaxQuadratureOrder + 1> rules;
    static std::once_flag once;
    std::call_once(once, [] {
        for (int o = 0; o <= kMaxQuadratureOrder; ++o) {
            rules[static_cast<std::size_t>(o)] = gauss_segment(std::max(1, (o + 2) / 2));
            rules[static_cast<std::size_t>(o)].order = o;
        }
    });
    return rules[static_cast<std::size_t>(order)];
}

} // namespace uhdg
