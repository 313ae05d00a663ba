#include "uhdg/basis.hpp"
#include "uhdg/error.hpp"
#include "uhdg/quadrature.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace uhdg;

namespace {

// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
double simplex_moment(int a, int b)
{
    double num = 1.0;
    for (int i = 2; i <= a; ++i)
        num *= i;
    for (int i = 2; i <= b; ++i)
        num *= i;
    double den = 1.0;
    for (int i = 2; i <= a + b + 2; ++i)
        den *= i;
    return num / den;
}

const std::array<Vec2, 3> kTri{Vec2(0.3, -0.1), Vec2(1.1, 0.2), Vec2(0.5, 0.9)};

} // namespace

TEST_CASE("basic triangle moments")
{
    const auto& q = triangle_rule(2);
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < q.points.size(); ++i) {
        s0 += q.weights[i];
        s1 += q.weights[i] * q.points[i].x();
    }
    CHECK(s0 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s1 == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(simplex_moment(3, 2) == doctest::Approx(1.0 / 420.0));
}

TEST_CASE("triangle quadrature exactness up to the declared order")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    for (int order : {0, 1, 4, 7, 12, 20}) {
        const auto& q = triangle_rule(order);
        for (int trial = 0; trial < 20; ++trial) {
            const auto exps = monomial_exponents(order);
            std::vector<double> coef(exps.size());
            double exact = 0.0;
            for (std::size_t m = 0; m < exps.size(); ++m) {
                coef[m] = c(rng);
                exact += coef[m] * simplex_moment(exps[m].first, exps[m].second);
            }
            double approx = 0.0;
            for (std::size_t i = 0; i < q.points.size(); ++i) {
                double v = 0.0;
                for (std::size_t m = 0; m < exps.size(); ++m)
                    v += coef[m] * std::pow(q.points[i].x(), exps[m].first) *
                         std::pow(q.points[i].y(), exps[m].second);
                approx += q.weights[i] * v;
            }
            CHECK(std::abs(approx - exact) <= 1e-13 * (1.0 + std::abs(exact)));
        }
    }
}

TEST_CASE("segment quadrature exactness")
{
    for (int order = 0; order <= 20; ++order) {
        const auto& q = segment_rule(order);
        for (int d = 0; d <= order; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i < q.points.size(); ++i)
                s += q.weights[i] * std::pow(q.points[i], d);
            CHECK(s == doctest::Approx(1.0 / (d + 1)).epsilon(1e-14));
        }
    }
}

TEST_CASE("unsupported quadrature orders")
{
    CHECK_THROWS_AS(triangle_rule(21), UnsupportedOrder);
    CHECK_THROWS_AS(segment_rule(-1), UnsupportedOrder);
    CHECK_NOTHROW(gauss_segment(40));
}

TEST_CASE("element basis is orthonormal")
{
    for (int k = 0; k <= 3; ++k) {
        const ElementBasis eb(k, kTri);
        const auto& q = triangle_rule(2 * k + 2);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(eb.dim(), eb.dim());
        Eigen::VectorXd v(eb.dim());
        const double det = std::abs(eb.jacobian().determinant());
        for (std::size_t i = 0; i < q.points.size(); ++i) {
            eb.values(eb.to_physical(q.points[i]), v);
            g += q.weights[i] * det * v * v.transpose();
        }
        CHECK((g - Eigen::MatrixXd::Identity(eb.dim(), eb.dim())).norm() < 1e-12);
    }
}

TEST_CASE("monomial reproduction")
{
    const int k = 3;
    const ElementBasis eb(k, kTri);
    const auto& q = triangle_rule(2 * k);
    const double det = std::abs(eb.jacobian().determinant());
    Eigen::VectorXd v(eb.dim());
    for (const auto& [a, b] : monomial_exponents(k)) {
        // L2 projection; must reproduce the monomial everywhere
        Eigen::VectorXd c = Eigen::VectorXd::Zero(eb.dim());
        for (std::size_t i = 0; i < q.points.size(); ++i) {
            const Vec2 p = eb.to_physical(q.points[i]);
            eb.values(p, v);
            c += q.weights[i] * det * std::pow(p.x(), a) * std::pow(p.y(), b) * v;
        }
        for (const Vec2& p : {Vec2(0.5, 0.3), Vec2(2.0, -1.0), Vec2(-0.4, 1.7)})
            CHECK(std::abs(eb.eval(c, p) - std::pow(p.x(), a) * std::pow(p.y(), b)) < 1e-12 * 20);
    }
}

TEST_CASE("extrapolation")
{
    const std::array<Vec2, 3> ref{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    const ElementBasis eb(1, ref);
    // interpolate u = x through nodal coefficients
    const Eigen::MatrixXd n = nodal_transform(eb);
    Eigen::VectorXd nodal_x(3);
    nodal_x << 0.0, 1.0, 0.0;
    const Eigen::VectorXd cx = n * nodal_x;
    CHECK(extrapolate(eb, cx, Vec2(2, 0)) == doctest::Approx(2.0).epsilon(1e-13));

    const Eigen::VectorXd one = n * Eigen::VectorXd::Ones(3);
    CHECK(extrapolate(eb, one, Vec2(-7, 4)) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("partition of unity inside and outside")
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int k = 1; k <= 3; ++k) {
        const ElementBasis eb(k, kTri);
        const Eigen::MatrixXd n = nodal_transform(eb);
        Eigen::VectorXd v(eb.dim());
        for (int i = 0; i < 100; ++i) {
            const Vec2 p(u(rng), u(rng));
            eb.values(p, v);
            const Eigen::VectorXd lag = n.transpose() * v;
            CHECK(std::abs(lag.sum() - 1.0) <= 1e-11);
        }
    }
}

TEST_CASE("gradient matches central differences")
{
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    std::normal_distribution<double> g;
    const ElementBasis eb(3, kTri);
    Eigen::VectorXd c(eb.dim());
    for (int i = 0; i < eb.dim(); ++i)
        c(i) = g(rng);
    const double h = 1e-6;
    for (int i = 0; i < 50; ++i) {
        const Vec2 p(u(rng), u(rng));
        const Vec2 gr = eb.grad(c, p);
        const Vec2 fd((eb.eval(c, p + Vec2(h, 0)) - eb.eval(c, p - Vec2(h, 0))) / (2 * h),
                      (eb.eval(c, p + Vec2(0, h)) - eb.eval(c, p - Vec2(0, h))) / (2 * h));
        CHECK((gr - fd).norm() <= 1e-5 * std::max(1.0, gr.norm()));
    }
}

TEST_CASE("face basis is orthonormal")
{
    for (int k = 0; k <= 3; ++k) {
        const FaceBasis fb(k, Vec2(0.2, 0.1), Vec2(0.5, 0.5));
        const auto& q = segment_rule(2 * k);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(fb.dim(), fb.dim());
        Eigen::VectorXd v(fb.dim());
        for (std::size_t i = 0; i < q.points.size(); ++i) {
            fb.values_at(q.points[i] * fb.length(), v);
            g += q.weights[i] * fb.length() * v * v.transpose();
        }
        CHECK((g - Eigen::MatrixXd::Identity(fb.dim(), fb.dim())).norm() < 1e-12);
        CHECK(fb.param_of(fb.point_at(0.3 * fb.length())) == doctest::Approx(0.3 * fb.length()));
    }
}
