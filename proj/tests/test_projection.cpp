#include "uhdg/error.hpp"
#include "uhdg/projection.hpp"
#include "uhdg/quadrature.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <random>

using namespace uhdg;

namespace {

std::array<Vec2, 3> random_triangle(std::mt19937& gen)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (;;) {
        std::array<Vec2, 3> v{Vec2(d(gen), d(gen)), Vec2(d(gen), d(gen)), Vec2(d(gen), d(gen))};
        const double a = 0.5 * ((v[1] - v[0]).x() * (v[2] - v[0]).y() - (v[1] - v[0]).y() * (v[2] - v[0]).x());
        const double p = (v[1] - v[0]).norm() + (v[2] - v[1]).norm() + (v[0] - v[2]).norm();
        if (std::abs(a) > 0.02 * p * p)
            return v;
    }
}

double l2_error(const ElementBasis& eb, const Eigen::VectorXd& c, const ScalarField& u)
{
    const TriangleRule& tq = triangle_rule(20);
    double e = 0.0;
    for (std::size_t i = 0; i < tq.points.size(); ++i) {
        const Vec2 x = eb.to_physical(tq.points[i]);
        e += tq.weights[i] * 2.0 * eb.area() * std::pow(eb.eval(c, x) - u(x), 2);
    }
    return std::sqrt(e);
}

} // namespace

TEST_CASE("projector reproduces polynomials")
{
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int k = 0; k <= 3; ++k) {
        const ElementBasis eb(k, random_triangle(gen));
        const int nb = eb.dim();
        Eigen::VectorXd cq(2 * nb);
        Eigen::VectorXd cu(nb);
        for (int i = 0; i < 2 * nb; ++i)
            cq(i) = d(gen);
        for (int i = 0; i < nb; ++i)
            cu(i) = d(gen);
        const VectorField q = [&](const Vec2& x) { return Vec2(eb.eval(cq.head(nb), x), eb.eval(cq.tail(nb), x)); };
        const ScalarField u = [&](const Vec2& x) { return eb.eval(cu, x); };
        const ProjectedPair p = hdg_project(eb, q, u, {1.0, 0.5, 2.0});
        CHECK((p.q - cq).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((p.u - cu).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("projection of sin(x) on the reference triangle satisfies its conditions")
{
    const ElementBasis eb(1, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
    const VectorField q = [](const Vec2&) { return Vec2(0.0, 0.0); };
    const ScalarField u = [](const Vec2& x) { return std::sin(x.x()); };
    const std::array<double, 3> tau{1.0, 1.0, 1.0};
    const ProjectedPair p = hdg_project(eb, q, u, tau, 20);
    CHECK(oracle::projection_residual(eb, q, u, tau, p) <= 1e-10);
    CHECK(projection_residuals(eb, q, u, tau, p, 20).max() <= 1e-10);
}

TEST_CASE("projection residuals on random elements and fields")
{
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    std::uniform_real_distribution<double> t(0.1, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = trial % 4;
        const ElementBasis eb(k, random_triangle(gen));
        const double a = d(gen);
        const double b = d(gen);
        const double c = d(gen);
        const VectorField q = [=](const Vec2& x) { return Vec2(std::cos(a * x.x() + b * x.y()), std::exp(c * x.x())); };
        const ScalarField u = [=](const Vec2& x) { return std::sin(a * x.y()) + b * x.x() * x.x() * x.y(); };
        const std::array<double, 3> tau{t(gen), t(gen), t(gen)};
        worst = std::max(worst, oracle::projection_residual(eb, q, u, tau, hdg_project(eb, q, u, tau, 20)));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("projection error decays at order k+1")
{
    const ScalarField u = [](const Vec2& x) { return std::exp(x.x()) * std::sin(2.0 * x.y()); };
    const ScalarField qx = [](const Vec2& x) { return std::cos(x.x() + x.y()); };
    const VectorField q = [&](const Vec2& x) { return Vec2(qx(x), x.x() * std::exp(x.y())); };
    for (int k = 0; k <= 3; ++k) {
        std::vector<double> eu;
        std::vector<double> eq;
        for (double h : {0.2, 0.1, 0.05}) {
            const ElementBasis eb(k, {Vec2(0.1, 0.2), Vec2(0.1 + h, 0.2 + 0.2 * h), Vec2(0.1 + 0.3 * h, 0.2 + h)});
            const ProjectedPair p = hdg_project(eb, q, u, {1.0, 1.0, 1.0});
            eu.push_back(l2_error(eb, p.u, u));
            eq.push_back(l2_error(eb, p.q.head(eb.dim()), qx));
        }
        // error of a single element of diameter h scales with h^{k+2}
        for (std::size_t i = 0; i + 1 < eu.size(); ++i) {
            CHECK(std::log2(eu[i] / eu[i + 1]) >= k + 1.8);
            CHECK(std::log2(eq[i] / eq[i + 1]) >= k + 1.8);
        }
    }
}

TEST_CASE("vanishing stabilization makes the projection singular")
{
    const ElementBasis eb(1, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
    CHECK_THROWS_AS(hdg_project(
                        eb, [](const Vec2&) { return Vec2(1.0, 0.0); }, [](const Vec2&) { return 1.0; },
                        {0.0, 0.0, 0.0}),
                    SingularProjection);
}

TEST_CASE("k = 0 projection uses face conditions only")
{
    const ElementBasis eb(0, {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
    const VectorField q = [](const Vec2& x) { return Vec2(x.x(), x.y() * x.y()); };
    const ScalarField u = [](const Vec2& x) { return std::cos(x.x()); };
    const std::array<double, 3> tau{1.0, 2.0, 3.0};
    const ProjectedPair p = hdg_project(eb, q, u, tau, 20);
    CHECK(oracle::projection_residual(eb, q, u, tau, p) <= 1e-12);
}

TEST_CASE("face L2 projection")
{
    const FaceBasis fb(3, Vec2(0.3, -0.2), Vec2(1.1, 0.4));
    SUBCASE("polynomial traces are reproduced")
    {
        const Eigen::Vector4d c(0.3, -1.2, 0.7, 2.0);
        const Eigen::VectorXd p = face_l2_project(fb, [&](const Vec2& x) { return fb.eval(c, fb.param_of(x)); });
        CHECK((p - c).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("constant one")
    {
        const Eigen::VectorXd p = face_l2_project(fb, [](const Vec2&) { return 1.0; });
        CHECK(p(0) == doctest::Approx(std::sqrt(fb.length())).epsilon(1e-14));
        CHECK(p.tail(3).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("sin trace against a dense normal-equation oracle")
    {
        const ScalarField g = [](const Vec2& x) { return std::sin(3.0 * x.x() + x.y()); };
        const SegmentRule dense = gauss_segment(21); // exact to degree 41
        Eigen::Matrix4d gram = Eigen::Matrix4d::Zero();
        Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
        // monomials in the face parameter
        for (std::size_t i = 0; i < dense.points.size(); ++i) {
            const double s = dense.points[i];
            const double w = dense.weights[i] * fb.length();
            Eigen::Vector4d m(1.0, s, s * s, s * s * s);
            gram += w * m * m.transpose();
            rhs += w * g(fb.point_at(s * fb.length())) * m;
        }
        const Eigen::Vector4d a = gram.lu().solve(rhs);
        const Eigen::VectorXd p = face_l2_project(fb, g);
        for (double s : {0.0, 0.17, 0.5, 0.93, 1.0}) {
            const double oracle = a(0) + a(1) * s + a(2) * s * s + a(3) * s * s * s;
            CHECK(std::abs(fb.eval(p, s * fb.length()) - oracle) < 1e-11);
        }
    }
}
