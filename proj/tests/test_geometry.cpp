#include "uhdg/error.hpp"
#include "uhdg/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace uhdg;

TEST_CASE("unit circle signed distance")
{
    const auto c = DomainBoundary::circle();
    CHECK(signed_distance(c, Vec2(0, 0)) == doctest::Approx(-1.0));
    CHECK(std::abs(signed_distance(c, Vec2(1, 0))) < 1e-12);
    CHECK(signed_distance(c, Vec2(2, 0)) == doctest::Approx(1.0));
}

TEST_CASE("anchor on the unit circle")
{
    const auto c = DomainBoundary::circle();
    auto a = anchor_point(c, Vec2(0.9, 0), Vec2(1, 0));
    CHECK(a.length == doctest::Approx(0.1).epsilon(1e-12));
    CHECK((a.anchor - Vec2(1, 0)).norm() < 1e-11);

    a = anchor_point(c, Vec2(0.6, 0.6), Vec2(1, 0));
    CHECK(a.length == doctest::Approx(0.2).epsilon(1e-11));
    CHECK((a.anchor - Vec2(0.8, 0.6)).norm() < 1e-11);

    const Vec2 on(std::cos(0.3), std::sin(0.3));
    a = anchor_point(c, on, Vec2(0, 1));
    CHECK(a.length == 0.0);
    CHECK((a.anchor - on).norm() == 0.0);

    CHECK_THROWS_AS(anchor_point(c, Vec2(1.5, 0), Vec2(1, 0)), NoIntersection);
}

TEST_CASE("parametric closure and orientation")
{
    for (const auto& b : {DomainBoundary::circle(0.7, Vec2(0.1, -0.2)),
                          DomainBoundary::ellipse(1.0, 0.5), DomainBoundary::kite()}) {
        CAPTURE(b.name());
        CHECK((b.param_eval(0.0) - b.param_eval(1.0 - 1e-15)).norm() < 1e-12);
        // counterclockwise: outward normal points away from the interior
        for (double t : {0.05, 0.3, 0.61, 0.9}) {
            const Vec2 p = b.param_eval(t);
            const Vec2 n = b.outward_normal(t);
            CHECK(b.level_eval(p + 1e-4 * n) > 0.0);
            CHECK(b.level_eval(p - 1e-4 * n) < 0.0);
            CHECK(std::abs(b.level_eval(p)) < 1e-12);
        }
    }
}

TEST_CASE("areas")
{
    CHECK(DomainBoundary::circle().area() == doctest::Approx(std::numbers::pi).epsilon(1e-12));
    CHECK(DomainBoundary::ellipse(2.0, 0.5).area() ==
          doctest::Approx(std::numbers::pi).epsilon(1e-12));
    CHECK(DomainBoundary::kite().area() == doctest::Approx(1.5 * std::numbers::pi).epsilon(1e-12));
    // proxy polygon area against the closed form
    const auto kite = DomainBoundary::kite();
    const auto& pts = kite.proxy();
    double a = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % pts.size()];
        a += 0.5 * (p.x() * q.y() - q.x() * p.y());
    }
    CHECK(a == doctest::Approx(1.5 * std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("anchor invariants on the kite")
{
    const auto k = DomainBoundary::kite();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> t(0.0, 1.0);
    const double diam = k.diameter();
    for (int i = 0; i < 100; ++i) {
        const double s = t(rng);
        const Vec2 x = k.param_eval(s) - 0.05 * k.outward_normal(s);
        if (k.level_eval(x) >= 0.0)
            continue;
        const Vec2 n = k.outward_normal(s);
        const auto a = anchor_point(k, x, n);
        CHECK((a.anchor - (x + a.length * a.direction)).norm() <= 1e-10 * diam);
        CHECK(std::abs(k.level_eval(a.anchor)) <= 1e-10 * diam);
        CHECK(std::abs(signed_distance(k, a.anchor)) <= 1e-9);
        CHECK(a.length >= 0.0);
    }
}

TEST_CASE("convex domain anchors stay within the diameter")
{
    const auto e = DomainBoundary::ellipse(1.0, 0.6);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    int tried = 0;
    while (tried < 200) {
        const Vec2 x(u(rng), 0.6 * u(rng));
        if (e.level_eval(x) >= 0.0)
            continue;
        ++tried;
        const double a = ang(rng);
        const auto r = anchor_point(e, x, Vec2(std::cos(a), std::sin(a)));
        CHECK(r.length <= e.diameter());
        CHECK_FALSE(r.reenters);
    }
}

TEST_CASE("signed distance against the circle closed form")
{
    const auto c = DomainBoundary::circle(1.0);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 p(u(rng), u(rng));
        if (p.norm() < 1e-3)
            continue;
        CHECK(signed_distance(c, p) == doctest::Approx(p.norm() - 1.0).epsilon(1e-10));
    }
}

TEST_CASE("signed distance on the ellipse matches dense sampling")
{
    const auto e = DomainBoundary::ellipse(1.0, 0.5);
    const Vec2 p(0.3, 0.9);
    double best = 1e9;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        best = std::min(best, (Vec2(std::cos(t), 0.5 * std::sin(t)) - p).norm());
    }
    CHECK(signed_distance(e, p) == doctest::Approx(best).epsilon(1e-8));
}

TEST_CASE("implicit level set")
{
    const auto b = DomainBoundary::level_set("x^2/4 + y^2 - 1");
    CHECK(b.kind() == DomainBoundary::Kind::ImplicitLevelSet);
    CHECK(b.level_eval(Vec2(0, 0)) < 0.0);
    CHECK(b.level_eval(Vec2(3, 0)) > 0.0);
    CHECK(b.area() == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-6));
    const auto a = anchor_point(b, Vec2(0, 0), Vec2(1, 0));
    CHECK(a.length == doctest::Approx(2.0).epsilon(1e-11));
    CHECK(std::abs(signed_distance(b, Vec2(0, 1))) < 1e-9);
    CHECK(signed_distance(b, Vec2(0, 0.5)) == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("invalid boundaries")
{
    CHECK_THROWS_AS(DomainBoundary::circle(-1.0), InvalidBoundary);
    CHECK_THROWS_AS(DomainBoundary::level_set("x^2 + y^2 + 1"), InvalidBoundary);
    CHECK_THROWS_AS(DomainBoundary::level_set("x^2 +"), ParseError);
}
