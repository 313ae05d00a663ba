#include "uhdg/error.hpp"
#include "uhdg/expression.hpp"

#include <doctest.h>

#include <cmath>

using namespace uhdg;
using namespace uhdg::expr;

namespace {

double eval_xy(const Expr& e, double x, double y)
{
    return Compiled(e, {"x", "y"})({x, y});
}

} // namespace

TEST_CASE("parse and evaluate")
{
    CHECK(eval_xy(parse("1 + 2*3"), 0, 0) == doctest::Approx(7.0));
    CHECK(eval_xy(parse("2^3^2"), 0, 0) == doctest::Approx(512.0));
    CHECK(eval_xy(parse("-2^2"), 0, 0) == doctest::Approx(-4.0));
    CHECK(eval_xy(parse("x*y - x/y"), 3.0, 2.0) == doctest::Approx(6.0 - 1.5));
    CHECK(eval_xy(parse("sin(pi/2) + exp(0) + log(e)"), 0, 0) == doctest::Approx(3.0));
    CHECK(eval_xy(parse("sqrt(abs(-9))"), 0, 0) == doctest::Approx(3.0));
    CHECK(eval_xy(parse("1e-3 * 2.5E2"), 0, 0) == doctest::Approx(0.25));
}

TEST_CASE("constant folding")
{
    const Expr e = parse("2*(3+4) - 1");
    REQUIRE(e.is_constant());
    CHECK(e.constant_value() == doctest::Approx(13.0));
    CHECK(parse("0*x").is_constant(0.0));
    CHECK(parse("x*1").to_string() == "x");
}

TEST_CASE("parse errors")
{
    CHECK_THROWS_AS(parse("1 +"), ParseError);
    CHECK_THROWS_AS(parse("(x"), ParseError);
    CHECK_THROWS_AS(parse("foo(x)"), ParseError);
    CHECK_THROWS_AS(parse("x $ y"), ParseError);
    CHECK_THROWS_AS(Compiled(parse("x + z"), {"x", "y"}), ParseError);
}

TEST_CASE("free variables")
{
    const auto vars = parse("x*sin(u) + y").free_variables();
    CHECK(vars.size() == 3);
    CHECK(parse("x + 0*u").depends_on("u") == false);
}

TEST_CASE("derivatives against finite differences")
{
    const char* cases[] = {"x^3*y", "sin(x*y) + cos(y)", "exp(x)*sin(y)", "log(2 + x^2)",
                           "sqrt(1 + x^2 + y^2)", "tan(x/3)", "x^y", "1/(2 + sin(x))",
                           "abs(x - 5)", "(x + y)^2.5"};
    const double x0 = 0.7;
    const double y0 = 1.3;
    const double h = 1e-6;
    for (const char* s : cases) {
        CAPTURE(s);
        const Expr e = parse(s);
        const double fx = (eval_xy(e, x0 + h, y0) - eval_xy(e, x0 - h, y0)) / (2 * h);
        const double fy = (eval_xy(e, x0, y0 + h) - eval_xy(e, x0, y0 - h)) / (2 * h);
        CHECK(eval_xy(diff(e, "x"), x0, y0) == doctest::Approx(fx).epsilon(1e-7));
        CHECK(eval_xy(diff(e, "y"), x0, y0) == doctest::Approx(fy).epsilon(1e-7));
    }
}

TEST_CASE("laplacian of x^2 + y^2")
{
    const Expr u = parse("x^2 + y^2");
    const Expr lap = diff(diff(u, "x"), "x") + diff(diff(u, "y"), "y");
    REQUIRE(lap.is_constant());
    CHECK(lap.constant_value() == doctest::Approx(4.0));
}

TEST_CASE("sign is not differentiable")
{
    CHECK_THROWS_AS(diff(parse("sign(x)"), "x"), NonDifferentiable);
    CHECK_NOTHROW(diff(parse("sign(y)"), "x"));
}

TEST_CASE("substitution")
{
    const Expr k = parse("2 + sin(u)");
    const Expr ku = substitute(k, "u", parse("x*y"));
    CHECK(eval_xy(ku, 0.5, 0.4) == doctest::Approx(2.0 + std::sin(0.2)));
    CHECK(!ku.depends_on("u"));
}

TEST_CASE("deep expressions")
{
    std::string s = "x";
    for (int i = 0; i < 120; ++i)
        s = "(" + s + ")*1.01 + y";
    const Expr e = parse(s);
    double ref = 0.3;
    for (int i = 0; i < 120; ++i)
        ref = ref * 1.01 + 0.2;
    CHECK(eval_xy(e, 0.3, 0.2) == doctest::Approx(ref).epsilon(1e-12));

    std::string t = "y";
    for (int i = 0; i < 100; ++i)
        t = "x + (" + t + ")";
    CHECK(eval_xy(parse(t), 1.0, 2.0) == doctest::Approx(102.0));
}
