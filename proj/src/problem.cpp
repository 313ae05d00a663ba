#include "uhdg/problem.hpp"

#include "uhdg/error.hpp"

#include <cmath>

namespace uhdg {

namespace {

void check_variables(const expr::Expr& e, std::initializer_list<const char*> allowed, const char* what)
{
    for (const std::string& v : e.free_variables()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || v == a;
        if (!ok)
            throw ConfigError(std::string(what) + " uses unknown variable '" + v + "'");
    }
}

} // namespace

ProblemSpec::ProblemSpec(KappaVariant variant, const std::string& kappa, const std::string& source,
                         const std::string& dirichlet, double kappa_lo, double kappa_hi, int k)
    : ProblemSpec(variant, expr::parse(kappa), expr::parse(source), expr::parse(dirichlet), kappa_lo,
                  kappa_hi, k)
{
}

ProblemSpec::ProblemSpec(KappaVariant variant, const expr::Expr& kappa, const expr::Expr& source,
                         const expr::Expr& dirichlet, double kappa_lo, double kappa_hi, int k)
    : variant_(variant), kappa_(kappa), source_(source), dirichlet_(dirichlet), kappa_lo_(kappa_lo),
      kappa_hi_(kappa_hi), k_(k)
{
    if (k < 0 || k > 3)
        throw ConfigError("polynomial degree must lie in [0, 3]");
    if (!(kappa_lo > 0.0) || !(kappa_hi >= kappa_lo) || !std::isfinite(kappa_hi))
        throw ConfigError("kappa bounds must satisfy 0 < kappa_lo <= kappa_hi");
    if (variant == KappaVariant::OfU)
        check_variables(kappa_, {"x", "y", "u"}, "kappa");
    else
        check_variables(kappa_, {"x", "y", "sx", "sy"}, "kappa");
    check_variables(source_, {"x", "y", "u"}, "source");
    check_variables(dirichlet_, {"x", "y"}, "boundary data");
    kappa_c_ = expr::Compiled(kappa_, {"x", "y", "u", "sx", "sy"});
    source_c_ = expr::Compiled(source_, {"x", "y", "u"});
    dirichlet_c_ = expr::Compiled(dirichlet_, {"x", "y"});
}

ProblemSpec ProblemSpec::with_constant_kappa(KappaVariant variant, double kappa, const std::string& source,
                                             const std::string& dirichlet, int k)
{
    return ProblemSpec(variant, expr::Expr(kappa), expr::parse(source), expr::parse(dirichlet), kappa, kappa, k);
}

void ProblemSpec::set_tau(double interior, double boundary)
{
    if (!(interior > 0.0) || !(boundary > 0.0))
        throw ConfigError("stabilization must be positive");
    tau_interior_ = interior;
    tau_boundary_ = boundary;
}

} // namespace uhdg
