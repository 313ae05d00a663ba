#pragma once

// Quasilinear Dirichlet problem -div(kappa grad u) = f(u) in the physical
// domain, u = g on its boundary.

#include "uhdg/expression.hpp"
#include "uhdg/geometry.hpp"

#include <optional>
#include <string>

namespace uhdg {

enum class KappaVariant {
    OfU,    ///< kappa depends on u
    OfGrad, ///< kappa depends on grad u
};

struct LipschitzData {
    std::optional<double> L_f;       ///< source
    std::optional<double> L_kappa;   ///< diffusion coefficient
    std::optional<double> L_hat;     ///< transfer term
    std::optional<double> L_tilde;   ///< vector counterpart
};

/// Expressions are in the variables x, y, u and, for the gradient variant,
/// sx, sy (components of grad u).
class ProblemSpec {
public:
    ProblemSpec(KappaVariant variant, const std::string& kappa, const std::string& source,
                const std::string& dirichlet, double kappa_lo, double kappa_hi, int k);
    ProblemSpec(KappaVariant variant, const expr::Expr& kappa, const expr::Expr& source,
                const expr::Expr& dirichlet, double kappa_lo, double kappa_hi, int k);

    /// Bounds taken from a constant kappa; throws ConfigError otherwise.
    static ProblemSpec with_constant_kappa(KappaVariant variant, double kappa, const std::string& source,
                                           const std::string& dirichlet, int k);

    [[nodiscard]] KappaVariant variant() const { return variant_; }
    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] double kappa_lo() const { return kappa_lo_; }
    [[nodiscard]] double kappa_hi() const { return kappa_hi_; }
    [[nodiscard]] double tau_interior() const { return tau_interior_; }
    [[nodiscard]] double tau_boundary() const { return tau_boundary_; }
    [[nodiscard]] double tau_bar() const { return std::max(tau_interior_, tau_boundary_); }
    [[nodiscard]] bool kappa_is_constant() const { return kappa_.is_constant(); }
    [[nodiscard]] bool source_depends_on_u() const { return source_.depends_on("u"); }

    void set_tau(double interior, double boundary);
    LipschitzData lipschitz;

    [[nodiscard]] const expr::Expr& kappa_expr() const { return kappa_; }
    [[nodiscard]] const expr::Expr& source_expr() const { return source_; }
    [[nodiscard]] const expr::Expr& dirichlet_expr() const { return dirichlet_; }

    /// Unclamped kappa.
    [[nodiscard]] double kappa(const Vec2& x, double u, const Vec2& grad) const
    {
        return kappa_c_({x.x(), x.y(), u, grad.x(), grad.y()});
    }
    [[nodiscard]] double source(const Vec2& x, double u) const { return source_c_({x.x(), x.y(), u}); }
    [[nodiscard]] double dirichlet(const Vec2& x) const { return dirichlet_c_({x.x(), x.y()}); }

private:
    KappaVariant variant_;
    expr::Expr kappa_;
    expr::Expr source_;
    expr::Expr dirichlet_;
    expr::Compiled kappa_c_;
    expr::Compiled source_c_;
    expr::Compiled dirichlet_c_;
    double kappa_lo_;
    double kappa_hi_;
    double tau_interior_ = 1.0;
    double tau_boundary_ = 1.0;
    int k_;
};

} // namespace uhdg
