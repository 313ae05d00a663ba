#pragma once

// Manufactured solutions, discrete error norms, projection-based error
// splitting, convergence rates and the path-average diagnostic.

#include "uhdg/expression.hpp"
#include "uhdg/hdg_core.hpp"
#include "uhdg/projection.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uhdg {

/// Exact solution u with q = -kappa grad u, sigma = grad u and the
/// compensating source f_c such that -div(kappa grad u) = f0(u) + f_c.
class ManufacturedCase {
public:
    ManufacturedCase(const expr::Expr& u, KappaVariant variant, const expr::Expr& kappa, const expr::Expr& f0);

    [[nodiscard]] KappaVariant variant() const { return variant_; }
    [[nodiscard]] const expr::Expr& u_expr() const { return u_; }
    [[nodiscard]] const expr::Expr& kappa_expr() const { return kappa_; }
    [[nodiscard]] const expr::Expr& f0_expr() const { return f0_; }
    [[nodiscard]] const expr::Expr& fc_expr() const { return fc_; }
    /// f0(x, y, u) + f_c(x, y).
    [[nodiscard]] const expr::Expr& source_expr() const { return source_; }
    /// kappa along the exact solution, in x and y.
    [[nodiscard]] const expr::Expr& kappa_exact_expr() const { return kappa_exact_; }

    [[nodiscard]] double u(const Vec2& x) const { return u_c_({x.x(), x.y()}); }
    [[nodiscard]] Vec2 q(const Vec2& x) const { return {qx_c_({x.x(), x.y()}), qy_c_({x.x(), x.y()})}; }
    [[nodiscard]] Vec2 sigma(const Vec2& x) const { return {ux_c_({x.x(), x.y()}), uy_c_({x.x(), x.y()})}; }
    /// J(i, j) = d q_i / d x_j.
    [[nodiscard]] Eigen::Matrix2d grad_q(const Vec2& x) const;
    [[nodiscard]] Eigen::Matrix2d hessian(const Vec2& x) const;
    [[nodiscard]] double kappa_exact(const Vec2& x) const { return kappa_ex_c_({x.x(), x.y()}); }
    [[nodiscard]] double fc(const Vec2& x) const { return fc_c_({x.x(), x.y()}); }

    [[nodiscard]] ProblemSpec problem(int k, double kappa_lo, double kappa_hi) const;

private:
    KappaVariant variant_;
    expr::Expr u_, kappa_, f0_, fc_, source_, kappa_exact_;
    expr::Compiled u_c_, ux_c_, uy_c_, qx_c_, qy_c_, fc_c_, kappa_ex_c_;
    std::array<expr::Compiled, 4> dq_c_;
    std::array<expr::Compiled, 4> hess_c_;
};

/// Throws NonDifferentiable, ParseError or ConfigError.
ManufacturedCase make_manufactured(const std::string& u_expr, KappaVariant variant, const std::string& kappa,
                                   const std::string& f0 = "0");

struct TripleNorm {
    double sigma_part = 0.0;    ///< squared, gradient variant only
    double flux_part = 0.0;     ///< squared
    double jump_part = 0.0;     ///< squared
    double transfer_part = 0.0; ///< squared
    double total = 0.0;
    [[nodiscard]] double recomputed() const
    {
        return std::sqrt(sigma_part + flux_part + jump_part + transfer_part);
    }
};

struct ErrorReport {
    double h = 0.0;     ///< mean element diameter, the abscissa of convergence rates
    double h_max = 0.0; ///< largest element diameter
    int k = 0;
    int elements = 0;
    int trace_dofs = 0;
    double u_error = 0.0;
    double q_error = 0.0;
    std::optional<double> sigma_error;
    double jump = 0.0;           ///< ||tau^{1/2}(u_h - uhat_h)|| over all element boundaries
    double transfer_error = 0.0; ///< ||kappa^{1/2} l^{-1/2}(phi - phi_h)|| on the polygon boundary
    TripleNorm triple;
    double lambda_q = 0.0;
    double lambda_u = 0.0;
    std::optional<double> lambda_sigma;
    // projection minus discrete
    double eps_q = 0.0;
    double eps_u = 0.0;
    double eps_uhat = 0.0;
    std::optional<double> eps_sigma;
    // exact minus projection
    double I_q = 0.0;
    double I_u = 0.0;
    std::optional<double> I_sigma;
};

void to_json(nlohmann::json& j, const ErrorReport& r);

/// Stabilization of the local faces of element t, in local face order.
std::array<double, 3> element_tau(const HdgSpace& space, const ProblemSpec& problem, int t);

/// HDG projection of the exact fields on every element: q, u and, for the
/// gradient variant, sigma (projected as minus the flux part of Pi(-sigma, u)).
DiscreteSolution project_exact(const ManufacturedCase& mc, const ProblemSpec& problem, const HdgSpace& space);

ErrorReport compute_errors(const ManufacturedCase& mc, const ProblemSpec& problem, const HdgSpace& space,
                           const DiscreteSolution& sol);

/// rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}). Throws ZeroError when an
/// error is at machine zero and ConfigError unless h strictly decreases.
std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& h);

/// Errors at or below this value count as exact.
inline constexpr double kMachineZeroError = 1e-14;

struct EocTable {
    std::vector<std::string> norms;
    std::vector<double> h;
    std::vector<int> dofs;
    std::vector<std::vector<double>> values; ///< [norm][mesh]
    std::vector<std::vector<double>> rates;  ///< [norm][pair], NaN where exact
    std::vector<std::vector<bool>> exact;    ///< [norm][pair]
};

EocTable eoc_table(const std::vector<ErrorReport>& reports);
/// Rate of a named norm on the finest pair, nullopt when exact or absent.
std::optional<double> finest_rate(const EocTable& t, const std::string& norm);

/// Header lines are prefixed with "# ".
void write_csv(std::ostream& os, const EocTable& t, const std::string& header);
void to_json(nlohmann::json& j, const EocTable& t);
/// One "h value" file per norm, named <prefix><norm>.dat.
void write_gnuplot(const std::string& prefix, const EocTable& t, const std::string& header);

struct DeltaDiagnostic {
    double norm = 0.0;  ///< ||l^{1/2} delta_v|| on the face
    double bound = 0.0; ///< r_e^{3/2} C_ext C_inv ||v|| / sqrt(3)
    double slack = 0.0; ///< bound - norm
    double v_norm = 0.0;
    [[nodiscard]] bool holds() const { return slack >= 0.0; }
};

/// delta_v(x) = (1/l) int_0^l (v(x + s n) - v(x)).n ds with v a vector
/// polynomial (2 nb coefficients) on the face's element; zero where l = 0.
DeltaDiagnostic delta_diagnostic(const TransferData& face, const ElementBasis& element, const Eigen::VectorXd& v,
                                 const FaceConstants& constants);
DeltaDiagnostic delta_diagnostic(const TransferData& face, const ElementBasis& element, const Eigen::VectorXd& v);

} // namespace uhdg
