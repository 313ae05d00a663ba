#include "uhdg/verification.hpp"

#include "uhdg/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace uhdg {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using expr::Expr;

// -------------------------------------------------------- manufactured case

ManufacturedCase::ManufacturedCase(const Expr& u, KappaVariant variant, const Expr& kappa, const Expr& f0)
    : variant_(variant), u_(u), kappa_(kappa), f0_(f0)
{
    for (const std::string& v : u.free_variables())
        if (v != "x" && v != "y")
            throw ConfigError("exact solution uses unknown variable '" + v + "'");
    const Expr ux = expr::diff(u, "x");
    const Expr uy = expr::diff(u, "y");
    if (variant == KappaVariant::OfU)
        kappa_exact_ = expr::substitute(kappa, "u", u);
    else
        kappa_exact_ = expr::substitute(expr::substitute(kappa, "sx", ux), "sy", uy);
    const Expr qx = -(kappa_exact_ * ux);
    const Expr qy = -(kappa_exact_ * uy);
    const Expr dqxx = expr::diff(qx, "x");
    const Expr dqxy = expr::diff(qx, "y");
    const Expr dqyx = expr::diff(qy, "x");
    const Expr dqyy = expr::diff(qy, "y");
    fc_ = dqxx + dqyy - expr::substitute(f0, "u", u);
    source_ = f0 + fc_;

    const std::vector<std::string> xy{"x", "y"};
    u_c_ = expr::Compiled(u, xy);
    ux_c_ = expr::Compiled(ux, xy);
    uy_c_ = expr::Compiled(uy, xy);
    qx_c_ = expr::Compiled(qx, xy);
    qy_c_ = expr::Compiled(qy, xy);
    fc_c_ = expr::Compiled(fc_, xy);
    kappa_ex_c_ = expr::Compiled(kappa_exact_, xy);
    dq_c_ = {expr::Compiled(dqxx, xy), expr::Compiled(dqxy, xy), expr::Compiled(dqyx, xy),
             expr::Compiled(dqyy, xy)};
    const Expr uxy = expr::diff(ux, "y");
    hess_c_ = {expr::Compiled(expr::diff(ux, "x"), xy), expr::Compiled(uxy, xy), expr::Compiled(uxy, xy),
               expr::Compiled(expr::diff(uy, "y"), xy)};
}

Eigen::Matrix2d ManufacturedCase::grad_q(const Vec2& x) const
{
    Eigen::Matrix2d j;
    j << dq_c_[0]({x.x(), x.y()}), dq_c_[1]({x.x(), x.y()}), dq_c_[2]({x.x(), x.y()}), dq_c_[3]({x.x(), x.y()});
    return j;
}

Eigen::Matrix2d ManufacturedCase::hessian(const Vec2& x) const
{
    Eigen::Matrix2d j;
    j << hess_c_[0]({x.x(), x.y()}), hess_c_[1]({x.x(), x.y()}), hess_c_[2]({x.x(), x.y()}),
        hess_c_[3]({x.x(), x.y()});
    return j;
}

ProblemSpec ManufacturedCase::problem(int k, double kappa_lo, double kappa_hi) const
{
    return ProblemSpec(variant_, kappa_, source_, u_, kappa_lo, kappa_hi, k);
}

ManufacturedCase make_manufactured(const std::string& u_expr, KappaVariant variant, const std::string& kappa,
                                   const std::string& f0)
{
    return ManufacturedCase(expr::parse(u_expr), variant, expr::parse(kappa), expr::parse(f0));
}

// ------------------------------------------------------------------ errors

void to_json(nlohmann::json& j, const ErrorReport& r)
{
    j = {{"h", r.h},
         {"h_max", r.h_max},
         {"k", r.k},
         {"elements", r.elements},
         {"trace_dofs", r.trace_dofs},
         {"u_error", r.u_error},
         {"q_error", r.q_error},
         {"jump", r.jump},
         {"transfer_error", r.transfer_error},
         {"triple",
          {{"total", r.triple.total},
           {"sigma_part", r.triple.sigma_part},
           {"flux_part", r.triple.flux_part},
           {"jump_part", r.triple.jump_part},
           {"transfer_part", r.triple.transfer_part}}},
         {"lambda_q", r.lambda_q},
         {"lambda_u", r.lambda_u},
         {"eps_q", r.eps_q},
         {"eps_u", r.eps_u},
         {"eps_uhat", r.eps_uhat},
         {"I_q", r.I_q},
         {"I_u", r.I_u}};
    if (r.sigma_error) {
        j["sigma_error"] = *r.sigma_error;
        j["lambda_sigma"] = *r.lambda_sigma;
        j["eps_sigma"] = *r.eps_sigma;
        j["I_sigma"] = *r.I_sigma;
    }
}

std::array<double, 3> element_tau(const HdgSpace& space, const ProblemSpec& problem, int t)
{
    std::array<double, 3> tau{};
    const auto& ef = space.mesh().element_faces()[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i)
        tau[static_cast<std::size_t>(i)] =
            space.mesh().faces()[static_cast<std::size_t>(ef[static_cast<std::size_t>(i)])].is_boundary()
                ? problem.tau_boundary()
                : problem.tau_interior();
    return tau;
}

namespace {

Vec2 eval_vec(const ElementBasis& eb, const Eigen::Ref<const VectorXd>& c, const Vec2& x)
{
    const Eigen::Index nb = c.size() / 2;
    return {eb.eval(c.head(nb), x), eb.eval(c.tail(nb), x)};
}

Eigen::Matrix2d grad_vec(const ElementBasis& eb, const Eigen::Ref<const VectorXd>& c, const Vec2& x)
{
    const Eigen::Index nb = c.size() / 2;
    Eigen::Matrix2d j;
    j.row(0) = eb.grad(c.head(nb), x).transpose();
    j.row(1) = eb.grad(c.tail(nb), x).transpose();
    return j;
}

} // namespace

DiscreteSolution project_exact(const ManufacturedCase& mc, const ProblemSpec& problem, const HdgSpace& space)
{
    const int nb = space.nb();
    const int ne = space.mesh().num_elements();
    const bool grad = problem.variant() == KappaVariant::OfGrad;
    DiscreteSolution p;
    p.k = space.degree();
    p.q = MatrixXd::Zero(2 * nb, ne);
    p.u = MatrixXd::Zero(nb, ne);
    if (grad)
        p.sigma = MatrixXd::Zero(2 * nb, ne);
    const ScalarField u = [&](const Vec2& x) { return mc.u(x); };
    const VectorField q = [&](const Vec2& x) { return mc.q(x); };
    const VectorField ms = [&](const Vec2& x) { return Vec2(-mc.sigma(x)); };
    for (int t = 0; t < ne; ++t) {
        const auto tau = element_tau(space, problem, t);
        const ProjectedPair pq = hdg_project(space.element(t), q, u, tau);
        p.q.col(t) = pq.q;
        p.u.col(t) = pq.u;
        if (grad)
            p.sigma.col(t) = -hdg_project(space.element(t), ms, u, tau).q;
    }
    p.uhat = MatrixXd::Zero(space.nf(), space.mesh().num_faces());
    for (int f = 0; f < space.mesh().num_faces(); ++f)
        p.uhat.col(f) = face_l2_project(space.face(f), u);
    return p;
}

ErrorReport compute_errors(const ManufacturedCase& mc, const ProblemSpec& problem, const HdgSpace& space,
                           const DiscreteSolution& sol)
{
    const Triangulation& mesh = space.mesh();
    const int k = space.degree();
    const int order = std::min(2 * k + 4, kMaxQuadratureOrder);
    const bool grad = problem.variant() == KappaVariant::OfGrad;
    if (grad && !sol.has_sigma())
        throw ConfigError("gradient variant errors need sigma_h");

    const DiscreteSolution P = project_exact(mc, problem, space);
    const FrozenFields fr(space, problem, sol.u, grad ? sol.sigma : MatrixXd());

    ErrorReport r;
    r.h = mesh.mean_diameter();
    r.h_max = mesh.mesh_size();
    r.k = k;
    r.elements = mesh.num_elements();
    r.trace_dofs = space.num_trace_dofs();
    double e_sigma = 0.0;
    double i_sigma = 0.0;
    double eps_sigma = 0.0;

    const TriangleRule& tq = triangle_rule(order);
    const SegmentRule& sq = segment_rule(order);
    for (int t = 0; t < mesh.num_elements(); ++t) {
        const ElementBasis& eb = space.element(t);
        const double det = 2.0 * eb.area();
        for (std::size_t i = 0; i < tq.points.size(); ++i) {
            const Vec2 x = eb.to_physical(tq.points[i]);
            const double w = tq.weights[i] * det;
            const double ue = mc.u(x);
            const Vec2 qe = mc.q(x);
            const double uh = eb.eval(sol.u.col(t), x);
            const Vec2 qh = eval_vec(eb, sol.q.col(t), x);
            const double pu = eb.eval(P.u.col(t), x);
            const Vec2 pq = eval_vec(eb, P.q.col(t), x);
            r.u_error += w * std::pow(ue - uh, 2);
            r.q_error += w * (qe - qh).squaredNorm();
            r.I_u += w * std::pow(ue - pu, 2);
            r.I_q += w * (qe - pq).squaredNorm();
            r.eps_u += w * std::pow(pu - uh, 2);
            r.eps_q += w * (pq - qh).squaredNorm();
            const double kap = fr.kappa_at(t, x);
            if (grad) {
                const Vec2 se = mc.sigma(x);
                const Vec2 sh = eval_vec(eb, sol.sigma.col(t), x);
                const Vec2 ps = eval_vec(eb, P.sigma.col(t), x);
                e_sigma += w * (se - sh).squaredNorm();
                i_sigma += w * (se - ps).squaredNorm();
                eps_sigma += w * (ps - sh).squaredNorm();
                r.triple.flux_part += w * kap * (pq - qh).squaredNorm();
            } else {
                r.triple.flux_part += w * (pq - qh).squaredNorm() / kap;
            }
        }
        const auto& ef = mesh.element_faces()[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            const int fid = ef[static_cast<std::size_t>(i)];
            const FaceBasis& fb = space.face(fid);
            const double tau = fr.tau(fid);
            for (std::size_t j = 0; j < sq.points.size(); ++j) {
                const double s = sq.points[j] * fb.length();
                const double w = sq.weights[j] * fb.length();
                const Vec2 x = fb.point_at(s);
                const double uh = eb.eval(sol.u.col(t), x);
                const double uhat = fb.eval(sol.uhat.col(fid), s);
                r.jump += w * tau * std::pow(uh - uhat, 2);
                const double eu = eb.eval(P.u.col(t), x) - uh;
                const double euhat = fb.eval(P.uhat.col(fid), s) - uhat;
                r.triple.jump_part += w * tau * std::pow(eu - euhat, 2);
            }
        }
    }
    for (int f = 0; f < mesh.num_faces(); ++f)
        r.eps_uhat += (P.uhat.col(f) - sol.uhat.col(f)).squaredNorm();

    double lq_patch = 0.0;
    double lq_face = 0.0;
    double lu_face = 0.0;
    double ls_patch = 0.0;
    double ls_face = 0.0;
    const SegmentRule& path = segment_rule(order);
    for (const TransferData& td : space.transfer()) {
        const int t = td.element;
        const ElementBasis& eb = space.element(t);
        const FaceBasis& fb = space.face(td.face);
        const Vec2& n = td.normal;
        const double hp = td.h_perp;
        for (std::size_t j = 0; j < sq.points.size(); ++j) {
            const double s = sq.points[j] * fb.length();
            const double w = sq.weights[j] * fb.length();
            const Vec2 x = fb.point_at(s);
            lu_face += w * hp * std::pow(mc.u(x) - eb.eval(P.u.col(t), x), 2);
            lq_face += w * hp * std::pow((mc.q(x) - eval_vec(eb, P.q.col(t), x)).dot(n), 2);
            if (grad)
                ls_face += w * hp * std::pow((mc.sigma(x) - eval_vec(eb, P.sigma.col(t), x)).dot(n), 2);
        }
        for_each_patch_point(td, order, [&](const Vec2& y, double w, std::size_t) {
            const Eigen::Matrix2d dq = mc.grad_q(y) - grad_vec(eb, P.q.col(t), y);
            lq_patch += w * std::pow(hp * n.dot(dq * n), 2);
            if (grad) {
                const Eigen::Matrix2d ds = mc.hessian(y) - grad_vec(eb, P.sigma.col(t), y);
                ls_patch += w * std::pow(hp * n.dot(ds * n), 2);
            }
        });
        for (const TransferPoint& tp : td.points) {
            const double l = tp.anchor.length;
            if (l <= 0.0)
                continue;
            const Vec2& d = tp.anchor.direction;
            double phi = 0.0;
            double phi_h = 0.0;
            for (std::size_t j = 0; j < path.points.size(); ++j) {
                const Vec2 y = tp.x + (path.points[j] * l) * d;
                const double w = path.weights[j] * l;
                phi += w * mc.q(y).dot(d) / mc.kappa_exact(y);
                phi_h += w * fr.kappa_inv_at(t, y) * eval_vec(eb, sol.q.col(t), y).dot(d);
            }
            r.triple.transfer_part += tp.weight * fr.kappa_at(t, tp.x) / l * std::pow(phi - phi_h, 2);
        }
    }

    r.transfer_error = std::sqrt(r.triple.transfer_part);
    r.lambda_q = std::sqrt(r.I_q + lq_patch + lq_face);
    r.lambda_u = std::sqrt(r.I_u + lu_face);
    r.u_error = std::sqrt(r.u_error);
    r.q_error = std::sqrt(r.q_error);
    r.I_u = std::sqrt(r.I_u);
    r.I_q = std::sqrt(r.I_q);
    r.eps_u = std::sqrt(r.eps_u);
    r.eps_q = std::sqrt(r.eps_q);
    r.eps_uhat = std::sqrt(r.eps_uhat);
    r.jump = std::sqrt(r.jump);
    if (grad) {
        r.sigma_error = std::sqrt(e_sigma);
        r.I_sigma = std::sqrt(i_sigma);
        r.eps_sigma = std::sqrt(eps_sigma);
        r.lambda_sigma = std::sqrt(i_sigma + ls_patch + ls_face);
        r.triple.sigma_part = eps_sigma;
    }
    r.triple.total = r.triple.recomputed();
    return r;
}

// --------------------------------------------------------------------- EOC

std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& h)
{
    if (errors.size() != h.size() || errors.size() < 2)
        throw ConfigError("convergence rates need at least two meshes");
    for (std::size_t i = 1; i < h.size(); ++i)
        if (!(h[i] < h[i - 1]))
            throw ConfigError("mesh sizes must strictly decrease");
    for (double e : errors)
        if (!(e > kMachineZeroError))
            throw ZeroError("error at machine zero; the rate is undefined (solution reproduced exactly)");
    std::vector<double> rates;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        rates.push_back(std::log(errors[i] / errors[i + 1]) / std::log(h[i] / h[i + 1]));
    return rates;
}

EocTable eoc_table(const std::vector<ErrorReport>& reports)
{
    EocTable t;
    if (reports.empty())
        return t;
    const bool grad = reports.front().sigma_error.has_value();
    t.norms = {"u", "q"};
    if (grad)
        t.norms.emplace_back("sigma");
    for (const char* n : {"jump", "transfer", "triple", "lambda_q", "lambda_u"})
        t.norms.emplace_back(n);
    if (grad)
        t.norms.emplace_back("lambda_sigma");
    auto value = [](const ErrorReport& r, const std::string& n) {
        if (n == "u")
            return r.u_error;
        if (n == "q")
            return r.q_error;
        if (n == "sigma")
            return r.sigma_error.value_or(0.0);
        if (n == "jump")
            return r.jump;
        if (n == "transfer")
            return r.transfer_error;
        if (n == "triple")
            return r.triple.total;
        if (n == "lambda_q")
            return r.lambda_q;
        if (n == "lambda_u")
            return r.lambda_u;
        return r.lambda_sigma.value_or(0.0);
    };
    for (const ErrorReport& r : reports) {
        t.h.push_back(r.h);
        t.dofs.push_back(r.trace_dofs);
    }
    for (const std::string& n : t.norms) {
        std::vector<double> v;
        for (const ErrorReport& r : reports)
            v.push_back(value(r, n));
        std::vector<double> rates;
        std::vector<bool> exact;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            try {
                rates.push_back(eoc({v[i], v[i + 1]}, {t.h[i], t.h[i + 1]}).front());
                exact.push_back(false);
            } catch (const ZeroError&) {
                rates.push_back(std::numeric_limits<double>::quiet_NaN());
                exact.push_back(true);
            }
        }
        t.values.push_back(std::move(v));
        t.rates.push_back(std::move(rates));
        t.exact.push_back(std::move(exact));
    }
    return t;
}

std::optional<double> finest_rate(const EocTable& t, const std::string& norm)
{
    for (std::size_t i = 0; i < t.norms.size(); ++i)
        if (t.norms[i] == norm && !t.rates[i].empty() && !t.exact[i].back())
            return t.rates[i].back();
    return std::nullopt;
}

namespace {

void write_header(std::ostream& os, const std::string& header)
{
    std::istringstream is(header);
    std::string line;
    while (std::getline(is, line))
        os << "# " << line << '\n';
}

} // namespace

void write_csv(std::ostream& os, const EocTable& t, const std::string& header)
{
    write_header(os, header);
    const auto prec = os.precision(10);
    os << "h,dofs";
    for (const std::string& n : t.norms)
        os << ',' << n << ",rate_" << n;
    os << '\n';
    for (std::size_t m = 0; m < t.h.size(); ++m) {
        os << t.h[m] << ',' << t.dofs[m];
        for (std::size_t i = 0; i < t.norms.size(); ++i) {
            os << ',' << t.values[i][m] << ',';
            if (m > 0) {
                if (t.exact[i][m - 1])
                    os << "exact";
                else
                    os << t.rates[i][m - 1];
            }
        }
        os << '\n';
    }
    os.precision(prec);
}

void to_json(nlohmann::json& j, const EocTable& t)
{
    j = nlohmann::json::object();
    j["h"] = t.h;
    j["dofs"] = t.dofs;
    nlohmann::json norms = nlohmann::json::object();
    for (std::size_t i = 0; i < t.norms.size(); ++i) {
        nlohmann::json rates = nlohmann::json::array();
        for (std::size_t p = 0; p < t.rates[i].size(); ++p) {
            if (t.exact[i][p])
                rates.push_back("exact");
            else
                rates.push_back(t.rates[i][p]);
        }
        norms[t.norms[i]] = {{"values", t.values[i]}, {"rates", rates}};
    }
    j["norms"] = norms;
}

void write_gnuplot(const std::string& prefix, const EocTable& t, const std::string& header)
{
    for (std::size_t i = 0; i < t.norms.size(); ++i) {
        const std::string path = prefix + t.norms[i] + ".dat";
        std::ofstream os(path);
        if (!os)
            throw ConfigError("cannot write " + path);
        write_header(os, header);
        os << "# h " << t.norms[i] << '\n';
        os.precision(17);
        for (std::size_t m = 0; m < t.h.size(); ++m)
            os << t.h[m] << ' ' << t.values[i][m] << '\n';
    }
}

// ------------------------------------------------------------------- delta

DeltaDiagnostic delta_diagnostic(const TransferData& face, const ElementBasis& element, const VectorXd& v,
                                 const FaceConstants& c)
{
    const int k = element.degree();
    const SegmentRule& path = segment_rule(2 * k + 2);
    const Vec2& n = face.normal;
    DeltaDiagnostic d;
    double s2 = 0.0;
    for (const TransferPoint& tp : face.points) {
        const double l = tp.anchor.length;
        if (l <= 0.0)
            continue;
        const double v0 = eval_vec(element, v, tp.x).dot(n);
        double avg = 0.0;
        for (std::size_t j = 0; j < path.points.size(); ++j) {
            const Vec2 y = tp.x + (path.points[j] * l) * n;
            avg += path.weights[j] * (eval_vec(element, v, y).dot(n) - v0);
        }
        s2 += tp.weight * l * avg * avg;
    }
    d.norm = std::sqrt(s2);
    d.v_norm = v.norm();
    d.bound = std::pow(face.r_e, 1.5) * c.C_ext * c.C_inv * d.v_norm / std::sqrt(3.0);
    d.slack = d.bound - d.norm;
    return d;
}

DeltaDiagnostic delta_diagnostic(const TransferData& face, const ElementBasis& element, const VectorXd& v)
{
    return delta_diagnostic(face, element, v, estimate_face_constants(face, element.vertices(), element.degree()));
}

} // namespace uhdg
