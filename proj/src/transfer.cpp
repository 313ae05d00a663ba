#include "uhdg/basis.hpp"
#include "uhdg/error.hpp"
#include "uhdg/mesh.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace uhdg {

namespace {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool proper_intersection(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double o1 = cross(b - a, c - a);
    const double o2 = cross(b - a, d - a);
    const double o3 = cross(d - c, a - c);
    const double o4 = cross(d - c, b - c);
    return o1 * o2 < 0.0 && o3 * o4 < 0.0;
}

constexpr int kPerpSamples = 32;

} // namespace

std::vector<TransferData> build_transfer_data(const Triangulation& mesh, const DomainBoundary& boundary,
                                              int quad_order)
{
    const SegmentRule& rule = segment_rule(quad_order);
    const auto& faces = mesh.faces();
    const auto& verts = mesh.vertices();
    std::vector<TransferData> out;
    out.reserve(mesh.boundary_faces().size());
    for (int fid : mesh.boundary_faces()) {
        const Face& f = faces[static_cast<std::size_t>(fid)];
        const Vec2& a = verts[static_cast<std::size_t>(f.vertices[0])];
        const Vec2& b = verts[static_cast<std::size_t>(f.vertices[1])];
        TransferData td;
        td.face = fid;
        td.element = f.elements[0];
        td.normal = f.normal;
        td.length = f.length;
        const double step = 0.1 * f.length;
        auto shoot = [&](const Vec2& x) {
            try {
                return anchor_point(boundary, x, f.normal, step);
            } catch (const NoIntersection& e) {
                throw NoIntersection("boundary face " + std::to_string(fid) + ": " + e.what());
            }
        };
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            TransferPoint tp;
            tp.s = rule.points[q] * f.length;
            tp.x = a + rule.points[q] * (b - a);
            tp.weight = rule.weights[q] * f.length;
            tp.anchor = shoot(tp.x);
            td.points.push_back(tp);
        }
        for (const Vec2& v : mesh.element_vertices(td.element))
            td.h_perp = std::max(td.h_perp, std::abs((v - a).dot(f.normal)));

        auto record = [&](const Vec2& x, const AnchorResult& r) {
            td.H_perp = std::max(td.H_perp, r.length * std::abs(r.direction.dot(f.normal)));
            td.d_loc = std::max(td.d_loc, r.length);
            if (r.length <= 0.0 || td.path_crosses_mesh)
                return;
            for (int g : mesh.boundary_faces()) {
                if (g == fid)
                    continue;
                const Face& o = faces[static_cast<std::size_t>(g)];
                const bool adjacent = o.vertices[0] == f.vertices[1] || o.vertices[1] == f.vertices[0];
                if (adjacent && ((x - a).norm() < 1e-12 * f.length || (x - b).norm() < 1e-12 * f.length))
                    continue;
                if (proper_intersection(x, r.anchor, verts[static_cast<std::size_t>(o.vertices[0])],
                                        verts[static_cast<std::size_t>(o.vertices[1])])) {
                    td.path_crosses_mesh = true;
                    return;
                }
            }
        };
        for (const TransferPoint& tp : td.points)
            record(tp.x, tp.anchor);
        for (int i = 0; i < kPerpSamples; ++i) {
            const Vec2 x = a + (static_cast<double>(i) / (kPerpSamples - 1)) * (b - a);
            record(x, shoot(x));
        }
        td.r_e = td.H_perp / td.h_perp;
        out.push_back(std::move(td));
    }
    return out;
}

double patch_area(const TransferData& face)
{
    double s = 0.0;
    for (const TransferPoint& p : face.points)
        s += p.weight * p.anchor.length;
    return s;
}

FaceConstants estimate_face_constants(const TransferData& face, const std::array<Vec2, 3>& element, int k)
{
    const ElementBasis eb(k, element);
    const int nb = eb.dim();
    const int n2 = 2 * nb;
    const Vec2& n = face.normal;

    // p_a . n for the [P_k]^2 basis: component c = a / nb, scalar index a % nb.
    Eigen::MatrixXd m_in = Eigen::MatrixXd::Zero(n2, n2);
    Eigen::MatrixXd k_in = Eigen::MatrixXd::Zero(n2, n2);
    Eigen::MatrixXd m_ext = Eigen::MatrixXd::Zero(n2, n2);
    Eigen::VectorXd phi(nb);
    Eigen::VectorXd dx(nb);
    Eigen::VectorXd dy(nb);
    Eigen::VectorXd pn(n2);
    Eigen::VectorXd dpn(n2);

    const TriangleRule& tq = triangle_rule(std::max(2 * k, 1));
    const double det = std::abs(eb.jacobian().determinant());
    for (std::size_t q = 0; q < tq.points.size(); ++q) {
        const Vec2 x = eb.to_physical(tq.points[q]);
        const double w = tq.weights[q] * det;
        eb.values(x, phi);
        eb.gradients(x, dx, dy);
        const Eigen::VectorXd dn = n.x() * dx + n.y() * dy;
        pn << n.x() * phi, n.y() * phi;
        dpn << n.x() * dn, n.y() * dn;
        m_in.noalias() += w * pn * pn.transpose();
        k_in.noalias() += w * dpn * dpn.transpose();
    }
    for_each_patch_point(face, 2 * k + 2, [&](const Vec2& x, double w, std::size_t) {
        eb.values(x, phi);
        pn << n.x() * phi, n.y() * phi;
        m_ext.noalias() += w * pn * pn.transpose();
    });

    // Deflate the structural null space of the normal-trace map.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_in);
    const double top = es.eigenvalues().maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < n2; ++i)
        if (es.eigenvalues()(i) > 1e-10 * top)
            keep.push_back(i);
    if (static_cast<int>(keep.size()) < nb)
        throw SingularGram("normal-trace Gram matrix is singular on boundary face " +
                           std::to_string(face.face));
    Eigen::MatrixXd z(n2, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        z.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(keep[i]);

    Eigen::MatrixXd b = z.transpose() * m_in * z;
    b += 1e-14 * b.trace() * Eigen::MatrixXd::Identity(b.rows(), b.cols());
    auto lambda_max = [&](const Eigen::MatrixXd& a) {
        if (a.norm() == 0.0)
            return 0.0;
        const Eigen::MatrixXd ar = z.transpose() * a * z;
        const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(0.5 * (ar + ar.transpose()), b);
        if (ge.info() != Eigen::Success)
            throw SingularGram("generalized eigenproblem failed on boundary face " + std::to_string(face.face));
        return std::max(0.0, ge.eigenvalues().maxCoeff());
    };

    FaceConstants c;
    c.C_ext = face.r_e > 0.0 ? std::sqrt(lambda_max(m_ext) / face.r_e) : 0.0;
    c.C_inv = face.h_perp * std::sqrt(lambda_max(k_in));
    return c;
}

AdmissibilityReport check_admissibility(const Triangulation& mesh, const std::vector<TransferData>& transfer,
                                        double kappa_lo, double kappa_hi, double tau_bar, int k, double c_prox)
{
    AdmissibilityReport r;
    r.beta = mesh.shape_regularity();
    r.h = mesh.mesh_size();
    r.k = k;
    r.kappa_lo = kappa_lo;
    r.kappa_hi = kappa_hi;
    r.tau_bar = tau_bar;
    r.c_prox = c_prox;
    const double s3_rhs = kappa_lo / (3.0 * tau_bar);
    for (const TransferData& td : transfer) {
        FaceAdmissibility fa;
        fa.face = td.face;
        fa.r_e = td.r_e;
        fa.H_perp = td.H_perp;
        fa.d_loc = td.d_loc;
        const FaceConstants fc = estimate_face_constants(td, mesh.element_vertices(td.element), k);
        fa.C_ext = fc.C_ext;
        fa.C_inv = fc.C_inv;
        fa.S3_ok = td.H_perp <= s3_rhs;
        fa.S3_margin = (s3_rhs - td.H_perp) / s3_rhs;
        if (td.r_e > 0.0) {
            const double lhs = kappa_hi / kappa_lo * std::pow(td.r_e, 3) * std::pow(fc.C_ext * fc.C_inv, 2);
            fa.S4_ok = lhs <= 1.0;
            fa.S4_margin = 1.0 - lhs;
        }
        fa.proximity_ok = td.d_loc <= c_prox * mesh.element_diameter(td.element);
        fa.path_crosses_mesh = td.path_crosses_mesh;
        r.R = std::max(r.R, td.r_e);
        if (td.path_crosses_mesh)
            ++r.path_crossings;
        r.overall_ok = r.overall_ok && fa.S3_ok && fa.S4_ok && fa.proximity_ok;
        r.per_face.push_back(fa);
    }
    return r;
}

AdmissibilityReport check_admissibility(const Triangulation& mesh, const DomainBoundary& boundary,
                                        double kappa_lo, double kappa_hi, double tau_bar, int k, double c_prox)
{
    return check_admissibility(mesh, build_transfer_data(mesh, boundary, 2 * k + 2), kappa_lo, kappa_hi,
                               tau_bar, k, c_prox);
}

void to_json(nlohmann::json& j, const AdmissibilityReport& r)
{
    nlohmann::json faces = nlohmann::json::array();
    for (const auto& f : r.per_face)
        faces.push_back({{"face", f.face},
                         {"r_e", f.r_e},
                         {"H_perp", f.H_perp},
                         {"d_loc", f.d_loc},
                         {"C_ext", f.C_ext},
                         {"C_inv", f.C_inv},
                         {"S3_ok", f.S3_ok},
                         {"S4_ok", f.S4_ok},
                         {"S3_margin", f.S3_margin},
                         {"S4_margin", f.S4_margin},
                         {"proximity_ok", f.proximity_ok},
                         {"path_crosses_mesh", f.path_crosses_mesh}});
    j = {{"beta", r.beta},       {"R", r.R},
         {"h", r.h},             {"k", r.k},
         {"kappa_lo", r.kappa_lo}, {"kappa_hi", r.kappa_hi},
         {"tau_bar", r.tau_bar}, {"c_prox", r.c_prox},
         {"path_crossings", r.path_crossings},
         {"overall_ok", r.overall_ok}, {"per_face", faces}};
}

} // namespace uhdg
