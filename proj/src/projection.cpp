#include "uhdg/projection.hpp"

#include "uhdg/error.hpp"
#include "uhdg/quadrature.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace uhdg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct FaceGeom {
    Vec2 a;
    Vec2 b;
    Vec2 n;
};

std::array<FaceGeom, 3> element_faces(const ElementBasis& eb)
{
    std::array<FaceGeom, 3> out;
    const auto& v = eb.vertices();
    for (int i = 0; i < 3; ++i) {
        FaceGeom& f = out[static_cast<std::size_t>(i)];
        f.a = v[static_cast<std::size_t>(i)];
        f.b = v[static_cast<std::size_t>((i + 1) % 3)];
        const Vec2 d = f.b - f.a;
        f.n = Vec2(d.y(), -d.x()).normalized();
        const Vec2 opp = v[static_cast<std::size_t>((i + 2) % 3)];
        if (f.n.dot(opp - f.a) > 0.0)
            f.n = -f.n;
    }
    return out;
}

// Rows of the projection system for given element coefficients (Pq, Pu):
// volume moments against P_{k-1} followed by face moments against P_k(F).
struct ProjectionOperator {
    MatrixXd A;
    VectorXd b;
};

ProjectionOperator build(const ElementBasis& eb, const VectorField& q, const ScalarField& u,
                         const std::array<double, 3>& tau, int order)
{
    const int k = eb.degree();
    const int nb = eb.dim();
    const int nl = k > 0 ? poly_dim(k - 1) : 0;
    const int nf = k + 1;
    const int n = 3 * nb;
    ProjectionOperator op;
    op.A = MatrixXd::Zero(n, n);
    op.b = VectorXd::Zero(n);
    VectorXd phi(nb);

    const TriangleRule& tq = triangle_rule(std::min(order, kMaxQuadratureOrder));
    const double det = 2.0 * eb.area();
    for (std::size_t i = 0; i < tq.points.size(); ++i) {
        const Vec2 x = eb.to_physical(tq.points[i]);
        const double w = tq.weights[i] * det;
        eb.values(x, phi);
        const Vec2 qv = q(x);
        const double uv = u(x);
        for (int r = 0; r < nl; ++r) {
            for (int j = 0; j < nb; ++j) {
                const double m = w * phi(r) * phi(j);
                op.A(r, j) += m;
                op.A(nl + r, nb + j) += m;
                op.A(2 * nl + r, 2 * nb + j) += m;
            }
            op.b(r) += w * qv.x() * phi(r);
            op.b(nl + r) += w * qv.y() * phi(r);
            op.b(2 * nl + r) += w * uv * phi(r);
        }
    }

    const SegmentRule sq = gauss_segment(order / 2 + 1);
    const auto faces = element_faces(eb);
    VectorXd psi(nf);
    for (int f = 0; f < 3; ++f) {
        const FaceGeom& g = faces[static_cast<std::size_t>(f)];
        const FaceBasis fb(k, g.a, g.b);
        const double t = tau[static_cast<std::size_t>(f)];
        const int row0 = 3 * nl + f * nf;
        for (std::size_t i = 0; i < sq.points.size(); ++i) {
            const double s = sq.points[i] * fb.length();
            const double w = sq.weights[i] * fb.length();
            const Vec2 x = fb.point_at(s);
            eb.values(x, phi);
            fb.values_at(s, psi);
            const double rhs = q(x).dot(g.n) + t * u(x);
            for (int m = 0; m < nf; ++m) {
                for (int j = 0; j < nb; ++j) {
                    op.A(row0 + m, j) += w * psi(m) * g.n.x() * phi(j);
                    op.A(row0 + m, nb + j) += w * psi(m) * g.n.y() * phi(j);
                    op.A(row0 + m, 2 * nb + j) += w * psi(m) * t * phi(j);
                }
                op.b(row0 + m) += w * psi(m) * rhs;
            }
        }
    }
    return op;
}

int default_order(const ElementBasis& eb, int order) { return order < 0 ? 2 * eb.degree() + 6 : order; }

} // namespace

ProjectedPair hdg_project(const ElementBasis& element, const VectorField& q, const ScalarField& u,
                          const std::array<double, 3>& tau, int quad_order)
{
    const double tmax = std::max({tau[0], tau[1], tau[2]});
    if (!(tmax > 0.0))
        throw SingularProjection("stabilization vanishes on every face of the element");
    const ProjectionOperator op = build(element, q, u, tau, default_order(element, quad_order));
    const Eigen::FullPivLU<MatrixXd> lu(op.A);
    if (!lu.isInvertible())
        throw SingularProjection("projection system is singular");
    const VectorXd x = lu.solve(op.b);
    const int nb = element.dim();
    return {x.head(2 * nb), x.tail(nb)};
}

ProjectionResiduals projection_residuals(const ElementBasis& element, const VectorField& q, const ScalarField& u,
                                         const std::array<double, 3>& tau, const ProjectedPair& pair,
                                         int quad_order)
{
    const ProjectionOperator op = build(element, q, u, tau, default_order(element, quad_order));
    const int nb = element.dim();
    const int k = element.degree();
    const int nl = k > 0 ? poly_dim(k - 1) : 0;
    VectorXd x(3 * nb);
    x << pair.q, pair.u;
    const VectorXd r = (op.A * x - op.b).cwiseAbs();
    ProjectionResiduals res;
    if (nl > 0) {
        res.volume_q = r.head(2 * nl).maxCoeff();
        res.volume_u = r.segment(2 * nl, nl).maxCoeff();
    }
    res.face = r.tail(3 * (k + 1)).maxCoeff();
    return res;
}

VectorXd face_l2_project(const FaceBasis& face, const ScalarField& trace, int quad_order)
{
    const int k = face.degree();
    const int order = quad_order < 0 ? 2 * k + 8 : quad_order;
    const SegmentRule sq = gauss_segment(order / 2 + 1);
    VectorXd c = VectorXd::Zero(k + 1);
    VectorXd psi(k + 1);
    for (std::size_t i = 0; i < sq.points.size(); ++i) {
        const double s = sq.points[i] * face.length();
        face.values_at(s, psi);
        c += sq.weights[i] * face.length() * trace(face.point_at(s)) * psi;
    }
    return c;
}

} // namespace uhdg
