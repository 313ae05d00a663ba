#include "uhdg/hdg_core.hpp"

#include "uhdg/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <ostream>
#include <string>

namespace uhdg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- HdgSpace

HdgSpace::HdgSpace(Triangulation mesh, std::vector<TransferData> transfer, int k)
    : mesh_(std::move(mesh)), transfer_(std::move(transfer)), k_(k)
{
    init();
}

HdgSpace::HdgSpace(Triangulation mesh, const DomainBoundary& boundary, int k) : mesh_(std::move(mesh)), k_(k)
{
    if (k < 0 || k > kMaxBasisDegree)
        throw UnsupportedOrder("polynomial degree " + std::to_string(k) + " is not supported");
    transfer_ = build_transfer_data(mesh_, boundary, 2 * k + 3);
    init();
}

void HdgSpace::init()
{
    if (k_ < 0 || k_ > kMaxBasisDegree)
        throw UnsupportedOrder("polynomial degree " + std::to_string(k_) + " is not supported");
    elements_.reserve(static_cast<std::size_t>(mesh_.num_elements()));
    for (int t = 0; t < mesh_.num_elements(); ++t)
        elements_.emplace_back(k_, mesh_.element_vertices(t));
    const auto& verts = mesh_.vertices();
    faces_.reserve(mesh_.faces().size());
    for (const Face& f : mesh_.faces())
        faces_.emplace_back(k_, verts[static_cast<std::size_t>(f.vertices[0])],
                            verts[static_cast<std::size_t>(f.vertices[1])]);
    transfer_index_.assign(mesh_.faces().size(), -1);
    for (std::size_t i = 0; i < transfer_.size(); ++i) {
        const int f = transfer_[i].face;
        if (f < 0 || f >= mesh_.num_faces() || !mesh_.faces()[static_cast<std::size_t>(f)].is_boundary())
            throw MeshFormatError("transfer data refer to face " + std::to_string(f) +
                                  ", which is not a boundary face");
        transfer_index_[static_cast<std::size_t>(f)] = static_cast<int>(i);
    }
    for (int f : mesh_.boundary_faces())
        if (transfer_index_[static_cast<std::size_t>(f)] < 0)
            throw MeshFormatError("boundary face " + std::to_string(f) + " has no transfer data");
}

const TransferData* HdgSpace::transfer_of(int f) const
{
    const int i = transfer_index_[static_cast<std::size_t>(f)];
    return i < 0 ? nullptr : &transfer_[static_cast<std::size_t>(i)];
}

// ------------------------------------------------------------ FrozenFields

FrozenFields::FrozenFields(const HdgSpace& space, const ProblemSpec& problem, MatrixXd zeta, MatrixXd eta)
    : space_(&space), problem_(&problem), zeta_(std::move(zeta)), eta_(std::move(eta))
{
    const Eigen::Index ne = space.mesh().num_elements();
    if (zeta_.size() > 0 && (zeta_.rows() != space.nb() || zeta_.cols() != ne))
        throw ConfigError("scalar iterate has the wrong shape");
    if (eta_.size() > 0 && (eta_.rows() != 2 * space.nb() || eta_.cols() != ne))
        throw ConfigError("gradient iterate has the wrong shape");
    if (problem.degree() != space.degree())
        throw ConfigError("problem and discretization degrees differ");
}

double FrozenFields::zeta_at(int t, const Vec2& p) const
{
    if (zeta_.size() == 0)
        return 0.0;
    return space_->element(t).eval(zeta_.col(t), p);
}

Vec2 FrozenFields::eta_at(int t, const Vec2& p) const
{
    if (eta_.size() == 0)
        return Vec2::Zero();
    const int nb = space_->nb();
    const ElementBasis& eb = space_->element(t);
    return {eb.eval(eta_.col(t).head(nb), p), eb.eval(eta_.col(t).tail(nb), p)};
}

double FrozenFields::kappa_at(int t, const Vec2& p) const
{
    const bool grad = problem_->variant() == KappaVariant::OfGrad;
    const double k = problem_->kappa(p, grad ? 0.0 : zeta_at(t, p), grad ? eta_at(t, p) : Vec2::Zero());
    if (!std::isfinite(k))
        throw SolverFailure("kappa is not finite on element " + std::to_string(t));
    if (k < problem_->kappa_lo()) {
        ++clamps_;
        return problem_->kappa_lo();
    }
    if (k > problem_->kappa_hi()) {
        ++clamps_;
        return problem_->kappa_hi();
    }
    return k;
}

double FrozenFields::source_at(int t, const Vec2& p) const
{
    const double f = problem_->source(p, zeta_at(t, p));
    if (!std::isfinite(f))
        throw SolverFailure("source is not finite on element " + std::to_string(t));
    return f;
}

double FrozenFields::tau(int face) const
{
    return space_->mesh().faces()[static_cast<std::size_t>(face)].is_boundary() ? problem_->tau_boundary()
                                                                               : problem_->tau_interior();
}

// ---------------------------------------------------------- local systems

namespace {

struct ElementIntegrals {
    MatrixXd weighted; ///< nb x nb, kappa^{-1} or kappa weighted mass
    MatrixXd mass;     ///< nb x nb
    MatrixXd B;        ///< 2nb x nb: -(u, div v)
    MatrixXd C;        ///< nb x 2nb: -(q, grad w) + <q.n, w>
    MatrixXd D;        ///< nb x nb: <tau u, w>
    MatrixXd E;        ///< 2nb x 3nf: <uhat, v.n>
    MatrixXd G;        ///< nb x 3nf: -<tau uhat, w>
    VectorXd F;        ///< (f, w)
    std::array<double, 3> tau{};
};

ElementIntegrals integrate(const HdgSpace& space, int t, const FrozenFields& frozen, bool inverse_weight)
{
    const int nb = space.nb();
    const int nf = space.nf();
    const ElementBasis& eb = space.element(t);
    ElementIntegrals I;
    I.weighted = MatrixXd::Zero(nb, nb);
    I.mass = MatrixXd::Zero(nb, nb);
    I.B = MatrixXd::Zero(2 * nb, nb);
    I.C = MatrixXd::Zero(nb, 2 * nb);
    I.D = MatrixXd::Zero(nb, nb);
    I.E = MatrixXd::Zero(2 * nb, 3 * nf);
    I.G = MatrixXd::Zero(nb, 3 * nf);
    I.F = VectorXd::Zero(nb);

    VectorXd phi(nb);
    VectorXd dx(nb);
    VectorXd dy(nb);
    const TriangleRule& tq = triangle_rule(space.volume_order());
    const double det = 2.0 * eb.area();
    for (std::size_t q = 0; q < tq.points.size(); ++q) {
        const Vec2 x = eb.to_physical(tq.points[q]);
        const double w = tq.weights[q] * det;
        eb.values(x, phi);
        eb.gradients(x, dx, dy);
        const double kap = frozen.kappa_at(t, x);
        const double c = inverse_weight ? 1.0 / kap : kap;
        const MatrixXd pp = phi * phi.transpose();
        I.weighted.noalias() += (w * c) * pp;
        I.mass.noalias() += w * pp;
        const MatrixXd gx = dx * phi.transpose();
        const MatrixXd gy = dy * phi.transpose();
        I.B.topRows(nb).noalias() -= w * gx;
        I.B.bottomRows(nb).noalias() -= w * gy;
        I.C.leftCols(nb).noalias() -= w * gx;
        I.C.rightCols(nb).noalias() -= w * gy;
        I.F.noalias() += (w * frozen.source_at(t, x)) * phi;
    }

    const SegmentRule& sq = segment_rule(space.face_order());
    const auto& ef = space.mesh().element_faces()[static_cast<std::size_t>(t)];
    VectorXd psi(nf);
    for (int i = 0; i < 3; ++i) {
        const int fid = ef[static_cast<std::size_t>(i)];
        const FaceBasis& fb = space.face(fid);
        const Vec2 n = space.mesh().outward_normal(t, i);
        const double tau = frozen.tau(fid);
        I.tau[static_cast<std::size_t>(i)] = tau;
        const double h = fb.length();
        for (std::size_t q = 0; q < sq.points.size(); ++q) {
            const double s = sq.points[q] * h;
            const double w = sq.weights[q] * h;
            const Vec2 x = fb.point_at(s);
            eb.values(x, phi);
            fb.values_at(s, psi);
            const MatrixXd pp = phi * phi.transpose();
            const MatrixXd pm = phi * psi.transpose();
            I.C.leftCols(nb).noalias() += (w * n.x()) * pp;
            I.C.rightCols(nb).noalias() += (w * n.y()) * pp;
            I.D.noalias() += (w * tau) * pp;
            I.E.block(0, i * nf, nb, nf).noalias() += (w * n.x()) * pm;
            I.E.block(nb, i * nf, nb, nf).noalias() += (w * n.y()) * pm;
            I.G.block(0, i * nf, nb, nf).noalias() -= (w * tau) * pm;
        }
    }
    return I;
}

MatrixXd block_diag2(const MatrixXd& a)
{
    const Eigen::Index n = a.rows();
    MatrixXd out = MatrixXd::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n) = a;
    out.bottomRightCorner(n, n) = a;
    return out;
}

} // namespace

MatrixXd LocalElementSystem::weighted_mass() const
{
    if (q_offset == 0)
        return K.topLeftCorner(2 * nb, 2 * nb);
    return K.block(2 * nb, 0, 2 * nb, 2 * nb);
}

LocalElementSystem assemble_local(const HdgSpace& space, int element, const FrozenFields& frozen)
{
    const ElementIntegrals I = integrate(space, element, frozen, true);
    const int nb = space.nb();
    const int nf = space.nf();
    LocalElementSystem L;
    L.element = element;
    L.nb = nb;
    L.nf = nf;
    L.q_offset = 0;
    L.u_offset = 2 * nb;
    L.tau = I.tau;
    L.K = MatrixXd::Zero(3 * nb, 3 * nb);
    L.K.topLeftCorner(2 * nb, 2 * nb) = block_diag2(I.weighted);
    L.K.block(0, 2 * nb, 2 * nb, nb) = I.B;
    L.K.block(2 * nb, 0, nb, 2 * nb) = I.C;
    L.K.bottomRightCorner(nb, nb) = I.D;
    L.Bf = MatrixXd(3 * nb, 3 * nf);
    L.Bf << I.E, I.G;
    L.r = VectorXd::Zero(3 * nb);
    L.r.tail(nb) = I.F;
    L.Rx = MatrixXd(3 * nf, 3 * nb);
    L.Rx << I.E.transpose(), -I.G.transpose();
    return L;
}

LocalElementSystem assemble_local_gradient_variant(const HdgSpace& space, int element, const FrozenFields& frozen)
{
    const ElementIntegrals I = integrate(space, element, frozen, false);
    const int nb = space.nb();
    const int nf = space.nf();
    LocalElementSystem L;
    L.element = element;
    L.nb = nb;
    L.nf = nf;
    L.q_offset = 2 * nb;
    L.u_offset = 4 * nb;
    L.tau = I.tau;
    const MatrixXd m2 = block_diag2(I.mass);
    L.K = MatrixXd::Zero(5 * nb, 5 * nb);
    L.K.topLeftCorner(2 * nb, 2 * nb) = m2;
    L.K.block(0, 4 * nb, 2 * nb, nb) = -I.B;
    L.K.block(2 * nb, 0, 2 * nb, 2 * nb) = block_diag2(I.weighted);
    L.K.block(2 * nb, 2 * nb, 2 * nb, 2 * nb) = m2;
    L.K.block(4 * nb, 2 * nb, nb, 2 * nb) = I.C;
    L.K.bottomRightCorner(nb, nb) = I.D;
    L.Bf = MatrixXd::Zero(5 * nb, 3 * nf);
    L.Bf.topRows(2 * nb) = -I.E;
    L.Bf.bottomRows(nb) = I.G;
    L.r = VectorXd::Zero(5 * nb);
    L.r.tail(nb) = I.F;
    L.Rx = MatrixXd::Zero(3 * nf, 5 * nb);
    L.Rx.middleCols(2 * nb, 2 * nb) = I.E.transpose();
    L.Rx.rightCols(nb) = -I.G.transpose();
    return L;
}

// ----------------------------------------------------------------- transfer

TransferCoupling transfer_coupling(const HdgSpace& space, const TransferData& face, const FrozenFields& frozen)
{
    const int nb = space.nb();
    const int nf = space.nf();
    const int t = face.element;
    const ElementBasis& eb = space.element(t);
    const FaceBasis& fb = space.face(face.face);
    const ProblemSpec& problem = frozen.problem();
    const SegmentRule& path = segment_rule(space.path_order());

    TransferCoupling tc;
    tc.block = MatrixXd::Zero(nf, 2 * nb);
    tc.rhs = VectorXd::Zero(nf);
    VectorXd psi(nf);
    VectorXd phi(nb);
    VectorXd acc(2 * nb);
    for (const TransferPoint& tp : face.points) {
        const double l = tp.anchor.length;
        if (!(l >= 0.0) || !std::isfinite(l))
            throw PathDegenerate("negative path length on boundary face " + std::to_string(face.face));
        fb.values_at(tp.s, psi);
        tc.rhs.noalias() += (tp.weight * problem.dirichlet(tp.anchor.anchor)) * psi;
        if (l == 0.0)
            continue;
        const Vec2& d = tp.anchor.direction;
        acc.setZero();
        for (std::size_t j = 0; j < path.points.size(); ++j) {
            const Vec2 y = tp.x + (path.points[j] * l) * d;
            const double w = path.weights[j] * l * frozen.kappa_inv_at(t, y);
            eb.values(y, phi);
            acc.head(nb).noalias() += (w * d.x()) * phi;
            acc.tail(nb).noalias() += (w * d.y()) * phi;
        }
        tc.block.noalias() += tp.weight * psi * acc.transpose();
    }
    return tc;
}

// ---------------------------------------------------------------- skeleton

void SkeletonSystem::write_coo(std::ostream& os) const
{
    const auto prec = os.precision(17);
    os << "# rows " << matrix.rows() << " cols " << matrix.cols() << " nnz " << matrix.nonZeros() << '\n';
    for (int c = 0; c < matrix.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os.precision(prec);
}

namespace {

LocalElementSystem assemble_for(const HdgSpace& space, int t, const FrozenFields& frozen)
{
    return frozen.problem().variant() == KappaVariant::OfGrad ? assemble_local_gradient_variant(space, t, frozen)
                                                               : assemble_local(space, t, frozen);
}

Eigen::PartialPivLU<MatrixXd> factor_local(const LocalElementSystem& L)
{
    Eigen::PartialPivLU<MatrixXd> lu(L.K);
    const double rc = lu.rcond();
    if (!(rc > 1e-14))
        throw SingularLocalSolve("local system of element " + std::to_string(L.element) +
                                 " is singular (reciprocal condition " + std::to_string(rc) + ")");
    return lu;
}

void store_local(const HdgSpace& space, KappaVariant variant, int t, const VectorXd& x, DiscreteSolution& sol)
{
    const int nb = space.nb();
    if (variant == KappaVariant::OfGrad) {
        sol.sigma.col(t) = x.head(2 * nb);
        sol.q.col(t) = x.segment(2 * nb, 2 * nb);
    } else {
        sol.q.col(t) = x.head(2 * nb);
    }
    sol.u.col(t) = x.tail(nb);
}

DiscreteSolution empty_solution(const HdgSpace& space, KappaVariant variant)
{
    const int nb = space.nb();
    const int ne = space.mesh().num_elements();
    DiscreteSolution sol;
    sol.k = space.degree();
    sol.q = MatrixXd::Zero(2 * nb, ne);
    sol.u = MatrixXd::Zero(nb, ne);
    if (variant == KappaVariant::OfGrad)
        sol.sigma = MatrixXd::Zero(2 * nb, ne);
    sol.uhat = MatrixXd::Zero(space.nf(), space.mesh().num_faces());
    return sol;
}

VectorXd element_trace(const HdgSpace& space, const MatrixXd& uhat, int t)
{
    const int nf = space.nf();
    VectorXd h(3 * nf);
    const auto& ef = space.mesh().element_faces()[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i)
        h.segment(i * nf, nf) = uhat.col(ef[static_cast<std::size_t>(i)]);
    return h;
}

} // namespace

DiscreteSolution SkeletonSolver::solve(const HdgSpace& space, const FrozenFields& frozen)
{
    const Triangulation& mesh = space.mesh();
    const int nf = space.nf();
    const int ne = mesh.num_elements();
    const int n = space.num_trace_dofs();
    const KappaVariant variant = frozen.problem().variant();

    std::vector<MatrixXd> sb(static_cast<std::size_t>(ne));
    std::vector<VectorXd> sr(static_cast<std::size_t>(ne));
    std::vector<int> q_offset(static_cast<std::size_t>(ne));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(ne) * 9 * static_cast<std::size_t>(nf * nf) * 2);
    VectorXd rhs = VectorXd::Zero(n);

    for (int t = 0; t < ne; ++t) {
        const LocalElementSystem L = assemble_for(space, t, frozen);
        const auto lu = factor_local(L);
        MatrixXd s_b = lu.solve(L.Bf);
        VectorXd s_r = lu.solve(L.r);
        MatrixXd m_loc = -L.Rx * s_b;
        const VectorXd r_loc = -L.Rx * s_r;
        for (int i = 0; i < 3; ++i)
            m_loc.block(i * nf, i * nf, nf, nf).diagonal().array() -= L.tau[static_cast<std::size_t>(i)];
        const auto& ef = mesh.element_faces()[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            const int fi = ef[static_cast<std::size_t>(i)];
            if (mesh.faces()[static_cast<std::size_t>(fi)].is_boundary())
                continue;
            for (int a = 0; a < nf; ++a) {
                rhs(fi * nf + a) += r_loc(i * nf + a);
                for (int j = 0; j < 3; ++j) {
                    const int fj = ef[static_cast<std::size_t>(j)];
                    for (int b = 0; b < nf; ++b)
                        trip.emplace_back(fi * nf + a, fj * nf + b, m_loc(i * nf + a, j * nf + b));
                }
            }
        }
        sb[static_cast<std::size_t>(t)] = std::move(s_b);
        sr[static_cast<std::size_t>(t)] = std::move(s_r);
        q_offset[static_cast<std::size_t>(t)] = L.q_offset;
    }

    const int nq = 2 * space.nb();
    for (const TransferData& td : space.transfer()) {
        const int t = td.element;
        const TransferCoupling tc = transfer_coupling(space, td, frozen);
        const auto st = static_cast<std::size_t>(t);
        const MatrixXd p = tc.block * sb[st].middleRows(q_offset[st], nq);
        const VectorXd pr = tc.rhs + tc.block * sr[st].segment(q_offset[st], nq);
        const auto& ef = mesh.element_faces()[st];
        for (int a = 0; a < nf; ++a) {
            const int row = td.face * nf + a;
            rhs(row) += pr(a);
            trip.emplace_back(row, row, 1.0);
            for (int j = 0; j < 3; ++j)
                for (int b = 0; b < nf; ++b)
                    trip.emplace_back(row, ef[static_cast<std::size_t>(j)] * nf + b, p(a, j * nf + b));
        }
    }

    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    const std::vector<int> outer(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1);
    const std::vector<int> inner(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
    if (!analyzed_ || outer != pattern_outer_ || inner != pattern_inner_) {
        lu_.analyzePattern(a);
        analyzed_ = true;
        pattern_outer_ = outer;
        pattern_inner_ = inner;
    }
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success)
        throw SolverFailure("skeleton factorization failed: " + lu_.lastErrorMessage());
    const VectorXd uhat = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !uhat.allFinite())
        throw SolverFailure("skeleton solve produced non-finite values");

    DiscreteSolution sol = empty_solution(space, variant);
    sol.uhat = Eigen::Map<const MatrixXd>(uhat.data(), nf, mesh.num_faces());
    for (int t = 0; t < ne; ++t) {
        const auto st = static_cast<std::size_t>(t);
        const VectorXd x = sr[st] - sb[st] * element_trace(space, sol.uhat, t);
        store_local(space, variant, t, x, sol);
    }
    if (keep_system_) {
        system_.matrix = std::move(a);
        system_.rhs = std::move(rhs);
        system_.nf = nf;
    }
    return sol;
}

DiscreteSolution condense_and_solve(const HdgSpace& space, const FrozenFields& frozen)
{
    SkeletonSolver solver;
    return solver.solve(space, frozen);
}

// -------------------------------------------------------------- monolithic

MonolithicSystem assemble_monolithic(const HdgSpace& space, const FrozenFields& frozen)
{
    const Triangulation& mesh = space.mesh();
    const int nf = space.nf();
    const int nb = space.nb();
    const int ne = mesh.num_elements();
    const int nloc = (frozen.problem().variant() == KappaVariant::OfGrad ? 5 : 3) * nb;
    const int trace0 = ne * nloc;
    const int n = trace0 + space.num_trace_dofs();

    std::vector<Eigen::Triplet<double>> trip;
    VectorXd rhs = VectorXd::Zero(n);
    std::vector<int> q_offset(static_cast<std::size_t>(ne));
    for (int t = 0; t < ne; ++t) {
        const LocalElementSystem L = assemble_for(space, t, frozen);
        q_offset[static_cast<std::size_t>(t)] = L.q_offset;
        const int x0 = t * nloc;
        const auto& ef = mesh.element_faces()[static_cast<std::size_t>(t)];
        for (int r = 0; r < nloc; ++r) {
            rhs(x0 + r) = L.r(r);
            for (int c = 0; c < nloc; ++c)
                if (L.K(r, c) != 0.0)
                    trip.emplace_back(x0 + r, x0 + c, L.K(r, c));
            for (int j = 0; j < 3; ++j)
                for (int b = 0; b < nf; ++b)
                    trip.emplace_back(x0 + r, trace0 + ef[static_cast<std::size_t>(j)] * nf + b, L.Bf(r, j * nf + b));
        }
        for (int i = 0; i < 3; ++i) {
            const int fi = ef[static_cast<std::size_t>(i)];
            if (mesh.faces()[static_cast<std::size_t>(fi)].is_boundary())
                continue;
            for (int a = 0; a < nf; ++a) {
                const int row = trace0 + fi * nf + a;
                trip.emplace_back(row, row, -L.tau[static_cast<std::size_t>(i)]);
                for (int c = 0; c < nloc; ++c)
                    trip.emplace_back(row, x0 + c, L.Rx(i * nf + a, c));
            }
        }
    }
    const int nq = 2 * nb;
    for (const TransferData& td : space.transfer()) {
        const TransferCoupling tc = transfer_coupling(space, td, frozen);
        const int x0 = td.element * nloc + q_offset[static_cast<std::size_t>(td.element)];
        for (int a = 0; a < nf; ++a) {
            const int row = trace0 + td.face * nf + a;
            rhs(row) = tc.rhs(a);
            trip.emplace_back(row, row, 1.0);
            for (int c = 0; c < nq; ++c)
                trip.emplace_back(row, x0 + c, -tc.block(a, c));
        }
    }
    MonolithicSystem m;
    m.matrix.resize(n, n);
    m.matrix.setFromTriplets(trip.begin(), trip.end());
    m.matrix.makeCompressed();
    m.rhs = std::move(rhs);
    m.local_size = nloc;
    return m;
}

VectorXd pack(const HdgSpace& space, const DiscreteSolution& sol, KappaVariant variant)
{
    const int nb = space.nb();
    const int ne = space.mesh().num_elements();
    const int nloc = (variant == KappaVariant::OfGrad ? 5 : 3) * nb;
    VectorXd x(ne * nloc + space.num_trace_dofs());
    for (int t = 0; t < ne; ++t) {
        auto seg = x.segment(t * nloc, nloc);
        if (variant == KappaVariant::OfGrad)
            seg << sol.sigma.col(t), sol.q.col(t), sol.u.col(t);
        else
            seg << sol.q.col(t), sol.u.col(t);
    }
    x.tail(space.num_trace_dofs()) = Eigen::Map<const VectorXd>(sol.uhat.data(), sol.uhat.size());
    return x;
}

DiscreteSolution unpack(const HdgSpace& space, const VectorXd& x, KappaVariant variant)
{
    const int nb = space.nb();
    const int ne = space.mesh().num_elements();
    const int nloc = (variant == KappaVariant::OfGrad ? 5 : 3) * nb;
    DiscreteSolution sol = empty_solution(space, variant);
    for (int t = 0; t < ne; ++t)
        store_local(space, variant, t, x.segment(t * nloc, nloc), sol);
    sol.uhat = Eigen::Map<const MatrixXd>(x.tail(space.num_trace_dofs()).eval().data(), space.nf(),
                                          space.mesh().num_faces());
    return sol;
}

DiscreteSolution monolithic_solve(const HdgSpace& space, const FrozenFields& frozen)
{
    const MonolithicSystem m = assemble_monolithic(space, frozen);
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(m.matrix);
    if (lu.info() != Eigen::Success)
        throw SolverFailure("monolithic factorization failed: " + lu.lastErrorMessage());
    const VectorXd x = lu.solve(m.rhs);
    if (!x.allFinite())
        throw SolverFailure("monolithic solve produced non-finite values");
    return unpack(space, x, frozen.problem().variant());
}

double monolithic_residual(const HdgSpace& space, const FrozenFields& frozen, const DiscreteSolution& sol)
{
    const MonolithicSystem m = assemble_monolithic(space, frozen);
    const VectorXd x = pack(space, sol, frozen.problem().variant());
    const double res = (m.matrix * x - m.rhs).norm();
    const double b = m.rhs.norm();
    return b > 0.0 ? res / b : res;
}

// ------------------------------------------------------------ conservation

FluxBalance element_flux_balance(const HdgSpace& space, const FrozenFields& frozen, const DiscreteSolution& sol,
                                 int t)
{
    const int nb = space.nb();
    const ElementBasis& eb = space.element(t);
    FluxBalance fb;
    const TriangleRule& tq = triangle_rule(space.volume_order());
    const double det = 2.0 * eb.area();
    for (std::size_t q = 0; q < tq.points.size(); ++q) {
        const Vec2 x = eb.to_physical(tq.points[q]);
        const double w = tq.weights[q] * det;
        const double f = frozen.source_at(t, x);
        fb.source += w * f;
        fb.scale += w * std::abs(f);
    }
    const SegmentRule& sq = segment_rule(space.face_order());
    const auto& ef = space.mesh().element_faces()[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i) {
        const int fid = ef[static_cast<std::size_t>(i)];
        const FaceBasis& face = space.face(fid);
        const Vec2 n = space.mesh().outward_normal(t, i);
        const double tau = frozen.tau(fid);
        for (std::size_t q = 0; q < sq.points.size(); ++q) {
            const double s = sq.points[q] * face.length();
            const double w = sq.weights[q] * face.length();
            const Vec2 x = face.point_at(s);
            const double qn =
                n.x() * eb.eval(sol.q.col(t).head(nb), x) + n.y() * eb.eval(sol.q.col(t).tail(nb), x);
            const double flux =
                qn + tau * (eb.eval(sol.u.col(t), x) - face.eval(sol.uhat.col(fid), s));
            fb.boundary_flux += w * flux;
            fb.scale += w * std::abs(flux);
        }
    }
    return fb;
}

} // namespace uhdg
