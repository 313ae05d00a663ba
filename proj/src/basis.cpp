#include "uhdg/basis.hpp"

#include "uhdg/error.hpp"
#include "uhdg/quadrature.hpp"

#include <Eigen/LU>

#include <cmath>
#include <memory>
#include <mutex>
#include <string>

namespace uhdg {

std::vector<std::pair<int, int>> monomial_exponents(int k)
{
    std::vector<std::pair<int, int>> e;
    e.reserve(static_cast<std::size_t>(poly_dim(k)));
    for (int d = 0; d <= k; ++d)
        for (int b = 0; b <= d; ++b)
            e.emplace_back(d - b, b);
    return e;
}

namespace {

// Powers x^0..x^k into p.
inline void powers(double x, int k, double* p)
{
    p[0] = 1.0;
    for (int i = 1; i <= k; ++i)
        p[i] = p[i - 1] * x;
}

} // namespace

ReferenceBasis::ReferenceBasis(int k) : k_(k), dim_(poly_dim(k)), exps_(monomial_exponents(k))
{
    const TriangleRule& q = triangle_rule(2 * k);
    const auto nq = static_cast<Eigen::Index>(q.points.size());
    Eigen::MatrixXd m(dim_, nq);
    std::array<double, kMaxBasisDegree + 1> px{};
    std::array<double, kMaxBasisDegree + 1> py{};
    for (Eigen::Index j = 0; j < nq; ++j) {
        const Vec2& x = q.points[static_cast<std::size_t>(j)];
        powers(x.x(), k, px.data());
        powers(x.y(), k, py.data());
        for (int i = 0; i < dim_; ++i)
            m(i, j) = px[static_cast<std::size_t>(exps_[static_cast<std::size_t>(i)].first)] *
                      py[static_cast<std::size_t>(exps_[static_cast<std::size_t>(i)].second)];
    }
    Eigen::VectorXd w(nq);
    for (Eigen::Index j = 0; j < nq; ++j)
        w(j) = q.weights[static_cast<std::size_t>(j)];

    // Modified Gram-Schmidt, two passes, on sampled values and coefficients.
    coeff_ = Eigen::MatrixXd::Identity(dim_, dim_);
    Eigen::MatrixXd vals = m;
    for (int i = 0; i < dim_; ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < i; ++j) {
                const double c = (vals.row(i).array() * vals.row(j).array() * w.transpose().array()).sum();
                vals.row(i) -= c * vals.row(j);
                coeff_.row(i) -= c * coeff_.row(j);
            }
        }
        const double nrm = std::sqrt((vals.row(i).array().square() * w.transpose().array()).sum());
        vals.row(i) /= nrm;
        coeff_.row(i) /= nrm;
    }
}

const ReferenceBasis& ReferenceBasis::get(int k)
{
    if (k < 0 || k > kMaxBasisDegree)
        throw UnsupportedOrder("polynomial degree " + std::to_string(k) + " not supported");
    static std::array<std::unique_ptr<ReferenceBasis>, kMaxBasisDegree + 1> cache;
    static std::once_flag once;
    std::call_once(once, [] {
        for (int d = 0; d <= kMaxBasisDegree; ++d)
            cache[static_cast<std::size_t>(d)] = std::make_unique<ReferenceBasis>(d);
    });
    return *cache[static_cast<std::size_t>(k)];
}

void ReferenceBasis::values(const Vec2& xi, Eigen::Ref<Eigen::VectorXd> out) const
{
    std::array<double, kMaxBasisDegree + 1> px{};
    std::array<double, kMaxBasisDegree + 1> py{};
    powers(xi.x(), k_, px.data());
    powers(xi.y(), k_, py.data());
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> mono(dim_);
    for (int i = 0; i < dim_; ++i)
        mono(i) = px[static_cast<std::size_t>(exps_[static_cast<std::size_t>(i)].first)] *
                  py[static_cast<std::size_t>(exps_[static_cast<std::size_t>(i)].second)];
    out.noalias() = coeff_ * mono;
}

void ReferenceBasis::gradients(const Vec2& xi, Eigen::Ref<Eigen::VectorXd> dxi,
                               Eigen::Ref<Eigen::VectorXd> deta) const
{
    std::array<double, kMaxBasisDegree + 1> px{};
    std::array<double, kMaxBasisDegree + 1> py{};
    powers(xi.x(), k_, px.data());
    powers(xi.y(), k_, py.data());
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> mx(dim_);
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> my(dim_);
    for (int i = 0; i < dim_; ++i) {
        const auto [a, b] = exps_[static_cast<std::size_t>(i)];
        const auto ua = static_cast<std::size_t>(a);
        const auto ub = static_cast<std::size_t>(b);
        mx(i) = a > 0 ? a * px[ua - 1] * py[ub] : 0.0;
        my(i) = b > 0 ? b * px[ua] * py[ub - 1] : 0.0;
    }
    dxi.noalias() = coeff_ * mx;
    deta.noalias() = coeff_ * my;
}

ElementBasis::ElementBasis(int k, const std::array<Vec2, 3>& vertices)
    : ref_(&ReferenceBasis::get(k)), v_(vertices)
{
    jac_.col(0) = v_[1] - v_[0];
    jac_.col(1) = v_[2] - v_[0];
    det_ = jac_.determinant();
    if (!(std::abs(det_) > 0.0))
        throw SingularLocalSolve("degenerate triangle");
    jac_inv_ = jac_.inverse();
    scale_ = 1.0 / std::sqrt(std::abs(det_));
}

void ElementBasis::values(const Vec2& p, Eigen::Ref<Eigen::VectorXd> out) const
{
    ref_->values(to_reference(p), out);
    out *= scale_;
}

void ElementBasis::gradients(const Vec2& p, Eigen::Ref<Eigen::VectorXd> dx,
                             Eigen::Ref<Eigen::VectorXd> dy) const
{
    const int n = dim();
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> gxi(n);
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> geta(n);
    ref_->gradients(to_reference(p), gxi, geta);
    // grad_x = J^{-T} grad_xi
    dx.noalias() = scale_ * (jac_inv_(0, 0) * gxi + jac_inv_(1, 0) * geta);
    dy.noalias() = scale_ * (jac_inv_(0, 1) * gxi + jac_inv_(1, 1) * geta);
}

double ElementBasis::eval(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Vec2& p) const
{
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> v(dim());
    values(p, v);
    return coeffs.dot(v);
}

Vec2 ElementBasis::grad(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Vec2& p) const
{
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> dx(dim());
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, poly_dim(kMaxBasisDegree), 1> dy(dim());
    gradients(p, dx, dy);
    return {coeffs.dot(dx), coeffs.dot(dy)};
}

double extrapolate(const ElementBasis& element, const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                   const Vec2& p)
{
    return element.eval(coeffs, p);
}

FaceBasis::FaceBasis(int k, const Vec2& a, const Vec2& b) : k_(k), a_(a), b_(b), h_((b - a).norm())
{
    if (k < 0 || k > kMaxBasisDegree)
        throw UnsupportedOrder("face degree " + std::to_string(k) + " not supported");
    if (!(h_ > 0.0))
        throw SingularLocalSolve("zero-length face");
}

double FaceBasis::param_of(const Vec2& p) const
{
    return (p - a_).dot(b_ - a_) / h_;
}

void FaceBasis::values_at(double s, Eigen::Ref<Eigen::VectorXd> out) const
{
    const double x = 2.0 * s / h_ - 1.0;
    double p0 = 1.0;
    double p1 = x;
    out(0) = std::sqrt(1.0 / h_);
    if (k_ >= 1)
        out(1) = std::sqrt(3.0 / h_) * x;
    for (int j = 2; j <= k_; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        out(j) = std::sqrt((2.0 * j + 1.0) / h_) * p2;
        p0 = p1;
        p1 = p2;
    }
}

double FaceBasis::eval(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double s) const
{
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxBasisDegree + 1, 1> v(dim());
    values_at(s, v);
    return coeffs.dot(v);
}

std::vector<Vec2> reference_lattice(int k)
{
    std::vector<Vec2> pts;
    if (k == 0) {
        pts.emplace_back(1.0 / 3.0, 1.0 / 3.0);
        return pts;
    }
    for (int j = 0; j <= k; ++j)
        for (int i = 0; i + j <= k; ++i)
            pts.emplace_back(static_cast<double>(i) / k, static_cast<double>(j) / k);
    return pts;
}

Eigen::MatrixXd nodal_transform(const ElementBasis& element)
{
    const int n = element.dim();
    const std::vector<Vec2> nodes = reference_lattice(element.degree());
    Eigen::MatrixXd v(n, n);
    Eigen::VectorXd row(n);
    for (int m = 0; m < n; ++m) {
        element.values(element.to_physical(nodes[static_cast<std::size_t>(m)]), row);
        v.row(m) = row.transpose();
    }
    return v.inverse();
}

} // namespace uhdg
