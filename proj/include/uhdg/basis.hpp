#pragma once

// Orthonormal polynomial bases on triangles and faces.

#include "uhdg/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <utility>
#include <vector>

namespace uhdg {

inline constexpr int kMaxBasisDegree = 8;

/// Number of polynomials of total degree <= k in two variables.
constexpr int poly_dim(int k) { return (k + 1) * (k + 2) / 2; }

/// Exponent pairs (a, b) of x^a y^b ordered by total degree.
std::vector<std::pair<int, int>> monomial_exponents(int k);

/// Orthonormal basis of P_k on the reference triangle, expressed in monomial
/// coefficients. Shared and immutable.
class ReferenceBasis {
public:
    static const ReferenceBasis& get(int k);

    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] int dim() const { return dim_; }
    /// Row i holds the monomial coefficients of basis function i.
    [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coeff_; }

    void values(const Vec2& xi, Eigen::Ref<Eigen::VectorXd> out) const;
    void gradients(const Vec2& xi, Eigen::Ref<Eigen::VectorXd> dxi,
                   Eigen::Ref<Eigen::VectorXd> deta) const;

    explicit ReferenceBasis(int k);

private:
    int k_;
    int dim_;
    std::vector<std::pair<int, int>> exps_;
    Eigen::MatrixXd coeff_;
};

/// P_k on a physical triangle: reference basis composed with the inverse
/// affine map and scaled to be L2-orthonormal on the triangle. Evaluation is
/// valid at every point of the plane.
class ElementBasis {
public:
    ElementBasis(int k, const std::array<Vec2, 3>& vertices);

    [[nodiscard]] int degree() const { return ref_->degree(); }
    [[nodiscard]] int dim() const { return ref_->dim(); }
    [[nodiscard]] double area() const { return 0.5 * std::abs(det_); }
    [[nodiscard]] const std::array<Vec2, 3>& vertices() const { return v_; }
    [[nodiscard]] const Eigen::Matrix2d& jacobian() const { return jac_; }

    [[nodiscard]] Vec2 to_physical(const Vec2& xi) const { return v_[0] + jac_ * xi; }
    [[nodiscard]] Vec2 to_reference(const Vec2& p) const { return jac_inv_ * (p - v_[0]); }

    void values(const Vec2& p, Eigen::Ref<Eigen::VectorXd> out) const;
    void gradients(const Vec2& p, Eigen::Ref<Eigen::VectorXd> dx,
                   Eigen::Ref<Eigen::VectorXd> dy) const;

    [[nodiscard]] double eval(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Vec2& p) const;
    [[nodiscard]] Vec2 grad(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Vec2& p) const;

private:
    const ReferenceBasis* ref_;
    std::array<Vec2, 3> v_;
    Eigen::Matrix2d jac_;
    Eigen::Matrix2d jac_inv_;
    double det_;
    double scale_;
};

/// Value of the element polynomial at p, inside or outside the element.
double extrapolate(const ElementBasis& element, const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                   const Vec2& p);

/// Scaled Legendre basis of P_k on a straight face from a to b, orthonormal
/// in L2(e). The face parameter s runs over [0, h_e].
class FaceBasis {
public:
    FaceBasis(int k, const Vec2& a, const Vec2& b);

    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] int dim() const { return k_ + 1; }
    [[nodiscard]] double length() const { return h_; }
    [[nodiscard]] const Vec2& start() const { return a_; }
    [[nodiscard]] const Vec2& end() const { return b_; }

    [[nodiscard]] Vec2 point_at(double s) const { return a_ + (s / h_) * (b_ - a_); }
    /// Face parameter of the orthogonal projection of p onto the face line.
    [[nodiscard]] double param_of(const Vec2& p) const;

    void values_at(double s, Eigen::Ref<Eigen::VectorXd> out) const;
    void values(const Vec2& p, Eigen::Ref<Eigen::VectorXd> out) const { values_at(param_of(p), out); }
    [[nodiscard]] double eval(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double s) const;

private:
    int k_;
    Vec2 a_;
    Vec2 b_;
    double h_;
};

/// Equispaced lattice of (k+1)(k+2)/2 points on the reference triangle,
/// unisolvent for P_k.
std::vector<Vec2> reference_lattice(int k);

/// Change of basis to the Lagrange basis on the mapped lattice: column i of
/// the result holds the coefficients of the i-th nodal function.
Eigen::MatrixXd nodal_transform(const ElementBasis& element);

} // namespace uhdg
