#pragma once

// HDG discretization for a frozen diffusion field: local element systems,
// the transfer-path boundary operator, static condensation onto the trace
// unknown and local recovery.

#include "uhdg/basis.hpp"
#include "uhdg/mesh.hpp"
#include "uhdg/problem.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <array>
#include <iosfwd>
#include <vector>

namespace uhdg {

/// Mesh with per-element and per-face bases and the transfer data of its
/// boundary faces. Owns copies of its inputs.
class HdgSpace {
public:
    HdgSpace(Triangulation mesh, std::vector<TransferData> transfer, int k);
    /// Transfer data are built at face quadrature order 2k+3.
    HdgSpace(Triangulation mesh, const DomainBoundary& boundary, int k);

    [[nodiscard]] const Triangulation& mesh() const { return mesh_; }
    [[nodiscard]] int degree() const { return k_; }
    [[nodiscard]] int nb() const { return poly_dim(k_); }
    [[nodiscard]] int nf() const { return k_ + 1; }
    [[nodiscard]] int num_trace_dofs() const { return nf() * mesh_.num_faces(); }
    [[nodiscard]] const ElementBasis& element(int t) const { return elements_[static_cast<std::size_t>(t)]; }
    [[nodiscard]] const FaceBasis& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }
    [[nodiscard]] const std::vector<TransferData>& transfer() const { return transfer_; }
    /// Transfer data of a boundary face, nullptr for interior faces.
    [[nodiscard]] const TransferData* transfer_of(int f) const;

    [[nodiscard]] int volume_order() const { return 2 * k_ + 2; }
    [[nodiscard]] int face_order() const { return 2 * k_ + 3; }
    [[nodiscard]] int path_order() const { return 2 * k_ + 2; }

private:
    void init();

    Triangulation mesh_;
    std::vector<TransferData> transfer_;
    std::vector<int> transfer_index_;
    std::vector<ElementBasis> elements_;
    std::vector<FaceBasis> faces_;
    int k_;
};

/// Element coefficients: u has nb rows, q and sigma have 2 nb rows (x block
/// then y block), one column per element; uhat has k+1 rows per face.
struct DiscreteSolution {
    int k = 0;
    Eigen::MatrixXd q;
    Eigen::MatrixXd u;
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd uhat;

    [[nodiscard]] bool has_sigma() const { return sigma.size() > 0; }
};

/// Linearization point of one fixed-point step. zeta and eta hold element
/// coefficients of the previous scalar and gradient iterates; an empty matrix
/// stands for the zero iterate.
class FrozenFields {
public:
    FrozenFields(const HdgSpace& space, const ProblemSpec& problem, Eigen::MatrixXd zeta = {},
                 Eigen::MatrixXd eta = {});

    /// kappa at the (extrapolated) iterate of element t, clamped to the bounds.
    [[nodiscard]] double kappa_at(int t, const Vec2& p) const;
    [[nodiscard]] double kappa_inv_at(int t, const Vec2& p) const { return 1.0 / kappa_at(t, p); }
    [[nodiscard]] double source_at(int t, const Vec2& p) const;
    [[nodiscard]] double tau(int face) const;
    [[nodiscard]] double tau_bar() const { return problem_->tau_bar(); }
    [[nodiscard]] std::size_t clamp_events() const { return clamps_; }

    [[nodiscard]] const ProblemSpec& problem() const { return *problem_; }
    [[nodiscard]] const HdgSpace& space() const { return *space_; }
    [[nodiscard]] double zeta_at(int t, const Vec2& p) const;
    [[nodiscard]] Vec2 eta_at(int t, const Vec2& p) const;

private:
    const HdgSpace* space_;
    const ProblemSpec* problem_;
    Eigen::MatrixXd zeta_;
    Eigen::MatrixXd eta_;
    mutable std::size_t clamps_ = 0;
};

/// Local unknowns x are (q, u) for kappa(u) and (sigma, q, u) for kappa(grad u).
/// K x = r - Bf uhat_T and the flux rows of the element faces read
/// Rx x - tau uhat_T.
struct LocalElementSystem {
    int element = -1;
    int nb = 0;
    int nf = 0;
    int q_offset = 0;
    int u_offset = 0;
    Eigen::MatrixXd K;
    Eigen::MatrixXd Bf;
    Eigen::VectorXd r;
    Eigen::MatrixXd Rx;
    std::array<double, 3> tau{};

    [[nodiscard]] int size() const { return static_cast<int>(K.rows()); }
    /// Weighted vector mass block: kappa^{-1} on (q, q), or kappa on (q-row, sigma).
    [[nodiscard]] Eigen::MatrixXd weighted_mass() const;
};

LocalElementSystem assemble_local(const HdgSpace& space, int element, const FrozenFields& frozen);
LocalElementSystem assemble_local_gradient_variant(const HdgSpace& space, int element,
                                                   const FrozenFields& frozen);

/// Boundary row <uhat, mu> - block * q_T = rhs of one boundary face.
struct TransferCoupling {
    Eigen::MatrixXd block; ///< (k+1) x 2 nb, acting on the q coefficients of the element
    Eigen::VectorXd rhs;   ///< face moments of g at the anchors
};

TransferCoupling transfer_coupling(const HdgSpace& space, const TransferData& face, const FrozenFields& frozen);

struct SkeletonSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    int nf = 0;

    [[nodiscard]] int dof(int face, int m) const { return face * nf + m; }
    /// Coordinate text dump, one "row col value" triple per line.
    void write_coo(std::ostream& os) const;
};

/// Condensation with a cached symbolic factorization, reused while the
/// sparsity pattern is unchanged.
class SkeletonSolver {
public:
    DiscreteSolution solve(const HdgSpace& space, const FrozenFields& frozen);
    [[nodiscard]] const SkeletonSystem& last_system() const { return system_; }
    void keep_system(bool keep) { keep_system_ = keep; }

private:
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    bool analyzed_ = false;
    std::vector<int> pattern_outer_;
    std::vector<int> pattern_inner_;
    bool keep_system_ = false;
    SkeletonSystem system_;
};

DiscreteSolution condense_and_solve(const HdgSpace& space, const FrozenFields& frozen);

/// Full uncondensed system over all element unknowns followed by all traces.
struct MonolithicSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    int local_size = 0; ///< unknowns per element
};

MonolithicSystem assemble_monolithic(const HdgSpace& space, const FrozenFields& frozen);
Eigen::VectorXd pack(const HdgSpace& space, const DiscreteSolution& sol, KappaVariant variant);
DiscreteSolution unpack(const HdgSpace& space, const Eigen::VectorXd& x, KappaVariant variant);
DiscreteSolution monolithic_solve(const HdgSpace& space, const FrozenFields& frozen);
/// ||A x - b|| / ||b|| of the full system, or the absolute residual when b = 0.
double monolithic_residual(const HdgSpace& space, const FrozenFields& frozen, const DiscreteSolution& sol);

struct FluxBalance {
    double boundary_flux = 0.0; ///< <qhat.n, 1> over the element boundary
    double source = 0.0;        ///< (f(zeta), 1) over the element
    double scale = 0.0;         ///< (|f|, 1) + <|qhat.n|, 1>
    [[nodiscard]] double defect() const { return boundary_flux - source; }
};

FluxBalance element_flux_balance(const HdgSpace& space, const FrozenFields& frozen, const DiscreteSolution& sol,
                                 int element);

} // namespace uhdg
