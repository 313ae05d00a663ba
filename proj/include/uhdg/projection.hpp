#pragma once

// HDG projector onto P_k^2 x P_k and the face L2 projector.

#include "uhdg/basis.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>

namespace uhdg {

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;

struct ProjectedPair {
    Eigen::VectorXd q; ///< 2 nb coefficients, x block then y block
    Eigen::VectorXd u; ///< nb coefficients
};

/// Solves (Pq, v) = (q, v), (Pu, w) = (u, w) for v, w of degree k-1 and
/// <Pq.n + tau Pu, mu> = <q.n + tau u, mu> for mu in P_k of each face;
/// local face i runs from vertex i to vertex i+1. quad_order < 0 selects
/// 2k+6. Throws SingularProjection when tau vanishes on every face.
ProjectedPair hdg_project(const ElementBasis& element, const VectorField& q, const ScalarField& u,
                          const std::array<double, 3>& tau, int quad_order = -1);

struct ProjectionResiduals {
    double volume_q = 0.0; ///< max |(Pq - q, v)|
    double volume_u = 0.0; ///< max |(Pu - u, w)|
    double face = 0.0;     ///< max |<(Pq - q).n + tau (Pu - u), mu>|
    [[nodiscard]] double max() const { return std::max({volume_q, volume_u, face}); }
};

ProjectionResiduals projection_residuals(const ElementBasis& element, const VectorField& q, const ScalarField& u,
                                         const std::array<double, 3>& tau, const ProjectedPair& pair,
                                         int quad_order = -1);

/// L2(e) projection onto P_k(e); quad_order < 0 selects 2k+8.
Eigen::VectorXd face_l2_project(const FaceBasis& face, const ScalarField& trace, int quad_order = -1);

} // namespace uhdg
