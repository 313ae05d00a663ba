#pragma once

// Curved physical boundary and the queries used to build transfer paths.

#include "uhdg/expression.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace uhdg {

using Vec2 = Eigen::Vector2d;

struct BoundingBox {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{0.0, 0.0};

    [[nodiscard]] double diameter() const { return (hi - lo).norm(); }
    [[nodiscard]] bool contains(const Vec2& p, double inflate = 1.0) const;
};

/// Result of shooting a transfer path from a point of the computational
/// boundary towards the physical boundary.
struct AnchorResult {
    Vec2 anchor{0.0, 0.0};    ///< point on the physical boundary
    double length = 0.0;      ///< distance travelled along `direction`
    Vec2 direction{1.0, 0.0}; ///< unit direction of the path
    bool reenters = false;    ///< the ray re-enters the domain after the anchor
};

/// Closed simple curve bounding the physical domain. Immutable; all queries
/// are const and may be called concurrently.
class DomainBoundary {
public:
    enum class Kind { ParametricCurve, ImplicitLevelSet };

    class Impl;

    static DomainBoundary circle(double radius = 1.0, Vec2 center = Vec2::Zero());
    static DomainBoundary ellipse(double semi_x, double semi_y, Vec2 center = Vec2::Zero());
    /// x = cos t + 0.65 cos 2t - 0.65, y = 1.5 sin t.
    static DomainBoundary kite();
    /// Zero level set of an expression in x and y, negative inside. The
    /// domain must be star-shaped with respect to `center`.
    static DomainBoundary level_set(const std::string& expression, Vec2 center = Vec2::Zero());

    [[nodiscard]] Kind kind() const;
    [[nodiscard]] const std::string& name() const;

    /// Point of the curve at parameter t in [0, 1), counterclockwise.
    [[nodiscard]] Vec2 param_eval(double t) const;
    /// d/dt of param_eval.
    [[nodiscard]] Vec2 param_derivative(double t) const;
    /// Unit outward normal at parameter t.
    [[nodiscard]] Vec2 outward_normal(double t) const;
    /// Sign-correct level function: negative inside, zero on the curve.
    [[nodiscard]] double level_eval(const Vec2& p) const;

    [[nodiscard]] const BoundingBox& bounding_box() const;
    [[nodiscard]] double diameter() const;
    [[nodiscard]] double arc_length() const;
    /// Enclosed area, from the dense polyline proxy (or closed form).
    [[nodiscard]] double area() const;

    /// Dense polyline proxy (10^4 samples, counterclockwise).
    [[nodiscard]] const std::vector<Vec2>& proxy() const;
    /// Parameter values of the proxy samples.
    [[nodiscard]] const std::vector<double>& proxy_params() const;

    /// Parameter whose curve point is at the given arc-length fraction.
    [[nodiscard]] double param_at_arc_fraction(double fraction) const;

    /// Nearest point parameter, by coarse search and safeguarded Newton.
    [[nodiscard]] double nearest_param(const Vec2& p) const;

    explicit DomainBoundary(std::shared_ptr<const Impl> impl);

private:
    std::shared_ptr<const Impl> impl_;
};

/// Signed distance to the boundary, negative inside.
double signed_distance(const DomainBoundary& boundary, const Vec2& p);

/// First intersection of the ray x + s n (s >= 0) with the boundary.
/// `step` is the bracketing step; non-positive selects 1e-2 * diameter.
AnchorResult anchor_point(const DomainBoundary& boundary, const Vec2& x, const Vec2& n,
                          double step = 0.0);

/// Relative tolerance of all boundary root finding, as a fraction of the
/// domain diameter.
inline constexpr double kBoundaryRootTolerance = 1e-12;

} // namespace uhdg
