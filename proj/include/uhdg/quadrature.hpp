#pragma once

#include "uhdg/geometry.hpp"

#include <vector>

namespace uhdg {

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct TriangleRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int order = 0;
};

/// Rule on the unit interval [0, 1]; weights sum to 1.
struct SegmentRule {
    std::vector<double> points;
    std::vector<double> weights;
    int order = 0;
};

inline constexpr int kMaxQuadratureOrder = 20;

/// Gauss-Legendre nodes and weights on [-1, 1] for any n >= 1.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Collapsed-coordinate Gauss rule exact for polynomials of total degree
/// <= order. Throws UnsupportedOrder outside [0, 20].
const TriangleRule& triangle_rule(int order);

/// Gauss rule on [0, 1] exact for degree <= order. Throws UnsupportedOrder
/// outside [0, 20].
const SegmentRule& segment_rule(int order);

/// Gauss rule on [0, 1] with exactly n points, no order cap (oracles).
SegmentRule gauss_segment(int n);

} // namespace uhdg
