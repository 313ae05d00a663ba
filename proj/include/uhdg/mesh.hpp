#pragma once

// Polygonal computational domains, their triangulations, transfer paths to
// the physical boundary and the geometric admissibility checks.

#include "uhdg/geometry.hpp"
#include "uhdg/quadrature.hpp"

#include <json.hpp>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace uhdg {

struct Face {
    std::array<int, 2> vertices{-1, -1};
    /// elements[0] lies to the left of vertices[0] -> vertices[1]; elements[1]
    /// is -1 on the boundary.
    std::array<int, 2> elements{-1, -1};
    /// Local face index inside each adjacent element.
    std::array<int, 2> local{-1, -1};
    Vec2 normal{0.0, 0.0}; ///< unit normal pointing out of elements[0]
    double length = 0.0;

    [[nodiscard]] bool is_boundary() const { return elements[1] < 0; }
};

/// Conforming triangulation. Triangles are counterclockwise; local face i of
/// a triangle joins its vertices i and (i+1) mod 3.
class Triangulation {
public:
    Triangulation() = default;
    /// Builds faces and metrics. Throws MeshFormatError on non-conforming or
    /// degenerate input; clockwise triangles are reoriented.
    Triangulation(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> elements);

    [[nodiscard]] const std::vector<Vec2>& vertices() const { return vertices_; }
    [[nodiscard]] const std::vector<std::array<int, 3>>& elements() const { return elements_; }
    [[nodiscard]] const std::vector<Face>& faces() const { return faces_; }
    [[nodiscard]] const std::vector<std::array<int, 3>>& element_faces() const { return element_faces_; }
    [[nodiscard]] const std::vector<int>& boundary_faces() const { return boundary_faces_; }

    [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_elements() const { return static_cast<int>(elements_.size()); }
    [[nodiscard]] int num_faces() const { return static_cast<int>(faces_.size()); }

    [[nodiscard]] std::array<Vec2, 3> element_vertices(int t) const;
    [[nodiscard]] double element_diameter(int t) const { return h_[static_cast<std::size_t>(t)]; }
    /// Twice the inradius.
    [[nodiscard]] double element_rho(int t) const { return rho_[static_cast<std::size_t>(t)]; }
    [[nodiscard]] double element_area(int t) const { return area_[static_cast<std::size_t>(t)]; }

    [[nodiscard]] double mesh_size() const { return h_max_; }
    /// Average element diameter.
    [[nodiscard]] double mean_diameter() const;
    [[nodiscard]] double shape_regularity() const { return beta_; }
    [[nodiscard]] double area() const;

    /// Outward normal of local face i of element t.
    [[nodiscard]] Vec2 outward_normal(int t, int i) const;

private:
    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> elements_;
    std::vector<Face> faces_;
    std::vector<std::array<int, 3>> element_faces_;
    std::vector<int> boundary_faces_;
    std::vector<double> h_;
    std::vector<double> rho_;
    std::vector<double> area_;
    double h_max_ = 0.0;
    double beta_ = 0.0;
};

struct MeshPolicy {
    double beta_max = 5.0;
    double gap_fraction = 0.25; ///< inward offset of boundary samples, in units of h
    double c_prox = 1.5;        ///< local proximity factor
    int smoothing_sweeps = 4;
};

/// Triangulated polygon inscribed in the physical domain: boundary samples at
/// arc spacing h_target offset inward by gap_fraction * h_target, a hexagonal
/// interior lattice, conforming Delaunay triangulation and smoothing.
/// Throws QualityFailure when the shape regularity exceeds beta_max.
Triangulation build_admissible_mesh(const DomainBoundary& boundary, double h_target,
                                    const MeshPolicy& policy = {});

struct TransferPoint {
    Vec2 x{0.0, 0.0};
    double weight = 0.0; ///< physical quadrature weight on the face
    double s = 0.0;      ///< face parameter in [0, h_e]
    AnchorResult anchor;
};

/// Transfer paths of one boundary face e.
struct TransferData {
    int face = -1;
    int element = -1; ///< T^e
    Vec2 normal{0.0, 0.0};
    double length = 0.0;
    std::vector<TransferPoint> points;
    double h_perp = 0.0; ///< largest distance from T^e to the line of e
    double H_perp = 0.0; ///< largest path length over sampled points of e
    double r_e = 0.0;
    double d_loc = 0.0;
    bool path_crosses_mesh = false; ///< a path meets the interior of another element
};

/// Gauss points of order quad_order on every boundary face, with anchors.
/// NoIntersection is rethrown with the face id in the message.
std::vector<TransferData> build_transfer_data(const Triangulation& mesh,
                                              const DomainBoundary& boundary, int quad_order);

struct FaceConstants {
    double C_ext = 0.0;
    double C_inv = 0.0;
};

/// Extension and inverse-inequality constants of one boundary face for
/// [P_k]^2 normal components. Throws SingularGram for degenerate elements.
FaceConstants estimate_face_constants(const TransferData& face,
                                      const std::array<Vec2, 3>& element, int k);

/// Visits the tensor quadrature of the extension patch of `face`: the face
/// points times a Gauss rule of order `order` along each path. The callback
/// receives (point, weight, face point index).
template <class F>
void for_each_patch_point(const TransferData& face, int order, F&& f)
{
    const SegmentRule& rule = segment_rule(order);
    for (std::size_t i = 0; i < face.points.size(); ++i) {
        const TransferPoint& tp = face.points[i];
        const double l = tp.anchor.length;
        if (l <= 0.0)
            continue;
        for (std::size_t j = 0; j < rule.points.size(); ++j)
            f(Vec2(tp.x + rule.points[j] * l * tp.anchor.direction), tp.weight * rule.weights[j] * l, i);
    }
}

/// Area of the extension patch, by the face quadrature of the path lengths.
double patch_area(const TransferData& face);

struct FaceAdmissibility {
    int face = -1;
    double r_e = 0.0;
    double H_perp = 0.0;
    double d_loc = 0.0;
    double C_ext = 0.0;
    double C_inv = 0.0;
    bool S3_ok = true;
    bool S4_ok = true;
    double S3_margin = 1.0;
    double S4_margin = 1.0;
    bool proximity_ok = true;
    bool path_crosses_mesh = false;
};

struct AdmissibilityReport {
    double beta = 0.0;
    double R = 0.0;
    double h = 0.0;
    int k = 0;
    double kappa_lo = 1.0;
    double kappa_hi = 1.0;
    double tau_bar = 1.0;
    double c_prox = 1.5;
    std::vector<FaceAdmissibility> per_face;
    int path_crossings = 0;
    bool overall_ok = true;
};

AdmissibilityReport check_admissibility(const Triangulation& mesh,
                                        const std::vector<TransferData>& transfer, double kappa_lo,
                                        double kappa_hi, double tau_bar, int k,
                                        double c_prox = 1.5);

/// Convenience overload building transfer data at order 2k+2 first.
AdmissibilityReport check_admissibility(const Triangulation& mesh, const DomainBoundary& boundary,
                                        double kappa_lo, double kappa_hi, double tau_bar, int k,
                                        double c_prox = 1.5);

void to_json(nlohmann::json& j, const AdmissibilityReport& r);

/// Plain-text mesh format with header `unfitted-hdg-mesh v1`; the reader
/// skips leading lines that start with `#`.
void write_mesh(std::ostream& os, const Triangulation& mesh,
                const std::vector<TransferData>& transfer = {});
void write_mesh(const std::string& path, const Triangulation& mesh,
                const std::vector<TransferData>& transfer = {});

struct MeshFile {
    Triangulation mesh;
    std::vector<TransferData> transfer;
};

/// Throws MeshFormatError on malformed input.
MeshFile read_mesh(std::istream& is);
MeshFile read_mesh(const std::string& path);

} // namespace uhdg
