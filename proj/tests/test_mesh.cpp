#include "uhdg/error.hpp"
#include "uhdg/mesh.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

using namespace uhdg;

namespace {

void check_conforming(const Triangulation& m, const DomainBoundary& b)
{
    std::map<std::pair<int, int>, int> count;
    for (const auto& e : m.elements())
        for (int i = 0; i < 3; ++i) {
            const int a = e[static_cast<std::size_t>(i)];
            const int c = e[static_cast<std::size_t>((i + 1) % 3)];
            ++count[{std::min(a, c), std::max(a, c)}];
        }
    int boundary = 0;
    for (const auto& [k, n] : count) {
        CHECK((n == 1 || n == 2));
        boundary += n == 1 ? 1 : 0;
    }
    CHECK(boundary == static_cast<int>(m.boundary_faces().size()));
    for (int t = 0; t < m.num_elements(); ++t)
        CHECK(m.element_area(t) > 0.0);
    for (const Vec2& v : m.vertices())
        CHECK(signed_distance(b, v) <= 0.0);
    // outward normals of boundary faces point away from their element
    for (int f : m.boundary_faces()) {
        const Face& face = m.faces()[static_cast<std::size_t>(f)];
        const auto tv = m.element_vertices(face.elements[0]);
        const Vec2 c = (tv[0] + tv[1] + tv[2]) / 3.0;
        CHECK((m.vertices()[static_cast<std::size_t>(face.vertices[0])] - c).dot(face.normal) > 0.0);
    }
}

double max_path_length(const std::vector<TransferData>& td)
{
    double d = 0.0;
    for (const auto& t : td)
        for (const auto& p : t.points)
            d = std::max(d, p.anchor.length);
    return d;
}

} // namespace

TEST_CASE("unit circle at h = 0.5")
{
    const auto c = DomainBoundary::circle();
    const Triangulation m = build_admissible_mesh(c, 0.5);
    CHECK(m.shape_regularity() <= 5.0);
    for (const Vec2& v : m.vertices())
        CHECK(signed_distance(c, v) < 0.0);
    check_conforming(m, c);
}

TEST_CASE("conforming meshes on the catalog geometries")
{
    check_conforming(build_admissible_mesh(DomainBoundary::circle(), 0.1), DomainBoundary::circle());
    check_conforming(build_admissible_mesh(DomainBoundary::kite(), 0.1), DomainBoundary::kite());
    const auto e = DomainBoundary::ellipse(1.0, 0.6);
    check_conforming(build_admissible_mesh(e, 0.08), e);
    const auto ls = DomainBoundary::level_set("x^4 + 2*y^2 - 1");
    check_conforming(build_admissible_mesh(ls, 0.1), ls);
}

TEST_CASE("hand-built triangulation")
{
    // clockwise second triangle is reoriented
    const Triangulation m({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}, {{0, 1, 2}, {0, 2, 3}});
    CHECK(m.num_faces() == 5);
    CHECK(m.boundary_faces().size() == 4);
    CHECK(m.area() == doctest::Approx(1.0));
    CHECK(m.mesh_size() == doctest::Approx(std::sqrt(2.0)));
    // right isosceles: h = sqrt 2, inradius = (2 - sqrt 2) / 2
    CHECK(m.shape_regularity() == doctest::Approx(std::sqrt(2.0) / (2.0 - std::sqrt(2.0))));
    for (int t = 0; t < 2; ++t)
        for (int i = 0; i < 3; ++i) {
            const auto& face = m.faces()[static_cast<std::size_t>(m.element_faces()[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)])];
            const Vec2 n = m.outward_normal(t, i);
            CHECK(n.norm() == doctest::Approx(1.0));
            if (!face.is_boundary())
                CHECK(std::abs(n.dot(Vec2(1, -1).normalized())) == doctest::Approx(1.0));
        }
    CHECK_THROWS_AS(Triangulation({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)}, {{0, 1, 2}}), MeshFormatError);
    CHECK_THROWS_AS(Triangulation({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1), Vec2(1, -1)},
                                  {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}}),
                    MeshFormatError);
    CHECK_THROWS_AS(Triangulation({Vec2(0, 0), Vec2(1, 0)}, {{0, 1, 5}}), MeshFormatError);
}

TEST_CASE("quality failure")
{
    MeshPolicy p;
    p.beta_max = 1.0;
    CHECK_THROWS_AS(build_admissible_mesh(DomainBoundary::circle(), 0.2, p), QualityFailure);
    CHECK_THROWS_AS(build_admissible_mesh(DomainBoundary::circle(), 1.0), QualityFailure);
}

TEST_CASE("proximity distance halves under refinement")
{
    const auto c = DomainBoundary::circle();
    std::vector<double> dloc;
    std::vector<double> maxlen;
    double r0 = 0.0;
    double rmax = 0.0;
    for (double h : {0.4, 0.2, 0.1, 0.05}) {
        const auto m = build_admissible_mesh(c, h);
        const auto td = build_transfer_data(m, c, 4);
        double d = 0.0;
        double r = 0.0;
        for (const auto& t : td) {
            d = std::max(d, t.d_loc);
            r = std::max(r, t.r_e);
            CHECK(t.d_loc <= 1.5 * m.element_diameter(t.element));
            CHECK_FALSE(t.path_crosses_mesh);
        }
        if (r0 == 0.0)
            r0 = r;
        rmax = std::max(rmax, r);
        dloc.push_back(d);
        maxlen.push_back(max_path_length(td));
    }
    for (std::size_t i = 1; i < dloc.size(); ++i) {
        CAPTURE(i);
        CHECK(dloc[i] / dloc[i - 1] >= 0.3);
        CHECK(dloc[i] / dloc[i - 1] <= 0.8);
        CHECK(maxlen[i] / maxlen[i - 1] >= 0.3);
        CHECK(maxlen[i] / maxlen[i - 1] <= 0.8);
    }
    CHECK(rmax <= 2.0 * r0);
}

TEST_CASE("chord sagitta on the circle")
{
    const auto c = DomainBoundary::circle();
    const double h = 0.2;
    const double gap = 0.25 * h;
    const auto m = build_admissible_mesh(c, h);
    const auto td = build_transfer_data(m, c, 4); // three points, one at the midpoint
    const double rho = 1.0 - gap;
    for (const auto& t : td) {
        const double half = 0.5 * t.length;
        CHECK(t.H_perp == doctest::Approx(1.0 - std::sqrt(rho * rho - half * half)).epsilon(1e-10));
    }
}

TEST_CASE("transfer data is stable under quadrature refinement")
{
    const auto c = DomainBoundary::circle();
    const auto m = build_admissible_mesh(c, 0.05);
    const auto a = build_transfer_data(m, c, 4);
    const auto b = build_transfer_data(m, c, 6);
    auto g = [](const Vec2& p) { return std::sin(p.x()) * std::cos(2.0 * p.y()); };
    REQUIRE(a.size() == b.size());
    for (std::size_t f = 0; f < a.size(); ++f) {
        double ia = 0.0;
        double ib = 0.0;
        for (const auto& p : a[f].points)
            ia += p.weight * g(p.anchor.anchor);
        for (const auto& p : b[f].points)
            ib += p.weight * g(p.anchor.anchor);
        CHECK(std::abs(ia - ib) < 1e-10);
    }
}

TEST_CASE("patch coverage deficit is positive and decays")
{
    const auto c = DomainBoundary::circle();
    std::vector<double> def;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto m = build_admissible_mesh(c, h);
        double pa = 0.0;
        for (const auto& t : build_transfer_data(m, c, 4))
            pa += patch_area(t);
        def.push_back(std::numbers::pi - m.area() - pa);
    }
    for (std::size_t i = 0; i < def.size(); ++i)
        CHECK(def[i] > 0.0);
    for (std::size_t i = 1; i < def.size(); ++i)
        CHECK(std::log2(def[i - 1] / def[i]) >= 1.8);
}

TEST_CASE("face constants at k = 0")
{
    const auto c = DomainBoundary::circle();
    const auto m = build_admissible_mesh(c, 0.2);
    for (const auto& t : build_transfer_data(m, c, 4)) {
        const auto fc = estimate_face_constants(t, m.element_vertices(t.element), 0);
        CHECK(fc.C_inv == 0.0);
        const double expect = std::sqrt(patch_area(t) / m.element_area(t.element)) / std::sqrt(t.r_e);
        CHECK(fc.C_ext == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("face constants are invariant under rigid motions")
{
    const auto c = DomainBoundary::kite();
    const auto m = build_admissible_mesh(c, 0.2);
    const auto td = build_transfer_data(m, c, 6);
    const Eigen::Rotation2Dd rot(std::numbers::pi / 6.0);
    const Vec2 shift(0.3, -1.1);
    auto move = [&](const Vec2& p) { return Vec2(rot * p + shift); };
    for (std::size_t f = 0; f < td.size(); f += 7) {
        const TransferData& t = td[f];
        TransferData r = t;
        r.normal = rot * t.normal;
        for (auto& p : r.points) {
            p.x = move(p.x);
            p.anchor.anchor = move(p.anchor.anchor);
            p.anchor.direction = rot * p.anchor.direction;
        }
        auto ev = m.element_vertices(t.element);
        std::array<Vec2, 3> er{move(ev[0]), move(ev[1]), move(ev[2])};
        for (int k = 0; k <= 3; ++k) {
            const auto a = estimate_face_constants(t, ev, k);
            const auto b = estimate_face_constants(r, er, k);
            CHECK(b.C_ext == doctest::Approx(a.C_ext).epsilon(1e-8));
            CHECK(b.C_inv == doctest::Approx(a.C_inv).epsilon(1e-8));
        }
    }
}

TEST_CASE("admissibility on the unit circle")
{
    const auto c = DomainBoundary::circle();

    SUBCASE("default policy: S3 and proximity hold, S4 does not")
    {
        const auto m = build_admissible_mesh(c, 0.1);
        const auto rep = check_admissibility(m, c, 1.0, 1.0, 1.0, 1);
        int s4_fail = 0;
        for (const auto& f : rep.per_face) {
            CHECK(f.S3_ok);
            CHECK(f.proximity_ok);
            s4_fail += f.S4_ok ? 0 : 1;
        }
        CHECK(s4_fail > 0);
        CHECK_FALSE(rep.overall_ok);
    }
    SUBCASE("smaller gap satisfies every assumption")
    {
        MeshPolicy p;
        p.gap_fraction = 0.05;
        const auto m = build_admissible_mesh(c, 0.1, p);
        const auto rep = check_admissibility(m, c, 1.0, 1.0, 1.0, 1);
        CHECK(rep.overall_ok);
        double s4 = 1.0;
        for (const auto& f : rep.per_face)
            s4 = std::min(s4, f.S4_margin);
        CHECK(s4 > 0.5);
        const nlohmann::json j = rep;
        CHECK(j.at("overall_ok").get<bool>());
        CHECK(j.at("per_face").size() == rep.per_face.size());
        CHECK(j.at("per_face")[0].contains("S4_margin"));
    }
    SUBCASE("large stabilization violates S3 on every curved face")
    {
        const auto m = build_admissible_mesh(c, 0.1);
        const auto rep = check_admissibility(m, c, 1.0, 1.0, 1e6, 1);
        for (const auto& f : rep.per_face)
            CHECK_FALSE(f.S3_ok);
        CHECK_FALSE(rep.overall_ok);
    }
}

TEST_CASE("kite admissibility")
{
    const auto k = DomainBoundary::kite();
    MeshPolicy p;
    p.gap_fraction = 0.05;
    const auto m = build_admissible_mesh(k, 0.1, p);
    CHECK(check_admissibility(m, k, 1.0, 1.0, 1.0, 1).overall_ok);
    // at h = 0.2 the curvature of the tips alone exceeds the S4 budget
    const auto coarse = build_admissible_mesh(k, 0.2, p);
    const auto rep = check_admissibility(coarse, k, 1.0, 1.0, 1.0, 1);
    for (const auto& f : rep.per_face) {
        CHECK(f.S3_ok);
        CHECK(f.proximity_ok);
    }
    CHECK_FALSE(rep.overall_ok);
}

TEST_CASE("face on the physical boundary is trivially admissible")
{
    const Triangulation m({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {{0, 1, 2}});
    TransferData t;
    t.face = m.boundary_faces()[0];
    t.element = 0;
    const Face& f = m.faces()[static_cast<std::size_t>(t.face)];
    t.normal = f.normal;
    t.length = f.length;
    t.h_perp = 1.0;
    for (double s : {0.2, 0.5, 0.8}) {
        TransferPoint p;
        p.x = m.vertices()[static_cast<std::size_t>(f.vertices[0])] * (1 - s) +
              m.vertices()[static_cast<std::size_t>(f.vertices[1])] * s;
        p.anchor.anchor = p.x;
        p.anchor.direction = f.normal;
        t.points.push_back(p);
    }
    const auto rep = check_admissibility(m, std::vector<TransferData>{t}, 1.0, 1.0, 1.0, 2);
    REQUIRE(rep.per_face.size() == 1);
    CHECK(rep.per_face[0].C_ext == 0.0);
    CHECK(rep.per_face[0].S3_ok);
    CHECK(rep.per_face[0].S4_ok);
    CHECK(rep.overall_ok);
}

TEST_CASE("mesh file round trip")
{
    const auto c = DomainBoundary::ellipse(1.0, 0.7);
    const auto m = build_admissible_mesh(c, 0.2);
    const auto td = build_transfer_data(m, c, 4);
    std::stringstream ss;
    write_mesh(ss, m, td);
    CHECK(ss.str().rfind("unfitted-hdg-mesh v1\n", 0) == 0);
    const MeshFile back = read_mesh(ss);
    REQUIRE(back.mesh.num_vertices() == m.num_vertices());
    REQUIRE(back.mesh.num_elements() == m.num_elements());
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(back.mesh.vertices()[static_cast<std::size_t>(i)] == m.vertices()[static_cast<std::size_t>(i)]);
    CHECK(back.mesh.elements() == m.elements());
    REQUIRE(back.transfer.size() == td.size());
    for (std::size_t f = 0; f < td.size(); ++f) {
        CHECK(back.transfer[f].r_e == td[f].r_e);
        REQUIRE(back.transfer[f].points.size() == td[f].points.size());
        for (std::size_t q = 0; q < td[f].points.size(); ++q) {
            CHECK(back.transfer[f].points[q].anchor.anchor == td[f].points[q].anchor.anchor);
            CHECK(back.transfer[f].points[q].weight == td[f].points[q].weight);
        }
    }
}

TEST_CASE("malformed mesh files")
{
    std::istringstream bad_header("mesh v2\n");
    CHECK_THROWS_AS(read_mesh(bad_header), MeshFormatError);
    std::istringstream truncated("unfitted-hdg-mesh v1\nvertices 3\n0 0\n1 0\n");
    CHECK_THROWS_AS(read_mesh(truncated), MeshFormatError);
    std::istringstream bad_index("unfitted-hdg-mesh v1\nvertices 3\n0 0\n1 0\n0 1\nelements 1\n0 1 7\n");
    CHECK_THROWS_AS(read_mesh(bad_index), MeshFormatError);
    CHECK_THROWS_AS(read_mesh(std::string("/nonexistent/mesh.txt")), MeshFormatError);
}
