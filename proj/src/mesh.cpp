#include "uhdg/mesh.hpp"

#include "uhdg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace uhdg {

Triangulation::Triangulation(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> elements)
    : vertices_(std::move(vertices)), elements_(std::move(elements))
{
    const auto nv = static_cast<int>(vertices_.size());
    const std::size_t ne = elements_.size();
    if (ne == 0)
        throw MeshFormatError("triangulation has no elements");
    h_.resize(ne);
    rho_.resize(ne);
    area_.resize(ne);

    for (std::size_t t = 0; t < ne; ++t) {
        auto& el = elements_[t];
        for (int v : el)
            if (v < 0 || v >= nv)
                throw MeshFormatError("element " + std::to_string(t) + " references a missing vertex");
        const Vec2& a = vertices_[static_cast<std::size_t>(el[0])];
        const Vec2& b = vertices_[static_cast<std::size_t>(el[1])];
        const Vec2& c = vertices_[static_cast<std::size_t>(el[2])];
        double twice = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (twice < 0.0) {
            std::swap(el[1], el[2]);
            twice = -twice;
        }
        const double la = (b - c).norm();
        const double lb = (c - a).norm();
        const double lc = (a - b).norm();
        const double diam = std::max({la, lb, lc});
        if (!(twice > 1e-14 * diam * diam))
            throw MeshFormatError("element " + std::to_string(t) + " is degenerate");
        area_[t] = 0.5 * twice;
        h_[t] = diam;
        rho_[t] = 2.0 * twice / (la + lb + lc); // twice the inradius
        h_max_ = std::max(h_max_, diam);
        beta_ = std::max(beta_, diam / rho_[t]);
    }

    // (min vertex, max vertex, element, local face)
    std::vector<std::tuple<int, int, int, int>> half;
    half.reserve(3 * ne);
    for (std::size_t t = 0; t < ne; ++t)
        for (int i = 0; i < 3; ++i) {
            const int a = elements_[t][static_cast<std::size_t>(i)];
            const int b = elements_[t][static_cast<std::size_t>((i + 1) % 3)];
            half.emplace_back(std::min(a, b), std::max(a, b), static_cast<int>(t), i);
        }
    std::sort(half.begin(), half.end());

    element_faces_.assign(ne, {-1, -1, -1});
    for (std::size_t i = 0; i < half.size();) {
        std::size_t j = i + 1;
        while (j < half.size() && std::get<0>(half[j]) == std::get<0>(half[i]) &&
               std::get<1>(half[j]) == std::get<1>(half[i]))
            ++j;
        if (j - i > 2)
            throw MeshFormatError("edge shared by more than two elements");
        const int fid = static_cast<int>(faces_.size());
        Face f;
        const auto [lo, hi, t0, l0] = half[i];
        (void)lo;
        (void)hi;
        const auto& e0 = elements_[static_cast<std::size_t>(t0)];
        f.vertices = {e0[static_cast<std::size_t>(l0)], e0[static_cast<std::size_t>((l0 + 1) % 3)]};
        f.elements = {t0, -1};
        f.local = {l0, -1};
        if (j - i == 2) {
            const auto [lo1, hi1, t1, l1] = half[i + 1];
            (void)lo1;
            (void)hi1;
            const auto& e1 = elements_[static_cast<std::size_t>(t1)];
            if (e1[static_cast<std::size_t>(l1)] != f.vertices[1])
                throw MeshFormatError("inconsistent orientation across an interior edge");
            f.elements[1] = t1;
            f.local[1] = l1;
        }
        const Vec2 d = vertices_[static_cast<std::size_t>(f.vertices[1])] -
                       vertices_[static_cast<std::size_t>(f.vertices[0])];
        f.length = d.norm();
        f.normal = Vec2(d.y(), -d.x()) / f.length;
        element_faces_[static_cast<std::size_t>(t0)][static_cast<std::size_t>(l0)] = fid;
        if (f.elements[1] >= 0)
            element_faces_[static_cast<std::size_t>(f.elements[1])][static_cast<std::size_t>(f.local[1])] = fid;
        else
            boundary_faces_.push_back(fid);
        faces_.push_back(f);
        i = j;
    }
}

std::array<Vec2, 3> Triangulation::element_vertices(int t) const
{
    const auto& e = elements_[static_cast<std::size_t>(t)];
    return {vertices_[static_cast<std::size_t>(e[0])], vertices_[static_cast<std::size_t>(e[1])],
            vertices_[static_cast<std::size_t>(e[2])]};
}

double Triangulation::mean_diameter() const
{
    return std::accumulate(h_.begin(), h_.end(), 0.0) / static_cast<double>(h_.size());
}

double Triangulation::area() const
{
    double a = 0.0;
    for (double x : area_)
        a += x;
    return a;
}

Vec2 Triangulation::outward_normal(int t, int i) const
{
    const Face& f = faces_[static_cast<std::size_t>(element_faces_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)])];
    return f.elements[0] == t && f.local[0] == i ? f.normal : Vec2(-f.normal);
}

// ---------------------------------------------------------------------------
// Text format

void write_mesh(std::ostream& os, const Triangulation& mesh, const std::vector<TransferData>& transfer)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    os << "unfitted-hdg-mesh v1\n";
    os << "vertices " << mesh.num_vertices() << "\n";
    for (const Vec2& v : mesh.vertices())
        os << v.x() << ' ' << v.y() << '\n';
    os << "elements " << mesh.num_elements() << "\n";
    for (const auto& e : mesh.elements())
        os << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
    os << "boundary_faces " << transfer.size() << "\n";
    for (const TransferData& td : transfer) {
        os << "face " << td.face << ' ' << td.element << ' ' << td.points.size() << ' ' << td.h_perp
           << ' ' << td.H_perp << ' ' << td.r_e << ' ' << td.d_loc << ' '
           << (td.path_crosses_mesh ? 1 : 0) << '\n';
        for (const TransferPoint& p : td.points)
            os << p.x.x() << ' ' << p.x.y() << ' ' << p.weight << ' ' << p.s << ' '
               << p.anchor.anchor.x() << ' ' << p.anchor.anchor.y() << ' ' << p.anchor.length << ' '
               << p.anchor.direction.x() << ' ' << p.anchor.direction.y() << ' '
               << (p.anchor.reenters ? 1 : 0) << '\n';
    }
    os << "end\n";
    os.flags(flags);
    os.precision(prec);
}

void write_mesh(const std::string& path, const Triangulation& mesh, const std::vector<TransferData>& transfer)
{
    std::ofstream os(path);
    if (!os)
        throw MeshFormatError("cannot open " + path + " for writing");
    write_mesh(os, mesh, transfer);
}

namespace {

void expect(std::istream& is, const std::string& word)
{
    std::string w;
    if (!(is >> w) || w != word)
        throw MeshFormatError("expected '" + word + "' but found '" + w + "'");
}

template <class T>
T read_value(std::istream& is, const char* what)
{
    T v{};
    if (!(is >> v))
        throw MeshFormatError(std::string("malformed ") + what);
    return v;
}

} // namespace

MeshFile read_mesh(std::istream& is)
{
    std::string line;
    do {
        if (!std::getline(is, line))
            throw MeshFormatError("empty mesh file");
    } while (!line.empty() && line[0] == '#');
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
        line.pop_back();
    if (line != "unfitted-hdg-mesh v1")
        throw MeshFormatError("unrecognised header '" + line + "'");

    expect(is, "vertices");
    const auto nv = read_value<long>(is, "vertex count");
    if (nv < 3)
        throw MeshFormatError("too few vertices");
    std::vector<Vec2> verts(static_cast<std::size_t>(nv));
    for (auto& v : verts) {
        v.x() = read_value<double>(is, "vertex");
        v.y() = read_value<double>(is, "vertex");
    }
    expect(is, "elements");
    const auto ne = read_value<long>(is, "element count");
    if (ne < 1)
        throw MeshFormatError("no elements");
    std::vector<std::array<int, 3>> elems(static_cast<std::size_t>(ne));
    for (auto& e : elems)
        for (int& x : e)
            x = read_value<int>(is, "element");

    MeshFile out{Triangulation(std::move(verts), std::move(elems)), {}};

    expect(is, "boundary_faces");
    const auto nb = read_value<long>(is, "boundary face count");
    if (nb < 0)
        throw MeshFormatError("negative boundary face count");
    for (long f = 0; f < nb; ++f) {
        expect(is, "face");
        TransferData td;
        td.face = read_value<int>(is, "face id");
        td.element = read_value<int>(is, "face element");
        const auto np = read_value<long>(is, "point count");
        td.h_perp = read_value<double>(is, "h_perp");
        td.H_perp = read_value<double>(is, "H_perp");
        td.r_e = read_value<double>(is, "r_e");
        td.d_loc = read_value<double>(is, "d_loc");
        td.path_crosses_mesh = read_value<int>(is, "crossing flag") != 0;
        if (td.face < 0 || td.face >= out.mesh.num_faces() ||
            !out.mesh.faces()[static_cast<std::size_t>(td.face)].is_boundary())
            throw MeshFormatError("record for a face that is not a boundary face");
        const Face& face = out.mesh.faces()[static_cast<std::size_t>(td.face)];
        td.normal = face.normal;
        td.length = face.length;
        if (np < 0)
            throw MeshFormatError("negative point count");
        td.points.resize(static_cast<std::size_t>(np));
        for (auto& p : td.points) {
            p.x.x() = read_value<double>(is, "point");
            p.x.y() = read_value<double>(is, "point");
            p.weight = read_value<double>(is, "weight");
            p.s = read_value<double>(is, "parameter");
            p.anchor.anchor.x() = read_value<double>(is, "anchor");
            p.anchor.anchor.y() = read_value<double>(is, "anchor");
            p.anchor.length = read_value<double>(is, "length");
            p.anchor.direction.x() = read_value<double>(is, "direction");
            p.anchor.direction.y() = read_value<double>(is, "direction");
            p.anchor.reenters = read_value<int>(is, "reentry flag") != 0;
        }
        out.transfer.push_back(std::move(td));
    }
    expect(is, "end");
    return out;
}

MeshFile read_mesh(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw MeshFormatError("cannot open " + path);
    return read_mesh(is);
}

} // namespace uhdg
