#include "uhdg/error.hpp"
#include "uhdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace uhdg {

namespace {

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c)
{
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Positive when d lies strictly inside the circumcircle of the
// counterclockwise triangle abc.
inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double adx = a.x() - d.x();
    const double ady = a.y() - d.y();
    const double bdx = b.x() - d.x();
    const double bdy = b.y() - d.y();
    const double cdx = c.x() - d.x();
    const double cdy = c.y() - d.y();
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

inline std::uint64_t edge_key(int a, int b)
{
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (hi << 32U) | lo;
}

// Incremental Bowyer-Watson triangulation. Vertices 0..2 form a super
// triangle enclosing all input.
class Delaunay {
public:
    struct Tri {
        std::array<int, 3> v{};
        std::array<int, 3> nb{-1, -1, -1}; // neighbour across edge (v[i], v[i+1])
        bool alive = true;
    };

    Delaunay(const Vec2& lo, const Vec2& hi)
    {
        const Vec2 c = 0.5 * (lo + hi);
        const double r = 50.0 * std::max((hi - lo).norm(), 1e-300);
        pts_.emplace_back(c + Vec2(-r, -r));
        pts_.emplace_back(c + Vec2(r, -r));
        pts_.emplace_back(c + Vec2(0.0, r));
        tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, true});
        last_ = 0;
    }

    [[nodiscard]] const std::vector<Vec2>& points() const { return pts_; }
    [[nodiscard]] const std::vector<Tri>& triangles() const { return tris_; }

    int insert(const Vec2& p)
    {
        const int t0 = locate(p);
        cavity_.clear();
        in_cavity_.clear();
        stack_.clear();
        stack_.push_back(t0);
        in_cavity_.insert(t0);
        while (!stack_.empty()) {
            const int t = stack_.back();
            stack_.pop_back();
            cavity_.push_back(t);
            for (int nb : tris_[static_cast<std::size_t>(t)].nb) {
                if (nb < 0 || in_cavity_.count(nb) != 0)
                    continue;
                const Tri& n = tris_[static_cast<std::size_t>(nb)];
                if (incircle(pts_[static_cast<std::size_t>(n.v[0])], pts_[static_cast<std::size_t>(n.v[1])],
                             pts_[static_cast<std::size_t>(n.v[2])], p) > 0.0) {
                    in_cavity_.insert(nb);
                    stack_.push_back(nb);
                }
            }
        }
        // Keep the cavity star-shaped with respect to p.
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t c = 0; c < cavity_.size(); ++c) {
                const int t = cavity_[c];
                if (t == t0)
                    continue;
                const Tri& tr = tris_[static_cast<std::size_t>(t)];
                for (int i = 0; i < 3; ++i) {
                    const int nb = tr.nb[static_cast<std::size_t>(i)];
                    if (nb >= 0 && in_cavity_.count(nb) != 0)
                        continue;
                    if (orient(pts_[static_cast<std::size_t>(tr.v[static_cast<std::size_t>(i)])],
                               pts_[static_cast<std::size_t>(tr.v[static_cast<std::size_t>((i + 1) % 3)])], p) <= 0.0) {
                        in_cavity_.erase(t);
                        cavity_.erase(cavity_.begin() + static_cast<std::ptrdiff_t>(c));
                        changed = true;
                        break;
                    }
                }
                if (changed)
                    break;
            }
        }

        const int pid = static_cast<int>(pts_.size());
        pts_.push_back(p);

        struct Edge {
            int a;
            int b;
            int outer;
        };
        std::vector<Edge> boundary;
        for (int t : cavity_) {
            const Tri& tr = tris_[static_cast<std::size_t>(t)];
            for (int i = 0; i < 3; ++i) {
                const int nb = tr.nb[static_cast<std::size_t>(i)];
                if (nb >= 0 && in_cavity_.count(nb) != 0)
                    continue;
                boundary.push_back({tr.v[static_cast<std::size_t>(i)], tr.v[static_cast<std::size_t>((i + 1) % 3)], nb});
            }
        }
        for (int t : cavity_) {
            tris_[static_cast<std::size_t>(t)].alive = false;
            free_.push_back(t);
        }

        starts_.clear();
        std::vector<int> created;
        created.reserve(boundary.size());
        for (const Edge& e : boundary) {
            int id;
            if (!free_.empty()) {
                id = free_.back();
                free_.pop_back();
            } else {
                id = static_cast<int>(tris_.size());
                tris_.emplace_back();
            }
            Tri& nt = tris_[static_cast<std::size_t>(id)];
            nt.v = {e.a, e.b, pid};
            nt.nb = {e.outer, -1, -1};
            nt.alive = true;
            if (e.outer >= 0) {
                Tri& o = tris_[static_cast<std::size_t>(e.outer)];
                for (int i = 0; i < 3; ++i)
                    if (o.v[static_cast<std::size_t>(i)] == e.b && o.v[static_cast<std::size_t>((i + 1) % 3)] == e.a)
                        o.nb[static_cast<std::size_t>(i)] = id;
            }
            starts_[e.a] = id;
            created.push_back(id);
        }
        for (int id : created) {
            Tri& nt = tris_[static_cast<std::size_t>(id)];
            // edge (b, p) borders the new triangle starting at b
            const auto it = starts_.find(nt.v[1]);
            if (it == starts_.end())
                throw QualityFailure("Delaunay cavity is not closed");
            nt.nb[1] = it->second;
            tris_[static_cast<std::size_t>(it->second)].nb[2] = id;
        }
        last_ = created.front();
        return pid;
    }

private:
    int locate(const Vec2& p)
    {
        int t = last_;
        if (t < 0 || !tris_[static_cast<std::size_t>(t)].alive)
            t = first_alive();
        const std::size_t max_steps = 4 * tris_.size() + 16;
        unsigned rot = 0;
        int prev = -1;
        for (std::size_t step = 0; step < max_steps; ++step) {
            const Tri& tr = tris_[static_cast<std::size_t>(t)];
            int next = -1;
            ++rot;
            for (unsigned j = 0; j < 3; ++j) {
                const auto i = static_cast<std::size_t>((j + rot) % 3);
                if (orient(pts_[static_cast<std::size_t>(tr.v[i])], pts_[static_cast<std::size_t>(tr.v[(i + 1) % 3])], p) < 0.0) {
                    next = tr.nb[i];
                    break;
                }
            }
            // Stepping back means p sits on the shared edge up to roundoff.
            if (next < 0 || next == prev)
                return t;
            prev = t;
            t = next;
        }
        // Fallback: the triangle in which p is deepest.
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < tris_.size(); ++i) {
            const Tri& tr = tris_[i];
            if (!tr.alive)
                continue;
            double score = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < 3; ++j) {
                const Vec2& a = pts_[static_cast<std::size_t>(tr.v[j])];
                const Vec2& b = pts_[static_cast<std::size_t>(tr.v[(j + 1) % 3])];
                score = std::min(score, orient(a, b, p) / (b - a).norm());
            }
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(i);
            }
        }
        if (best < 0)
            throw QualityFailure("point location failed during triangulation");
        return best;
    }

    int first_alive() const
    {
        for (std::size_t i = 0; i < tris_.size(); ++i)
            if (tris_[i].alive)
                return static_cast<int>(i);
        return -1;
    }

    std::vector<Vec2> pts_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    int last_ = -1;
    std::vector<int> cavity_;
    std::unordered_set<int> in_cavity_;
    std::vector<int> stack_;
    std::unordered_map<int, int> starts_;
};

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b)
{
    const Vec2 d = b - a;
    const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * d)).norm();
}

bool inside_polygon(const std::vector<Vec2>& poly, const Vec2& p)
{
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y()) &&
            p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
            in = !in;
    }
    return in;
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

struct RawMesh {
    std::vector<Vec2> points;             // super vertices removed
    std::vector<std::array<int, 3>> tris; // counterclockwise
    std::vector<int> loop;                // boundary loop as point ids
};

// Conforming Delaunay triangulation of the polygon `loop` (counterclockwise)
// with interior points. Missing boundary edges are split at their midpoints.
RawMesh triangulate(std::vector<Vec2> loop, const std::vector<Vec2>& interior)
{
    Vec2 lo = loop.front();
    Vec2 hi = loop.front();
    for (const Vec2& p : loop) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Delaunay dt(lo, hi);
    std::vector<int> ids;
    ids.reserve(loop.size());
    for (const Vec2& p : loop)
        ids.push_back(dt.insert(p));
    for (const Vec2& p : interior)
        dt.insert(p);

    for (int round = 0; round < 64; ++round) {
        std::unordered_set<std::uint64_t> edges;
        for (const auto& t : dt.triangles()) {
            if (!t.alive)
                continue;
            for (int i = 0; i < 3; ++i)
                edges.insert(edge_key(t.v[static_cast<std::size_t>(i)], t.v[static_cast<std::size_t>((i + 1) % 3)]));
        }
        std::vector<int> next;
        std::vector<Vec2> next_pts;
        bool missing = false;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const int a = ids[i];
            const int b = ids[(i + 1) % ids.size()];
            next.push_back(a);
            next_pts.push_back(loop[i]);
            if (edges.count(edge_key(a, b)) == 0) {
                missing = true;
                const Vec2 m = 0.5 * (loop[i] + loop[(i + 1) % loop.size()]);
                next.push_back(-1);
                next_pts.push_back(m);
            }
        }
        if (!missing)
            break;
        for (std::size_t i = 0; i < next.size(); ++i)
            if (next[i] < 0)
                next[i] = dt.insert(next_pts[i]);
        ids = std::move(next);
        loop = std::move(next_pts);
        if (round == 63)
            throw QualityFailure("boundary recovery did not converge");
    }

    // Flood fill from the super triangle across non-boundary edges.
    std::unordered_set<std::uint64_t> constrained;
    for (std::size_t i = 0; i < ids.size(); ++i)
        constrained.insert(edge_key(ids[i], ids[(i + 1) % ids.size()]));
    const auto& tris = dt.triangles();
    std::vector<char> outside(tris.size(), 0);
    std::vector<int> stack;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        if (!tris[t].alive)
            continue;
        for (int v : tris[t].v)
            if (v < 3 && outside[t] == 0) {
                outside[t] = 1;
                stack.push_back(static_cast<int>(t));
            }
    }
    while (!stack.empty()) {
        const int t = stack.back();
        stack.pop_back();
        const auto& tr = tris[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            const int nb = tr.nb[static_cast<std::size_t>(i)];
            if (nb < 0 || outside[static_cast<std::size_t>(nb)] != 0)
                continue;
            if (constrained.count(edge_key(tr.v[static_cast<std::size_t>(i)], tr.v[static_cast<std::size_t>((i + 1) % 3)])) != 0)
                continue;
            outside[static_cast<std::size_t>(nb)] = 1;
            stack.push_back(nb);
        }
    }

    RawMesh out;
    const auto& pts = dt.points();
    std::vector<int> remap(pts.size(), -1);
    // Boundary loop first, in loop order.
    for (int id : ids) {
        remap[static_cast<std::size_t>(id)] = static_cast<int>(out.points.size());
        out.points.push_back(pts[static_cast<std::size_t>(id)]);
        out.loop.push_back(remap[static_cast<std::size_t>(id)]);
    }
    for (std::size_t t = 0; t < tris.size(); ++t) {
        if (!tris[t].alive || outside[t] != 0)
            continue;
        std::array<int, 3> tri{};
        for (std::size_t i = 0; i < 3; ++i) {
            const int v = tris[t].v[i];
            if (v < 3)
                throw QualityFailure("boundary loop is not closed");
            if (remap[static_cast<std::size_t>(v)] < 0) {
                remap[static_cast<std::size_t>(v)] = static_cast<int>(out.points.size());
                out.points.push_back(pts[static_cast<std::size_t>(v)]);
            }
            tri[i] = remap[static_cast<std::size_t>(v)];
        }
        out.tris.push_back(tri);
    }
    return out;
}

} // namespace

Triangulation build_admissible_mesh(const DomainBoundary& boundary, double h_target,
                                    const MeshPolicy& policy)
{
    if (!(h_target > 0.0) || !(h_target < boundary.diameter() / 4.0))
        throw QualityFailure("h_target must lie in (0, diameter/4)");
    if (!(policy.gap_fraction >= 0.0))
        throw QualityFailure("gap_fraction must be non-negative");

    const double h = h_target;
    const int n = std::max(12, static_cast<int>(std::ceil(boundary.arc_length() / h)));
    std::vector<Vec2> loop;
    loop.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = boundary.param_at_arc_fraction(static_cast<double>(i) / n);
        loop.push_back(boundary.param_eval(t) - policy.gap_fraction * h * boundary.outward_normal(t));
    }

    // The loop must be simple and inside the physical domain.
    for (int i = 0; i < n; ++i) {
        const Vec2& a = loop[static_cast<std::size_t>(i)];
        const Vec2& b = loop[static_cast<std::size_t>((i + 1) % n)];
        if (signed_distance(boundary, a) > 0.0 || boundary.level_eval(0.5 * (a + b)) >= 0.0)
            throw QualityFailure("offset boundary polygon leaves the domain; reduce h_target");
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1)
                continue;
            if (segments_cross(a, b, loop[static_cast<std::size_t>(j)], loop[static_cast<std::size_t>((j + 1) % n)]))
                throw QualityFailure("offset boundary polygon self-intersects; reduce h_target");
        }
    }

    auto clearance = [&](const Vec2& p) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < loop.size(); ++i)
            d = std::min(d, point_segment_distance(p, loop[i], loop[(i + 1) % loop.size()]));
        return d;
    };

    // Hexagonal lattice of interior points.
    Vec2 lo = loop.front();
    Vec2 hi = loop.front();
    for (const Vec2& p : loop) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double dy = h * std::sqrt(3.0) / 2.0;
    std::vector<Vec2> interior;
    const int rows = static_cast<int>(std::ceil((hi.y() - lo.y()) / dy)) + 1;
    const int cols = static_cast<int>(std::ceil((hi.x() - lo.x()) / h)) + 2;
    const Vec2 origin = 0.5 * (lo + hi);
    for (int j = -rows; j <= rows; ++j) {
        const double y = origin.y() + j * dy;
        if (y < lo.y() || y > hi.y())
            continue;
        const double shift = (j % 2 != 0) ? 0.5 * h : 0.0;
        for (int i = -cols; i <= cols; ++i) {
            const Vec2 p(origin.x() + shift + i * h, y);
            if (p.x() < lo.x() || p.x() > hi.x())
                continue;
            if (!inside_polygon(loop, p) || clearance(p) < 0.5 * h)
                continue;
            interior.push_back(p);
        }
    }

    RawMesh raw = triangulate(loop, interior);

    // Laplacian smoothing of interior vertices, then re-triangulation.
    for (int pass = 0; pass < 2 && policy.smoothing_sweeps > 0; ++pass) {
        const std::size_t nb = raw.loop.size();
        std::vector<std::vector<int>> adj(raw.points.size());
        for (const auto& t : raw.tris)
            for (std::size_t i = 0; i < 3; ++i) {
                adj[static_cast<std::size_t>(t[i])].push_back(t[(i + 1) % 3]);
                adj[static_cast<std::size_t>(t[(i + 1) % 3])].push_back(t[i]);
            }
        std::vector<Vec2> pts = raw.points;
        for (int sweep = 0; sweep < policy.smoothing_sweeps; ++sweep) {
            std::vector<Vec2> next = pts;
            for (std::size_t v = nb; v < pts.size(); ++v) {
                if (adj[v].empty())
                    continue;
                Vec2 s = Vec2::Zero();
                for (int w : adj[v])
                    s += pts[static_cast<std::size_t>(w)];
                const Vec2 cand = s / static_cast<double>(adj[v].size());
                if (inside_polygon(loop, cand))
                    next[v] = cand;
            }
            pts = std::move(next);
        }
        std::vector<Vec2> bloop(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(nb));
        std::vector<Vec2> inner(pts.begin() + static_cast<std::ptrdiff_t>(nb), pts.end());
        raw = triangulate(bloop, inner);
    }

    Triangulation mesh(std::move(raw.points), std::move(raw.tris));
    for (const Vec2& v : mesh.vertices())
        if (signed_distance(boundary, v) > 0.0)
            throw QualityFailure("mesh vertex outside the physical domain");
    if (mesh.shape_regularity() > policy.beta_max)
        throw QualityFailure("shape regularity " + std::to_string(mesh.shape_regularity()) +
                             " exceeds beta_max " + std::to_string(policy.beta_max));
    return mesh;
}

} // namespace uhdg
