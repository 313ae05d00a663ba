#include "uhdg/geometry.hpp"

#include "uhdg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace uhdg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kProxySamples = 10000;

double wrap01(double t)
{
    t -= std::floor(t);
    return t >= 1.0 ? 0.0 : t;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

} // namespace

bool BoundingBox::contains(const Vec2& p, double inflate) const
{
    const Vec2 c = 0.5 * (lo + hi);
    const Vec2 half = 0.5 * inflate * (hi - lo);
    return std::abs(p.x() - c.x()) <= half.x() && std::abs(p.y() - c.y()) <= half.y();
}

class DomainBoundary::Impl {
public:
    virtual ~Impl() = default;

    [[nodiscard]] virtual Vec2 eval(double t) const = 0;
    [[nodiscard]] virtual Vec2 deriv(double t) const = 0;
    [[nodiscard]] virtual double level(const Vec2& p) const = 0;
    [[nodiscard]] virtual Kind kind() const { return Kind::ParametricCurve; }
    [[nodiscard]] virtual std::optional<double> exact_area() const { return std::nullopt; }

    /// Builds the polyline proxy and validates closure, orientation and
    /// simplicity.
    void finalize();

    std::string name;
    std::vector<Vec2> proxy;
    std::vector<double> params;
    std::vector<double> cum_length; // size proxy.size() + 1
    BoundingBox bbox;
    double length = 0.0;
    double enclosed_area = 0.0;
};

void DomainBoundary::Impl::finalize()
{
    proxy.resize(kProxySamples);
    params.resize(kProxySamples);
    for (std::size_t i = 0; i < kProxySamples; ++i) {
        params[i] = static_cast<double>(i) / static_cast<double>(kProxySamples);
        proxy[i] = eval(params[i]);
    }
    bbox.lo = bbox.hi = proxy.front();
    for (const Vec2& p : proxy) {
        bbox.lo = bbox.lo.cwiseMin(p);
        bbox.hi = bbox.hi.cwiseMax(p);
    }
    const double diam = bbox.diameter();
    if (!(diam > 0.0))
        throw InvalidBoundary(name + ": degenerate boundary curve");

    const Vec2 end = eval(1.0 - 1e-15);
    if ((end - proxy.front()).norm() > 1e-12 * diam)
        throw InvalidBoundary(name + ": curve is not closed");

    cum_length.assign(kProxySamples + 1, 0.0);
    double signed_area = 0.0;
    for (std::size_t i = 0; i < kProxySamples; ++i) {
        const Vec2& a = proxy[i];
        const Vec2& b = proxy[(i + 1) % kProxySamples];
        cum_length[i + 1] = cum_length[i] + (b - a).norm();
        signed_area += 0.5 * cross(a, b);
    }
    length = cum_length.back();
    if (signed_area <= 0.0)
        throw InvalidBoundary(name + ": curve must be oriented counterclockwise");
    enclosed_area = exact_area().value_or(signed_area);

    // Self-intersection check on the proxy, bucketed on a uniform grid.
    const double cell = 4.0 * length / static_cast<double>(kProxySamples);
    std::unordered_map<long long, std::vector<std::size_t>> grid;
    auto key = [&](long long ix, long long iy) { return ix * 1000003LL + iy; };
    for (std::size_t i = 0; i < kProxySamples; ++i) {
        const Vec2& a = proxy[i];
        const Vec2& b = proxy[(i + 1) % kProxySamples];
        const auto x0 = static_cast<long long>(std::floor((std::min(a.x(), b.x()) - bbox.lo.x()) / cell));
        const auto x1 = static_cast<long long>(std::floor((std::max(a.x(), b.x()) - bbox.lo.x()) / cell));
        const auto y0 = static_cast<long long>(std::floor((std::min(a.y(), b.y()) - bbox.lo.y()) / cell));
        const auto y1 = static_cast<long long>(std::floor((std::max(a.y(), b.y()) - bbox.lo.y()) / cell));
        for (long long ix = x0; ix <= x1; ++ix)
            for (long long iy = y0; iy <= y1; ++iy)
                grid[key(ix, iy)].push_back(i);
    }
    for (const auto& [k, segs] : grid) {
        for (std::size_t p = 0; p < segs.size(); ++p) {
            for (std::size_t q = p + 1; q < segs.size(); ++q) {
                const std::size_t i = segs[p];
                const std::size_t j = segs[q];
                const std::size_t gap = i > j ? i - j : j - i;
                if (gap <= 1 || gap == kProxySamples - 1)
                    continue;
                if (segments_intersect(proxy[i], proxy[(i + 1) % kProxySamples], proxy[j],
                                       proxy[(j + 1) % kProxySamples]))
                    throw InvalidBoundary(name + ": curve self-intersects");
            }
        }
    }
}

namespace {

class CircleImpl final : public DomainBoundary::Impl {
public:
    CircleImpl(double r, Vec2 c) : r_(r), c_(std::move(c)) { name = "circle"; }

    Vec2 eval(double t) const override
    {
        const double th = kTwoPi * t;
        return c_ + r_ * Vec2(std::cos(th), std::sin(th));
    }
    Vec2 deriv(double t) const override
    {
        const double th = kTwoPi * t;
        return kTwoPi * r_ * Vec2(-std::sin(th), std::cos(th));
    }
    double level(const Vec2& p) const override { return (p - c_).norm() - r_; }
    std::optional<double> exact_area() const override { return std::numbers::pi * r_ * r_; }

private:
    double r_;
    Vec2 c_;
};

class EllipseImpl final : public DomainBoundary::Impl {
public:
    EllipseImpl(double a, double b, Vec2 c) : a_(a), b_(b), c_(std::move(c)) { name = "ellipse"; }

    Vec2 eval(double t) const override
    {
        const double th = kTwoPi * t;
        return c_ + Vec2(a_ * std::cos(th), b_ * std::sin(th));
    }
    Vec2 deriv(double t) const override
    {
        const double th = kTwoPi * t;
        return kTwoPi * Vec2(-a_ * std::sin(th), b_ * std::cos(th));
    }
    double level(const Vec2& p) const override
    {
        const Vec2 d = p - c_;
        return (std::hypot(d.x() / a_, d.y() / b_) - 1.0) * std::min(a_, b_);
    }
    std::optional<double> exact_area() const override { return std::numbers::pi * a_ * b_; }

private:
    double a_;
    double b_;
    Vec2 c_;
};

class KiteImpl final : public DomainBoundary::Impl {
public:
    KiteImpl() { name = "kite"; }

    Vec2 eval(double t) const override
    {
        const double th = kTwoPi * t;
        return {std::cos(th) + 0.65 * std::cos(2.0 * th) - 0.65, 1.5 * std::sin(th)};
    }
    Vec2 deriv(double t) const override
    {
        const double th = kTwoPi * t;
        return kTwoPi * Vec2(-std::sin(th) - 1.3 * std::sin(2.0 * th), 1.5 * std::cos(th));
    }
    // Each horizontal line |y| < 1.5 meets the curve exactly twice, at
    // sin t = y/1.5 with cos t = +-c; the interior lies between them.
    double level(const Vec2& p) const override
    {
        const double s = p.y() / 1.5;
        if (std::abs(s) >= 1.0)
            return (std::abs(p.y()) - 1.5) + std::abs(p.x() + 1.3) + 1e-300;
        const double c = std::sqrt(1.0 - s * s);
        const double x_right = c + 1.3 * c * c - 1.3;
        const double x_left = -c + 1.3 * c * c - 1.3;
        return std::max(p.x() - x_right, x_left - p.x());
    }
    std::optional<double> exact_area() const override { return 1.5 * std::numbers::pi; }
};

class LevelSetImpl final : public DomainBoundary::Impl {
public:
    LevelSetImpl(const std::string& text, Vec2 center) : center_(std::move(center))
    {
        name = "level-set(" + text + ")";
        const expr::Expr f = expr::parse(text);
        for (const auto& v : f.free_variables())
            if (v != "x" && v != "y")
                throw InvalidBoundary("level-set expression uses unknown variable '" + v + "'");
        f_ = expr::Compiled(f, {"x", "y"});
        fx_ = expr::Compiled(expr::diff(f, "x"), {"x", "y"});
        fy_ = expr::Compiled(expr::diff(f, "y"), {"x", "y"});
        if (!(raw(center_) < 0.0))
            throw InvalidBoundary(name + ": center point is not inside the domain");

        // Radius scale from a doubling search along a fan of rays.
        for (int i = 0; i < 64; ++i) {
            const double th = kTwoPi * i / 64.0;
            const Vec2 e(std::cos(th), std::sin(th));
            double r = 1e-3;
            while (raw(center_ + r * e) < 0.0) {
                r *= 2.0;
                if (r > 1e8)
                    throw InvalidBoundary(name + ": domain is unbounded along a ray");
            }
            rmax_ = std::max(rmax_, r);
        }
    }

    DomainBoundary::Kind kind() const override { return DomainBoundary::Kind::ImplicitLevelSet; }

    Vec2 eval(double t) const override
    {
        const double th = kTwoPi * wrap01(t);
        const Vec2 e(std::cos(th), std::sin(th));
        return center_ + radius(e) * e;
    }

    Vec2 deriv(double t) const override
    {
        const double th = kTwoPi * wrap01(t);
        const Vec2 e(std::cos(th), std::sin(th));
        const Vec2 de(-std::sin(th), std::cos(th));
        const double r = radius(e);
        const Vec2 g = grad(center_ + r * e);
        const double dr = -r * g.dot(de) / g.dot(e);
        return kTwoPi * (dr * e + r * de);
    }

    double level(const Vec2& p) const override
    {
        const double v = raw(p);
        const double g = grad(p).norm();
        return g > 1e-300 ? v / g : v;
    }

private:
    double raw(const Vec2& p) const { return f_({p.x(), p.y()}); }
    Vec2 grad(const Vec2& p) const { return {fx_({p.x(), p.y()}), fy_({p.x(), p.y()})}; }

    double radius(const Vec2& e) const
    {
        const double step = rmax_ / 400.0;
        double a = 0.0;
        double b = step;
        int guard = 0;
        while (raw(center_ + b * e) < 0.0) {
            a = b;
            b += step;
            if (++guard > 4000)
                throw NonConvergence(name + ": no boundary crossing along a ray");
        }
        const double tol = kBoundaryRootTolerance * rmax_;
        for (int it = 0; it < 200 && b - a > tol; ++it) {
            const double m = 0.5 * (a + b);
            (raw(center_ + m * e) < 0.0 ? a : b) = m;
        }
        return 0.5 * (a + b);
    }

    Vec2 center_;
    double rmax_ = 0.0;
    expr::Compiled f_;
    expr::Compiled fx_;
    expr::Compiled fy_;
};

DomainBoundary finish(std::shared_ptr<DomainBoundary::Impl> impl)
{
    impl->finalize();
    return DomainBoundary(std::move(impl));
}

} // namespace

DomainBoundary::DomainBoundary(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

DomainBoundary DomainBoundary::circle(double radius, Vec2 center)
{
    if (!(radius > 0.0))
        throw InvalidBoundary("circle radius must be positive");
    return finish(std::make_shared<CircleImpl>(radius, std::move(center)));
}

DomainBoundary DomainBoundary::ellipse(double semi_x, double semi_y, Vec2 center)
{
    if (!(semi_x > 0.0 && semi_y > 0.0))
        throw InvalidBoundary("ellipse semi-axes must be positive");
    return finish(std::make_shared<EllipseImpl>(semi_x, semi_y, std::move(center)));
}

DomainBoundary DomainBoundary::kite() { return finish(std::make_shared<KiteImpl>()); }

DomainBoundary DomainBoundary::level_set(const std::string& expression, Vec2 center)
{
    return finish(std::make_shared<LevelSetImpl>(expression, std::move(center)));
}

DomainBoundary::Kind DomainBoundary::kind() const { return impl_->kind(); }
const std::string& DomainBoundary::name() const { return impl_->name; }
Vec2 DomainBoundary::param_eval(double t) const { return impl_->eval(wrap01(t)); }
Vec2 DomainBoundary::param_derivative(double t) const { return impl_->deriv(wrap01(t)); }

Vec2 DomainBoundary::outward_normal(double t) const
{
    const Vec2 d = param_derivative(t);
    return Vec2(d.y(), -d.x()).normalized(); // counterclockwise orientation
}

double DomainBoundary::level_eval(const Vec2& p) const { return impl_->level(p); }
const BoundingBox& DomainBoundary::bounding_box() const { return impl_->bbox; }
double DomainBoundary::diameter() const { return impl_->bbox.diameter(); }
double DomainBoundary::arc_length() const { return impl_->length; }
double DomainBoundary::area() const { return impl_->enclosed_area; }
const std::vector<Vec2>& DomainBoundary::proxy() const { return impl_->proxy; }
const std::vector<double>& DomainBoundary::proxy_params() const { return impl_->params; }

double DomainBoundary::param_at_arc_fraction(double fraction) const
{
    fraction = wrap01(fraction);
    const auto& cum = impl_->cum_length;
    const double target = fraction * impl_->length;
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cum.begin()) - 1));
    const double seg = cum[i + 1] - cum[i];
    const double w = seg > 0.0 ? (target - cum[i]) / seg : 0.0;
    const double dt = 1.0 / static_cast<double>(kProxySamples);
    return wrap01(impl_->params[std::min(i, kProxySamples - 1)] + w * dt);
}

double DomainBoundary::nearest_param(const Vec2& p) const
{
    const auto& pts = impl_->proxy;
    std::size_t best = 0;
    double best_d2 = (pts[0] - p).squaredNorm();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d2 = (pts[i] - p).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    const double dt = 1.0 / static_cast<double>(kProxySamples);
    const double diam = diameter();
    auto g = [&](double t) { return (param_eval(t) - p).dot(param_derivative(t)); };

    // Bracket the stationary point around the best sample.
    double a = impl_->params[best] - dt;
    double b = impl_->params[best] + dt;
    double ga = g(a);
    double gb = g(b);
    if (!(ga <= 0.0 && gb >= 0.0)) {
        // p sits (numerically) on a sample or at a degenerate configuration;
        // the best sample is already accurate to O(dt^2).
        if (std::abs(g(impl_->params[best])) <= 1e-14 * diam * diam)
            return impl_->params[best];
        a = impl_->params[best] - 3 * dt;
        b = impl_->params[best] + 3 * dt;
        ga = g(a);
        gb = g(b);
        if (!(ga <= 0.0 && gb >= 0.0))
            throw NonConvergence(impl_->name + ": nearest-point projection could not bracket");
    }

    double t = impl_->params[best];
    for (int it = 0; it < 100; ++it) {
        const double gt = g(t);
        if (std::abs(gt) <= 1e-15 * diam * diam || b - a <= 1e-16)
            return wrap01(t);
        if (gt < 0.0)
            a = t;
        else
            b = t;
        const double h = 1e-7;
        const double dg = (g(t + h) - g(t - h)) / (2.0 * h);
        double next = dg > 0.0 ? t - gt / dg : 0.5 * (a + b);
        if (!(next > a && next < b))
            next = 0.5 * (a + b);
        if (std::abs(next - t) <= 1e-16)
            return wrap01(next);
        t = next;
    }
    throw NonConvergence(impl_->name + ": nearest-point projection did not converge in 100 iterations");
}

double signed_distance(const DomainBoundary& boundary, const Vec2& p)
{
    const double t = boundary.nearest_param(p);
    const double dist = (boundary.param_eval(t) - p).norm();
    const double lv = boundary.level_eval(p);
    if (dist <= kBoundaryRootTolerance * boundary.diameter())
        return 0.0;
    return lv < 0.0 ? -dist : dist;
}

AnchorResult anchor_point(const DomainBoundary& boundary, const Vec2& x, const Vec2& n, double step)
{
    const double diam = boundary.diameter();
    const double tol = kBoundaryRootTolerance * diam;
    if (step <= 0.0)
        step = 1e-2 * diam;
    const Vec2 dir = n.normalized();

    AnchorResult res;
    res.direction = dir;
    const double l0 = boundary.level_eval(x);
    if (l0 > 1e-9 * diam) {
        std::ostringstream os;
        os << "transfer path origin (" << x.x() << ", " << x.y() << ") lies outside "
           << boundary.name();
        throw NoIntersection(os.str());
    }
    if (l0 >= -tol) {
        res.anchor = x;
        res.length = 0.0;
        return res;
    }

    double a = 0.0;
    double b = step;
    while (boundary.level_eval(x + b * dir) <= 0.0) {
        a = b;
        b += step;
        if (b > 2.0 * diam) {
            std::ostringstream os;
            os << "ray from (" << x.x() << ", " << x.y() << ") along (" << dir.x() << ", "
               << dir.y() << ") does not leave " << boundary.name();
            throw NoIntersection(os.str());
        }
    }
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        const double m = 0.5 * (a + b);
        (boundary.level_eval(x + m * dir) <= 0.0 ? a : b) = m;
    }
    res.length = 0.5 * (a + b);
    res.anchor = x + res.length * dir;

    // Re-entry scan beyond the anchor.
    const double scan = std::max(step, 1e-2 * diam);
    for (double s = res.length + scan; s <= 2.0 * diam; s += scan) {
        if (boundary.level_eval(x + s * dir) < 0.0) {
            res.reenters = true;
            break;
        }
    }
    return res;
}

} // namespace uhdg
