#include "uhdg/nonlinear.hpp"

#include <cmath>
#include <string>

namespace uhdg {

void PicardOptions::validate() const
{
    if (!(tol > 0.0))
        throw ConfigError("picard.tol must be positive");
    if (max_iters < 1)
        throw ConfigError("picard.max_iters must be at least 1");
    if (!(relaxation > 0.0 && relaxation <= 1.0))
        throw ConfigError("picard.relaxation must lie in (0, 1]");
    if (divergence_window < 1 || !(divergence_factor > 1.0))
        throw ConfigError("picard divergence detection parameters are invalid");
}

void to_json(nlohmann::json& j, const IterationTrace& t)
{
    j = {{"iterations", t.iterations},
         {"converged", t.converged},
         {"diverged", t.diverged},
         {"clamp_events", t.clamp_events},
         {"increments", t.increments},
         {"relative_increments", t.relative_increments},
         {"u_increments", t.u_increments},
         {"ratios", t.ratios}};
    if (!t.sigma_increments.empty())
        j["sigma_increments"] = t.sigma_increments;
}

namespace {

PicardResult iterate(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts,
                     const DiscreteSolution* initial, bool gradient)
{
    opts.validate();
    const int nb = space.nb();
    const int ne = space.mesh().num_elements();
    Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(nb, ne);
    Eigen::MatrixXd eta = gradient ? Eigen::MatrixXd::Zero(2 * nb, ne) : Eigen::MatrixXd();
    if (initial != nullptr) {
        if (initial->u.rows() != nb || initial->u.cols() != ne)
            throw ConfigError("initial iterate does not match the discretization");
        zeta = initial->u;
        if (gradient && initial->has_sigma())
            eta = initial->sigma;
    }

    SkeletonSolver solver;
    PicardResult res;
    IterationTrace& tr = res.trace;
    const double w = opts.relaxation;
    int growing = 0;
    for (int m = 0; m < opts.max_iters; ++m) {
        const FrozenFields frozen(space, problem, zeta, gradient ? eta : Eigen::MatrixXd());
        res.solution = solver.solve(space, frozen);
        tr.clamp_events += frozen.clamp_events();
        const DiscreteSolution& s = res.solution;

        const double du = w * (s.u - zeta).norm();
        zeta = w * s.u + (1.0 - w) * zeta;
        double inc = du;
        double size = zeta.norm();
        tr.u_increments.push_back(du);
        if (gradient) {
            const double ds = w * (s.sigma - eta).norm();
            eta = w * s.sigma + (1.0 - w) * eta;
            tr.sigma_increments.push_back(ds);
            inc = std::hypot(du, ds);
            size = std::hypot(size, eta.norm());
        }
        tr.iterations = m + 1;
        tr.increments.push_back(inc);
        const double rel = size > 0.0 ? inc / size : inc;
        tr.relative_increments.push_back(rel);
        if (m > 0 && opts.trace_contraction) {
            const double prev = tr.increments[static_cast<std::size_t>(m - 1)];
            tr.ratios.push_back(prev > 0.0 ? inc / prev : 0.0);
        }
        if (!std::isfinite(inc)) {
            tr.diverged = true;
            throw MaxItersExceeded("fixed-point iteration produced non-finite values", tr);
        }
        if (rel <= opts.tol) {
            tr.converged = true;
            return res;
        }
        if (m > 0) {
            const double prev = tr.increments[static_cast<std::size_t>(m - 1)];
            growing = inc >= opts.divergence_factor * prev ? growing + 1 : 0;
            if (growing >= opts.divergence_window) {
                tr.diverged = true;
                throw MaxItersExceeded("fixed-point iteration diverges: increment grew by at least " +
                                           std::to_string(opts.divergence_factor) + "x for " +
                                           std::to_string(opts.divergence_window) + " consecutive iterations",
                                       tr);
            }
        }
    }
    throw MaxItersExceeded("fixed-point iteration did not converge in " + std::to_string(opts.max_iters) +
                               " iterations",
                           tr);
}

} // namespace

PicardResult solve_kappa_u(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts,
                           const DiscreteSolution* initial)
{
    if (problem.variant() != KappaVariant::OfU)
        throw ConfigError("solve_kappa_u needs a kappa(u) problem");
    return iterate(problem, space, opts, initial, false);
}

PicardResult solve_kappa_grad(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts,
                              const DiscreteSolution* initial)
{
    if (problem.variant() != KappaVariant::OfGrad)
        throw ConfigError("solve_kappa_grad needs a kappa(grad u) problem");
    return iterate(problem, space, opts, initial, true);
}

PicardResult solve_picard(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts,
                          const DiscreteSolution* initial)
{
    return problem.variant() == KappaVariant::OfGrad ? solve_kappa_grad(problem, space, opts, initial)
                                                     : solve_kappa_u(problem, space, opts, initial);
}

} // namespace uhdg
