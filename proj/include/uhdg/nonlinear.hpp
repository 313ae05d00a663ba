#pragma once

// Picard iteration for the kappa(u) and kappa(grad u) problems.

#include "uhdg/error.hpp"
#include "uhdg/hdg_core.hpp"

#include <json.hpp>

#include <vector>

namespace uhdg {

struct PicardOptions {
    double tol = 1e-10;      ///< relative increment tolerance
    int max_iters = 100;
    double relaxation = 1.0; ///< omega in (0, 1]
    bool trace_contraction = true;
    int divergence_window = 3;       ///< consecutive growing increments that abort
    double divergence_factor = 10.0; ///< growth per iteration counted as divergent

    /// Throws ConfigError.
    void validate() const;
};

struct IterationTrace {
    std::vector<double> increments;          ///< L2 increment (combined norm for the gradient variant)
    std::vector<double> relative_increments; ///< increment over the norm of the new iterate
    std::vector<double> u_increments;
    std::vector<double> sigma_increments;    ///< gradient variant only
    std::vector<double> ratios;              ///< increments[m] / increments[m-1]
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    std::size_t clamp_events = 0;
};

void to_json(nlohmann::json& j, const IterationTrace& t);

class MaxItersExceeded : public Error {
public:
    MaxItersExceeded(const std::string& what, IterationTrace trace)
        : Error(what), trace_(std::move(trace))
    {
    }
    [[nodiscard]] const IterationTrace& trace() const { return trace_; }

private:
    IterationTrace trace_;
};

struct PicardResult {
    DiscreteSolution solution;
    IterationTrace trace;
};

/// Starts from an initial iterate (zero by default). Throws MaxItersExceeded
/// on divergence or when max_iters is reached.
PicardResult solve_kappa_u(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts = {},
                           const DiscreteSolution* initial = nullptr);
PicardResult solve_kappa_grad(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts = {},
                              const DiscreteSolution* initial = nullptr);

/// Dispatches on the kappa variant of the problem.
PicardResult solve_picard(const ProblemSpec& problem, const HdgSpace& space, const PicardOptions& opts = {},
                          const DiscreteSolution* initial = nullptr);

} // namespace uhdg
