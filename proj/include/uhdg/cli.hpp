#pragma once

// Run configuration, output files and the command driver behind the
// `uhdg` executable.

#include "uhdg/geometry.hpp"
#include "uhdg/hdg_core.hpp"
#include "uhdg/mesh.hpp"
#include "uhdg/nonlinear.hpp"
#include "uhdg/problem.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uhdg {

enum class Subcommand { Solve, Study, CheckMesh, ProjectTest };

struct BoundaryConfig {
    std::string kind = "circle"; ///< circle, ellipse, kite or level_set
    double radius = 1.0;
    double semi_x = 1.0;
    double semi_y = 1.0;
    Vec2 center{0.0, 0.0};
    std::string expression; ///< level_set only
};

struct ProblemConfig {
    KappaVariant variant = KappaVariant::OfU;
    std::string kappa = "1";
    double kappa_lo = 1.0;
    double kappa_hi = 1.0;
    std::string f0 = "0";
    std::optional<std::string> u_expr; ///< manufactured solution
    std::optional<std::string> source; ///< f(x, y, u) when no u_expr is given
    std::optional<std::string> g;      ///< Dirichlet datum when no u_expr is given
};

struct AcceptanceConfig {
    std::vector<std::string> norms{"u", "q"};
    double finest_band = 0.2;
    double coarsest_band = 0.5;
};

struct RunConfig {
    Subcommand subcommand = Subcommand::Solve;
    BoundaryConfig boundary;
    ProblemConfig problem;
    int k = 1;
    std::vector<double> h;
    MeshPolicy mesh_policy;
    double tau_interior = 1.0;
    double tau_boundary = 1.0;
    PicardOptions picard;
    AcceptanceConfig acceptance;
    std::string output_dir = "out";
    bool strict = false;
    nlohmann::json source_json; ///< the parsed document, echoed into outputs

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Reads the JSON run configuration. `mesh` takes either {"h": [...]} or
/// {"base_h": h0, "halvings": n}. Throws ConfigError naming the offending
/// field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);
std::string config_hash_hex(const nlohmann::json& j);

DomainBoundary make_boundary(const BoundaryConfig& b);
ProblemSpec make_problem(const RunConfig& cfg);

/// Per-element coefficients as plain text: header, then one line per
/// element with the q, u (and sigma) coefficients and one line per face
/// with the trace coefficients.
void write_solution(std::ostream& os, const DiscreteSolution& sol, const std::string& header);
/// Throws MeshFormatError on malformed input.
DiscreteSolution read_solution(std::istream& is);

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitAdmissibility = 3,
    kExitSolver = 4,
    kExitAcceptance = 5,
};

struct RunOptions {
    std::optional<std::string> output_dir; ///< overrides the config and the environment
    bool strict = false;                   ///< or-ed with the config flag
    bool quiet = false;
};

/// Executes the configured subcommand and writes its artifacts. Errors are
/// reported on `log` and mapped to the exit codes above. The environment
/// variable UHDG_OUTPUT_DIR overrides the configured output directory.
int run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);
/// Loads the configuration first; configuration errors return kExitConfig.
int run_file(const std::string& config_path, const RunOptions& opts, std::ostream& log);

} // namespace uhdg
