#include "uhdg/cli.hpp"

#include "uhdg/error.hpp"
#include "uhdg/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace uhdg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Object reader that names fields by their dotted path and rejects unknown keys.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError("field '" + display() + "': expected an object");
    }

    [[nodiscard]] bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <class T>
    T get(const std::string& key, T fallback)
    {
        if (!has(key))
            return fallback;
        return convert<T>(j_.at(key), key);
    }

    template <class T>
    T require(const std::string& key)
    {
        if (!has(key))
            throw ConfigError("field '" + name(key) + "' is required");
        return convert<T>(j_.at(key), key);
    }

    template <class T>
    std::optional<T> optional(const std::string& key)
    {
        if (!has(key) || j_.at(key).is_null())
            return std::nullopt;
        return convert<T>(j_.at(key), key);
    }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        return j_.at(key);
    }

    [[nodiscard]] std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (seen_.count(item.key()) == 0)
                throw ConfigError("unknown field '" + name(item.key()) + "'");
    }

private:
    template <class T>
    T convert(const json& v, const std::string& key) const
    {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number())
                throw ConfigError("field '" + name(key) + "': expected a number");
        } else if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer())
                throw ConfigError("field '" + name(key) + "': expected an integer");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean())
                throw ConfigError("field '" + name(key) + "': expected true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string())
                throw ConfigError("field '" + name(key) + "': expected a string");
        }
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError("field '" + name(key) + "' has the wrong type");
        }
    }

    [[nodiscard]] std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Subcommand parse_subcommand(const std::string& s)
{
    if (s == "solve")
        return Subcommand::Solve;
    if (s == "study")
        return Subcommand::Study;
    if (s == "check-mesh")
        return Subcommand::CheckMesh;
    if (s == "project-test")
        return Subcommand::ProjectTest;
    throw ConfigError("field 'subcommand': unknown value '" + s + "'");
}

std::string subcommand_name(Subcommand s)
{
    switch (s) {
    case Subcommand::Solve:
        return "solve";
    case Subcommand::Study:
        return "study";
    case Subcommand::CheckMesh:
        return "check-mesh";
    case Subcommand::ProjectTest:
        return "project-test";
    }
    return "solve";
}

Vec2 parse_point(const json& v, const std::string& field)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("field '" + field + "': expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

BoundaryConfig parse_boundary(const json& j)
{
    Fields f(j, "boundary");
    BoundaryConfig b;
    b.kind = f.get<std::string>("kind", b.kind);
    b.radius = f.get("radius", b.radius);
    b.semi_x = f.get("semi_x", b.semi_x);
    b.semi_y = f.get("semi_y", b.semi_y);
    if (f.has("center"))
        b.center = parse_point(f.raw("center"), "boundary.center");
    b.expression = f.get<std::string>("expression", "");
    f.finish();
    return b;
}

ProblemConfig parse_problem(const json& j)
{
    Fields f(j, "problem");
    ProblemConfig p;
    const std::string v = f.get<std::string>("variant", "u");
    if (v == "u")
        p.variant = KappaVariant::OfU;
    else if (v == "grad")
        p.variant = KappaVariant::OfGrad;
    else
        throw ConfigError("field 'problem.variant': expected \"u\" or \"grad\", got '" + v + "'");
    p.kappa = f.require<std::string>("kappa");
    p.kappa_lo = f.require<double>("kappa_lo");
    p.kappa_hi = f.require<double>("kappa_hi");
    p.f0 = f.get<std::string>("f0", p.f0);
    p.u_expr = f.optional<std::string>("u_expr");
    p.source = f.optional<std::string>("source");
    p.g = f.optional<std::string>("g");
    f.finish();
    return p;
}

void parse_mesh(const json& j, RunConfig& cfg)
{
    Fields f(j, "mesh");
    if (f.has("h")) {
        const json& h = f.raw("h");
        if (!h.is_array() || h.empty())
            throw ConfigError("field 'mesh.h': expected a non-empty list of numbers");
        for (const json& v : h) {
            if (!v.is_number())
                throw ConfigError("field 'mesh.h': expected a non-empty list of numbers");
            cfg.h.push_back(v.get<double>());
        }
        if (f.has("base_h") || f.has("halvings"))
            throw ConfigError("field 'mesh.h' conflicts with 'mesh.base_h'");
    } else {
        const double h0 = f.require<double>("base_h");
        const int n = f.get("halvings", 0);
        if (n < 0)
            throw ConfigError("field 'mesh.halvings' must be nonnegative");
        for (int i = 0; i <= n; ++i)
            cfg.h.push_back(h0 / std::pow(2.0, i));
    }
    cfg.mesh_policy.gap_fraction = f.get("gap_fraction", cfg.mesh_policy.gap_fraction);
    cfg.mesh_policy.beta_max = f.get("beta_max", cfg.mesh_policy.beta_max);
    cfg.mesh_policy.c_prox = f.get("c_prox", cfg.mesh_policy.c_prox);
    cfg.mesh_policy.smoothing_sweeps = f.get("smoothing_sweeps", cfg.mesh_policy.smoothing_sweeps);
    f.finish();
}

void parse_tau(const json& j, RunConfig& cfg)
{
    if (j.is_number()) {
        cfg.tau_interior = cfg.tau_boundary = j.get<double>();
        return;
    }
    Fields f(j, "tau");
    cfg.tau_interior = f.get("interior", cfg.tau_interior);
    cfg.tau_boundary = f.get("boundary", cfg.tau_boundary);
    f.finish();
}

PicardOptions parse_picard(const json& j)
{
    Fields f(j, "picard");
    PicardOptions o;
    o.tol = f.get("tol", o.tol);
    o.max_iters = f.get("max_iters", o.max_iters);
    o.relaxation = f.get("relaxation", o.relaxation);
    o.trace_contraction = f.get("trace_contraction", o.trace_contraction);
    o.divergence_window = f.get("divergence_window", o.divergence_window);
    o.divergence_factor = f.get("divergence_factor", o.divergence_factor);
    f.finish();
    return o;
}

AcceptanceConfig parse_acceptance(const json& j)
{
    Fields f(j, "acceptance");
    AcceptanceConfig a;
    if (f.has("norms")) {
        const json& n = f.raw("norms");
        if (!n.is_array() || n.empty())
            throw ConfigError("field 'acceptance.norms': expected a non-empty list of names");
        a.norms.clear();
        for (const json& v : n) {
            if (!v.is_string())
                throw ConfigError("field 'acceptance.norms': expected a non-empty list of names");
            a.norms.push_back(v.get<std::string>());
        }
    }
    a.finest_band = f.get("finest_band", a.finest_band);
    a.coarsest_band = f.get("coarsest_band", a.coarsest_band);
    f.finish();
    return a;
}

std::string config_header(const RunConfig& cfg)
{
    return "uhdg " + subcommand_name(cfg.subcommand) + "\nconfig_hash " + config_hash_hex(cfg.source_json) +
           "\nconfig " + cfg.source_json.dump();
}

void write_header(std::ostream& os, const std::string& header)
{
    std::istringstream in(header);
    for (std::string line; std::getline(in, line);)
        os << "# " << line << '\n';
}

json json_document(const RunConfig& cfg)
{
    json j;
    j["command"] = subcommand_name(cfg.subcommand);
    j["config_hash"] = config_hash_hex(cfg.source_json);
    j["config"] = cfg.source_json;
    return j;
}

std::ofstream open_output(const fs::path& p)
{
    std::ofstream os(p);
    if (!os)
        throw SolverFailure("cannot open '" + p.string() + "' for writing");
    os << std::setprecision(17);
    return os;
}

void write_json(const fs::path& p, const json& j)
{
    std::ofstream os = open_output(p);
    os << j.dump(2) << '\n';
}

std::string level_name(const std::string& stem, std::size_t i, const std::string& ext)
{
    return stem + "_" + std::to_string(i) + ext;
}

// Everything needed to run one level of the mesh sequence.
struct Level {
    Triangulation mesh;
    HdgSpace space;
    AdmissibilityReport admissibility;
};

Level build_level(const RunConfig& cfg, const DomainBoundary& boundary, const ProblemSpec& problem, double h)
{
    Triangulation mesh = build_admissible_mesh(boundary, h, cfg.mesh_policy);
    HdgSpace space(mesh, boundary, cfg.k);
    AdmissibilityReport rep = check_admissibility(space.mesh(), space.transfer(), problem.kappa_lo(),
                                                  problem.kappa_hi(), problem.tau_bar(), cfg.k,
                                                  cfg.mesh_policy.c_prox);
    return {std::move(mesh), std::move(space), std::move(rep)};
}

class Driver {
public:
    Driver(const RunConfig& cfg, fs::path out, bool strict, bool quiet, std::ostream& log)
        : cfg_(cfg), out_(std::move(out)), strict_(strict), quiet_(quiet), log_(log),
          boundary_(make_boundary(cfg.boundary)), problem_(make_problem(cfg)), header_(config_header(cfg))
    {
        if (cfg.problem.u_expr)
            mc_.emplace(make_manufactured(*cfg.problem.u_expr, cfg.problem.variant, cfg.problem.kappa, cfg.problem.f0));
    }

    int run()
    {
        fs::create_directories(out_);
        switch (cfg_.subcommand) {
        case Subcommand::CheckMesh:
            return check_mesh();
        case Subcommand::Solve:
            return solve();
        case Subcommand::Study:
            return study();
        case Subcommand::ProjectTest:
            return project_test();
        }
        return kExitConfig;
    }

private:
    void note(const std::string& s) const
    {
        if (!quiet_)
            log_ << s << '\n';
    }

    Level level(std::size_t i)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Level l = build_level(cfg_, boundary_, problem_, cfg_.h[i]);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream s;
        s << "level " << i << ": h " << cfg_.h[i] << ", " << l.mesh.num_elements() << " elements, "
          << l.space.num_trace_dofs() << " trace dofs, admissible " << (l.admissibility.overall_ok ? "yes" : "no")
          << " (" << std::fixed << std::setprecision(2) << dt << " s)";
        note(s.str());
        write_json(out_ / level_name("admissibility", i, ".json"), admissibility_doc(l.admissibility));
        std::ofstream m = open_output(out_ / level_name("mesh", i, ".txt"));
        write_header(m, header_);
        write_mesh(m, l.space.mesh(), l.space.transfer());
        return l;
    }

    json admissibility_doc(const AdmissibilityReport& r) const
    {
        json j = json_document(cfg_);
        json rep;
        to_json(rep, r);
        j["report"] = rep;
        return j;
    }

    int check_mesh()
    {
        bool ok = true;
        for (std::size_t i = 0; i < cfg_.h.size(); ++i)
            ok = level(i).admissibility.overall_ok && ok;
        if (!ok && strict_) {
            log_ << "admissibility check failed\n";
            return kExitAdmissibility;
        }
        return kExitOk;
    }

    // Returns the exit code when the level must not be solved.
    std::optional<int> gate(const Level& l) const
    {
        if (strict_ && !l.admissibility.overall_ok) {
            log_ << "admissibility check failed on a mesh of size " << l.mesh.mesh_size() << '\n';
            return kExitAdmissibility;
        }
        return std::nullopt;
    }

    PicardResult picard(const Level& l, std::size_t i)
    {
        try {
            PicardResult r = solve_picard(problem_, l.space, cfg_.picard);
            std::ostringstream s;
            s << "  picard: " << r.trace.iterations << " iterations, final relative increment "
              << std::scientific << std::setprecision(3) << r.trace.relative_increments.back();
            note(s.str());
            return r;
        } catch (const MaxItersExceeded& e) {
            write_trace(e.trace(), i);
            throw;
        }
    }

    void write_trace(const IterationTrace& t, std::size_t i) const
    {
        json j = json_document(cfg_);
        json tj;
        to_json(tj, t);
        j["trace"] = tj;
        write_json(out_ / level_name("trace", i, ".json"), j);
    }

    int solve()
    {
        for (std::size_t i = 0; i < cfg_.h.size(); ++i) {
            const Level l = level(i);
            if (const auto code = gate(l))
                return *code;
            const PicardResult r = picard(l, i);
            write_trace(r.trace, i);
            std::ofstream os = open_output(out_ / level_name("solution", i, ".txt"));
            write_solution(os, r.solution, header_);
            if (mc_) {
                json j = json_document(cfg_);
                json e;
                to_json(e, compute_errors(*mc_, problem_, l.space, r.solution));
                j["errors"] = e;
                write_json(out_ / level_name("errors", i, ".json"), j);
            }
        }
        return kExitOk;
    }

    int study()
    {
        std::vector<ErrorReport> reports;
        std::vector<int> iterations;
        for (std::size_t i = 0; i < cfg_.h.size(); ++i) {
            const Level l = level(i);
            if (const auto code = gate(l))
                return *code;
            const PicardResult r = picard(l, i);
            write_trace(r.trace, i);
            reports.push_back(compute_errors(*mc_, problem_, l.space, r.solution));
            iterations.push_back(r.trace.iterations);
            std::ostringstream s;
            s << "  errors: u " << std::scientific << std::setprecision(3) << reports.back().u_error << ", q "
              << reports.back().q_error;
            note(s.str());
        }
        write_errors_csv(reports, iterations);
        const EocTable t = eoc_table(reports);
        {
            std::ofstream os = open_output(out_ / "eoc.csv");
            write_csv(os, t, header_);
        }
        json ej = json_document(cfg_);
        json tj;
        to_json(tj, t);
        ej["eoc"] = tj;
        write_json(out_ / "eoc.json", ej);
        write_gnuplot((out_ / "eoc_").string(), t, header_);
        return acceptance(t);
    }

    void write_errors_csv(const std::vector<ErrorReport>& reports, const std::vector<int>& iterations) const
    {
        std::ofstream os = open_output(out_ / "errors.csv");
        write_header(os, header_);
        const bool sigma = reports.front().sigma_error.has_value();
        os << "h,h_max,elements,trace_dofs,iterations,u,q";
        if (sigma)
            os << ",sigma";
        os << ",jump,transfer,triple,lambda_q,lambda_u";
        if (sigma)
            os << ",lambda_sigma";
        os << '\n';
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const ErrorReport& r = reports[i];
            os << r.h << ',' << r.h_max << ',' << r.elements << ',' << r.trace_dofs << ',' << iterations[i] << ',' << r.u_error << ','
               << r.q_error;
            if (sigma)
                os << ',' << *r.sigma_error;
            os << ',' << r.jump << ',' << r.transfer_error << ',' << r.triple.total << ',' << r.lambda_q << ','
               << r.lambda_u;
            if (sigma)
                os << ',' << *r.lambda_sigma;
            os << '\n';
        }
    }

    int acceptance(const EocTable& t) const
    {
        const double target = cfg_.k + 1.0;
        const AcceptanceConfig& a = cfg_.acceptance;
        json checks = json::array();
        bool pass = true;
        for (const std::string& name : a.norms) {
            const auto it = std::find(t.norms.begin(), t.norms.end(), name);
            const auto n = static_cast<std::size_t>(it - t.norms.begin());
            const std::size_t pairs = t.rates[n].size();
            for (const bool finest : {true, false}) {
                if (!finest && pairs < 2)
                    continue;
                const std::size_t p = finest ? pairs - 1 : 0;
                const double band = finest ? a.finest_band : a.coarsest_band;
                json c;
                c["norm"] = name;
                c["pair"] = finest ? "finest" : "coarsest";
                c["lo"] = target - band;
                c["hi"] = target + band;
                const bool exact = t.exact[n][p];
                c["exact"] = exact;
                bool ok = exact;
                if (!exact) {
                    const double r = t.rates[n][p];
                    c["rate"] = r;
                    ok = r >= target - band && r <= target + band;
                }
                c["pass"] = ok;
                pass = pass && ok;
                checks.push_back(c);
                std::ostringstream s;
                s << "  rate " << name << " (" << (finest ? "finest" : "coarsest") << " pair): "
                  << (exact ? std::string("exact") : std::to_string(t.rates[n][p])) << " in [" << target - band
                  << ", " << target + band << "] " << (ok ? "pass" : "FAIL");
                note(s.str());
            }
        }
        json j = json_document(cfg_);
        j["pass"] = pass;
        j["checks"] = checks;
        write_json(out_ / "acceptance.json", j);
        if (!pass)
            log_ << "convergence rates outside the acceptance bands\n";
        return pass ? kExitOk : kExitAcceptance;
    }

    int project_test()
    {
        std::vector<ErrorReport> reports;
        json levels = json::array();
        bool pass = true;
        for (std::size_t i = 0; i < cfg_.h.size(); ++i) {
            const Level l = level(i);
            const ScalarField u = [&](const Vec2& x) { return mc_->u(x); };
            const VectorField q = [&](const Vec2& x) { return mc_->q(x); };
            double worst = 0.0;
            for (int t = 0; t < l.mesh.num_elements(); ++t) {
                const auto tau = element_tau(l.space, problem_, t);
                const ElementBasis& eb = l.space.element(t);
                worst = std::max(worst, projection_residuals(eb, q, u, tau, hdg_project(eb, q, u, tau)).max());
            }
            const DiscreteSolution p = project_exact(*mc_, problem_, l.space);
            ErrorReport r = compute_errors(*mc_, problem_, l.space, p);
            json lj;
            lj["h"] = r.h;
            lj["elements"] = r.elements;
            lj["max_residual"] = worst;
            lj["I_q"] = r.I_q;
            lj["I_u"] = r.I_u;
            lj["lambda_q"] = r.lambda_q;
            lj["lambda_u"] = r.lambda_u;
            levels.push_back(lj);
            pass = pass && worst <= 1e-10;
            reports.push_back(std::move(r));
        }
        json j = json_document(cfg_);
        j["levels"] = levels;
        if (reports.size() >= 2) {
            json rates;
            for (const char* name : {"I_u", "I_q"}) {
                std::vector<double> e;
                std::vector<double> h;
                for (const ErrorReport& r : reports) {
                    e.push_back(std::string(name) == "I_u" ? r.I_u : r.I_q);
                    h.push_back(r.h);
                }
                try {
                    const std::vector<double> rs = eoc(e, h);
                    rates[name] = rs;
                    pass = pass && rs.back() >= cfg_.k + 0.8;
                } catch (const ZeroError&) {
                    rates[name] = "exact";
                }
            }
            j["rates"] = rates;
        }
        j["pass"] = pass;
        write_json(out_ / "projection.json", j);
        note(std::string("projection test ") + (pass ? "pass" : "FAIL"));
        return pass ? kExitOk : kExitAcceptance;
    }

    const RunConfig& cfg_;
    fs::path out_;
    bool strict_;
    bool quiet_;
    std::ostream& log_;
    DomainBoundary boundary_;
    ProblemSpec problem_;
    std::optional<ManufacturedCase> mc_;
    std::string header_;
};

} // namespace

void RunConfig::validate() const
{
    if (k < 0 || k > 3)
        throw ConfigError("field 'k': must lie in [0, 3]");
    if (h.empty())
        throw ConfigError("field 'mesh': at least one mesh size is required");
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !std::isfinite(h[i]))
            throw ConfigError("field 'mesh.h': sizes must be positive");
        if (i > 0 && !(h[i] < h[i - 1]))
            throw ConfigError("field 'mesh.h': sizes must strictly decrease");
    }
    if (!(problem.kappa_lo > 0.0) || !(problem.kappa_hi >= problem.kappa_lo))
        throw ConfigError("field 'problem.kappa_lo': bounds must satisfy 0 < kappa_lo <= kappa_hi");
    if (!(tau_interior > 0.0) || !(tau_boundary > 0.0))
        throw ConfigError("field 'tau': stabilization must be positive");
    try {
        picard.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("field 'picard': ") + e.what());
    }
    if (problem.u_expr) {
        if (problem.source || problem.g)
            throw ConfigError("field 'problem.u_expr' conflicts with 'problem.source' and 'problem.g'");
    } else {
        if (!problem.source)
            throw ConfigError("field 'problem.source' is required without 'problem.u_expr'");
        if (!problem.g)
            throw ConfigError("field 'problem.g' is required without 'problem.u_expr'");
        if (subcommand == Subcommand::Study || subcommand == Subcommand::ProjectTest)
            throw ConfigError("field 'problem.u_expr' is required by '" + subcommand_name(subcommand) + "'");
    }
    if (subcommand == Subcommand::Study && h.size() < 2)
        throw ConfigError("field 'mesh': 'study' needs at least two mesh sizes");
    for (const std::string& n : acceptance.norms) {
        const bool known = n == "u" || n == "q" || n == "jump" || n == "transfer" || n == "triple" ||
                           n == "lambda_q" || n == "lambda_u" ||
                           (problem.variant == KappaVariant::OfGrad && (n == "sigma" || n == "lambda_sigma"));
        if (!known)
            throw ConfigError("field 'acceptance.norms': unknown norm '" + n + "'");
    }
    if (!(acceptance.finest_band > 0.0) || !(acceptance.coarsest_band > 0.0))
        throw ConfigError("field 'acceptance': bands must be positive");
    if (mesh_policy.gap_fraction < 0.0 || !(mesh_policy.beta_max > 1.0) || !(mesh_policy.c_prox > 0.0) ||
        mesh_policy.smoothing_sweeps < 0)
        throw ConfigError("field 'mesh': invalid mesh policy");
}

RunConfig parse_config(const json& j)
{
    Fields f(j, "");
    RunConfig cfg;
    cfg.source_json = j;
    cfg.subcommand = parse_subcommand(f.get<std::string>("subcommand", "solve"));
    if (f.has("boundary"))
        cfg.boundary = parse_boundary(f.raw("boundary"));
    cfg.problem = parse_problem(f.has("problem") ? f.raw("problem") : throw ConfigError("field 'problem' is required"));
    cfg.k = f.get("k", cfg.k);
    parse_mesh(f.has("mesh") ? f.raw("mesh") : throw ConfigError("field 'mesh' is required"), cfg);
    if (f.has("tau"))
        parse_tau(f.raw("tau"), cfg);
    if (f.has("picard"))
        cfg.picard = parse_picard(f.raw("picard"));
    if (f.has("acceptance"))
        cfg.acceptance = parse_acceptance(f.raw("acceptance"));
    cfg.output_dir = f.get<std::string>("output_dir", cfg.output_dir);
    cfg.strict = f.get("strict", cfg.strict);
    f.finish();
    if (cfg.subcommand == Subcommand::CheckMesh && !cfg.problem.u_expr) {
        if (!cfg.problem.source)
            cfg.problem.source = "0";
        if (!cfg.problem.g)
            cfg.problem.g = "0";
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot read config file '" + path + "'");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

std::uint64_t config_hash(const json& j)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const json& j)
{
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << config_hash(j);
    return s.str();
}

DomainBoundary make_boundary(const BoundaryConfig& b)
{
    if (b.kind == "circle")
        return DomainBoundary::circle(b.radius, b.center);
    if (b.kind == "ellipse")
        return DomainBoundary::ellipse(b.semi_x, b.semi_y, b.center);
    if (b.kind == "kite")
        return DomainBoundary::kite();
    if (b.kind == "level_set") {
        if (b.expression.empty())
            throw ConfigError("field 'boundary.expression' is required for a level set");
        return DomainBoundary::level_set(b.expression, b.center);
    }
    throw ConfigError("field 'boundary.kind': unknown value '" + b.kind + "'");
}

ProblemSpec make_problem(const RunConfig& cfg)
{
    const ProblemConfig& p = cfg.problem;
    ProblemSpec spec = p.u_expr
                           ? make_manufactured(*p.u_expr, p.variant, p.kappa, p.f0).problem(cfg.k, p.kappa_lo, p.kappa_hi)
                           : ProblemSpec(p.variant, p.kappa, *p.source, *p.g, p.kappa_lo, p.kappa_hi, cfg.k);
    spec.set_tau(cfg.tau_interior, cfg.tau_boundary);
    return spec;
}

void write_solution(std::ostream& os, const DiscreteSolution& sol, const std::string& header)
{
    write_header(os, header);
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    const Eigen::Index nb = sol.u.rows();
    os << "uhdg-solution v1\n";
    os << "k " << sol.k << " nb " << nb << " nf " << sol.uhat.rows() << " elements " << sol.u.cols() << " faces "
       << sol.uhat.cols() << " sigma " << (sol.has_sigma() ? 1 : 0) << '\n';
    for (Eigen::Index t = 0; t < sol.u.cols(); ++t) {
        os << "element " << t;
        for (Eigen::Index i = 0; i < sol.q.rows(); ++i)
            os << ' ' << sol.q(i, t);
        for (Eigen::Index i = 0; i < nb; ++i)
            os << ' ' << sol.u(i, t);
        if (sol.has_sigma())
            for (Eigen::Index i = 0; i < sol.sigma.rows(); ++i)
                os << ' ' << sol.sigma(i, t);
        os << '\n';
    }
    for (Eigen::Index f = 0; f < sol.uhat.cols(); ++f) {
        os << "face " << f;
        for (Eigen::Index i = 0; i < sol.uhat.rows(); ++i)
            os << ' ' << sol.uhat(i, f);
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

DiscreteSolution read_solution(std::istream& is)
{
    std::string line;
    do {
        if (!std::getline(is, line))
            throw MeshFormatError("empty solution file");
    } while (!line.empty() && line[0] == '#');
    if (line != "uhdg-solution v1")
        throw MeshFormatError("unrecognised solution header '" + line + "'");
    const auto expect = [&](const char* word) {
        std::string w;
        if (!(is >> w) || w != word)
            throw MeshFormatError(std::string("expected '") + word + "' in solution file");
    };
    const auto number = [&](const char* what) {
        long v = 0;
        if (!(is >> v) || v < 0)
            throw MeshFormatError(std::string("bad ") + what + " in solution file");
        return static_cast<Eigen::Index>(v);
    };
    const auto value = [&]() {
        double v = 0.0;
        if (!(is >> v))
            throw MeshFormatError("bad coefficient in solution file");
        return v;
    };
    DiscreteSolution sol;
    expect("k");
    sol.k = static_cast<int>(number("degree"));
    expect("nb");
    const Eigen::Index nb = number("nb");
    expect("nf");
    const Eigen::Index nf = number("nf");
    expect("elements");
    const Eigen::Index ne = number("element count");
    expect("faces");
    const Eigen::Index nfaces = number("face count");
    expect("sigma");
    const bool sigma = number("sigma flag") != 0;
    if (nb != poly_dim(sol.k) || nf != sol.k + 1)
        throw MeshFormatError("solution sizes do not match the degree");
    sol.q.resize(2 * nb, ne);
    sol.u.resize(nb, ne);
    if (sigma)
        sol.sigma.resize(2 * nb, ne);
    sol.uhat.resize(nf, nfaces);
    for (Eigen::Index t = 0; t < ne; ++t) {
        expect("element");
        if (number("element index") != t)
            throw MeshFormatError("elements out of order in solution file");
        for (Eigen::Index i = 0; i < 2 * nb; ++i)
            sol.q(i, t) = value();
        for (Eigen::Index i = 0; i < nb; ++i)
            sol.u(i, t) = value();
        if (sigma)
            for (Eigen::Index i = 0; i < 2 * nb; ++i)
                sol.sigma(i, t) = value();
    }
    for (Eigen::Index f = 0; f < nfaces; ++f) {
        expect("face");
        if (number("face index") != f)
            throw MeshFormatError("faces out of order in solution file");
        for (Eigen::Index i = 0; i < nf; ++i)
            sol.uhat(i, f) = value();
    }
    return sol;
}

int run(const RunConfig& cfg, const RunOptions& opts, std::ostream& log)
{
    fs::path out = cfg.output_dir;
    if (const char* env = std::getenv("UHDG_OUTPUT_DIR"); env != nullptr && *env != '\0')
        out = env;
    if (opts.output_dir)
        out = *opts.output_dir;
    try {
        cfg.validate();
        Driver d(cfg, out, opts.strict || cfg.strict, opts.quiet, log);
        return d.run();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NonDifferentiable& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidBoundary& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        log << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const fs::filesystem_error& e) {
        log << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    }
}

int run_file(const std::string& config_path, const RunOptions& opts, std::ostream& log)
{
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return run(cfg, opts, log);
}

} // namespace uhdg
