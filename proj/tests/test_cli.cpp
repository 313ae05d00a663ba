#include "uhdg/cli.hpp"
#include "uhdg/error.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace uhdg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("uhdg_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

json base_config()
{
    return json::parse(R"json({
        "subcommand": "solve",
        "boundary": {"kind": "circle"},
        "problem": {"variant": "u", "kappa": "2 + sin(u)", "kappa_lo": 1, "kappa_hi": 3, "u_expr": "exp(x)*sin(y)"},
        "k": 1,
        "mesh": {"h": [0.3]}
    })json");
}

int run_json(const json& j, const fs::path& out, std::string& log, bool strict = false)
{
    std::ostringstream os;
    RunOptions opts;
    opts.output_dir = out.string();
    opts.strict = strict;
    opts.quiet = true;
    int code = 0;
    try {
        code = run(parse_config(j), opts, os);
    } catch (const ConfigError& e) {
        os << "config error: " << e.what() << '\n';
        code = kExitConfig;
    }
    log = os.str();
    return code;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p);
    std::stringstream s;
    s << is.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("malformed configurations exit with status 2 and name the field")
{
    const fs::path out = scratch("bad");
    std::string log;
    SUBCASE("not JSON")
    {
        const fs::path f = fs::temp_directory_path() / "uhdg_cli_bad.json";
        std::ofstream(f) << "{ \"k\": 1, ";
        std::ostringstream os;
        CHECK(run_file(f.string(), {}, os) == kExitConfig);
        CHECK(os.str().find("not valid JSON") != std::string::npos);
        fs::remove(f);
    }
    SUBCASE("missing file")
    {
        std::ostringstream os;
        CHECK(run_file("/nonexistent/uhdg.json", {}, os) == kExitConfig);
    }
    SUBCASE("missing kappa")
    {
        json j = base_config();
        j["problem"].erase("kappa");
        CHECK(run_json(j, out, log) == kExitConfig);
        CHECK(log.find("problem.kappa") != std::string::npos);
    }
    SUBCASE("unknown field")
    {
        json j = base_config();
        j["picard"] = {{"tolerance", 1e-8}};
        CHECK(run_json(j, out, log) == kExitConfig);
        CHECK(log.find("picard.tolerance") != std::string::npos);
    }
    SUBCASE("wrong type")
    {
        json j = base_config();
        j["k"] = "two";
        CHECK(run_json(j, out, log) == kExitConfig);
        CHECK(log.find("'k'") != std::string::npos);
    }
    SUBCASE("mesh sizes must decrease")
    {
        json j = base_config();
        j["mesh"]["h"] = {0.2, 0.3};
        CHECK(run_json(j, out, log) == kExitConfig);
        CHECK(log.find("mesh.h") != std::string::npos);
    }
    SUBCASE("degree out of range")
    {
        json j = base_config();
        j["k"] = 4;
        CHECK(run_json(j, out, log) == kExitConfig);
    }
    SUBCASE("kappa bounds")
    {
        json j = base_config();
        j["problem"]["kappa_lo"] = 0.0;
        CHECK(run_json(j, out, log) == kExitConfig);
        CHECK(log.find("kappa_lo") != std::string::npos);
    }
    SUBCASE("unparsable expression")
    {
        json j = base_config();
        j["problem"]["kappa"] = "2 + sin(";
        CHECK(run_json(j, out, log) == kExitConfig);
    }
    SUBCASE("study needs a manufactured solution")
    {
        json j = base_config();
        j["subcommand"] = "study";
        j["mesh"]["h"] = {0.4, 0.2};
        j["problem"].erase("u_expr");
        j["problem"]["source"] = "1";
        j["problem"]["g"] = "0";
        CHECK(run_json(j, out, log) == kExitConfig);
        CHECK(log.find("problem.u_expr") != std::string::npos);
    }
    fs::remove_all(out);
}

TEST_CASE("check-mesh writes reports and honours strict mode")
{
    const fs::path out = scratch("check");
    json j = base_config();
    j["subcommand"] = "check-mesh";
    j["mesh"] = {{"h", {0.2}}, {"gap_fraction", 0.05}};
    std::string log;
    CHECK(run_json(j, out, log, true) == kExitOk);
    const json rep = json::parse(slurp(out / "admissibility_0.json"));
    CHECK(rep.at("config_hash").get<std::string>() == config_hash_hex(j));
    CHECK(rep.at("report").at("overall_ok").get<bool>());
    CHECK(fs::exists(out / "mesh_0.txt"));
    CHECK(read_mesh((out / "mesh_0.txt").string()).mesh.num_elements() > 0);

    j["tau"] = 1e6;
    CHECK(run_json(j, out, log, true) == kExitAdmissibility);
    CHECK(run_json(j, out, log, false) == kExitOk);
    const json bad = json::parse(slurp(out / "admissibility_0.json"));
    CHECK_FALSE(bad.at("report").at("overall_ok").get<bool>());

    json bare;
    bare["subcommand"] = "check-mesh";
    bare["problem"] = {{"kappa", "1"}, {"kappa_lo", 1.0}, {"kappa_hi", 1.0}};
    bare["mesh"] = {{"h", {0.2}}};
    CHECK(run_json(bare, out, log) == kExitOk);
    fs::remove_all(out);
}

TEST_CASE("solve writes coefficients and the iteration trace")
{
    const fs::path out = scratch("solve");
    std::string log;
    json j = base_config();
    REQUIRE(run_json(j, out, log) == kExitOk);
    std::ifstream is(out / "solution_0.txt");
    const DiscreteSolution sol = read_solution(is);
    CHECK(sol.k == 1);
    CHECK(sol.u.rows() == 3);
    CHECK(sol.u.cols() > 0);
    CHECK_FALSE(sol.has_sigma());
    const json trace = json::parse(slurp(out / "trace_0.json"));
    CHECK(trace.at("trace").at("converged").get<bool>());
    const json err = json::parse(slurp(out / "errors_0.json"));
    CHECK(err.at("errors").at("u_error").get<double>() < 0.05);
    CHECK(slurp(out / "solution_0.txt").rfind("# uhdg solve\n# config_hash " + config_hash_hex(j), 0) == 0);

    SUBCASE("solution files round trip")
    {
        std::ostringstream a;
        write_solution(a, sol, "x");
        std::istringstream in(a.str());
        const DiscreteSolution back = read_solution(in);
        CHECK((back.u - sol.u).norm() == 0.0);
        CHECK((back.q - sol.q).norm() == 0.0);
        CHECK((back.uhat - sol.uhat).norm() == 0.0);
    }
    SUBCASE("gradient variant writes sigma")
    {
        json g = base_config();
        g["problem"] = {{"variant", "grad"},
                        {"kappa", "2 + 1/(1 + sx^2 + sy^2)"},
                        {"kappa_lo", 2},
                        {"kappa_hi", 3},
                        {"source", "1"},
                        {"g", "0"}};
        REQUIRE(run_json(g, out, log) == kExitOk);
        std::ifstream gs(out / "solution_0.txt");
        CHECK(read_solution(gs).has_sigma());
    }
    SUBCASE("solver failure exits with status 4")
    {
        json d = base_config();
        d["problem"]["f0"] = "500*u";
        CHECK(run_json(d, out, log) == kExitSolver);
        CHECK(log.find("solver failure") != std::string::npos);
        const json t = json::parse(slurp(out / "trace_0.json"));
        CHECK_FALSE(t.at("trace").at("converged").get<bool>());
    }
    fs::remove_all(out);
}

TEST_CASE("study reports rates and is deterministic")
{
    const fs::path out = scratch("study");
    json j = base_config();
    j["subcommand"] = "study";
    j["mesh"] = {{"base_h", 0.2}, {"halvings", 2}};
    std::string log;
    REQUIRE(run_json(j, out, log) == kExitOk);
    const json acc = json::parse(slurp(out / "acceptance.json"));
    CHECK(acc.at("pass").get<bool>());
    bool seen = false;
    for (const json& c : acc.at("checks")) {
        if (c.at("norm") == "u" && c.at("pair") == "finest") {
            seen = true;
            CHECK(c.at("rate").get<double>() >= 1.8);
            CHECK(c.at("rate").get<double>() <= 2.2);
        }
    }
    CHECK(seen);
    for (const char* f : {"errors.csv", "eoc.csv", "eoc.json", "eoc_u.dat", "eoc_q.dat", "trace_2.json"})
        CHECK(fs::exists(out / f));
    const std::string first = slurp(out / "errors.csv");
    const std::string eoc_first = slurp(out / "eoc.csv");
    REQUIRE(run_json(j, out, log) == kExitOk);
    CHECK(slurp(out / "errors.csv") == first);
    CHECK(slurp(out / "eoc.csv") == eoc_first);

    SUBCASE("rates outside the bands exit with status 5")
    {
        json t = j;
        t["acceptance"] = {{"norms", {"u"}}, {"finest_band", 0.01}};
        CHECK(run_json(t, out, log) == kExitAcceptance);
        CHECK_FALSE(json::parse(slurp(out / "acceptance.json")).at("pass").get<bool>());
    }
    fs::remove_all(out);
}

TEST_CASE("project-test checks the projector over the mesh sequence")
{
    const fs::path out = scratch("project");
    json j = base_config();
    j["subcommand"] = "project-test";
    j["mesh"] = {{"h", {0.2, 0.1, 0.05}}};
    std::string log;
    CHECK(run_json(j, out, log) == kExitOk);
    const json p = json::parse(slurp(out / "projection.json"));
    CHECK(p.at("pass").get<bool>());
    for (const json& l : p.at("levels"))
        CHECK(l.at("max_residual").get<double>() <= 1e-10);
    fs::remove_all(out);
}

TEST_CASE("configuration hash and output directory override")
{
    const json a = base_config();
    json b = json::parse(a.dump());
    CHECK(config_hash(a) == config_hash(b));
    b["k"] = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash_hex(a).size() == 16);

    const fs::path env_out = scratch("env");
    json c = base_config();
    c["subcommand"] = "check-mesh";
    c["output_dir"] = (fs::temp_directory_path() / "uhdg_cli_test_unused").string();
    ::setenv("UHDG_OUTPUT_DIR", env_out.c_str(), 1);
    std::ostringstream os;
    RunOptions quiet;
    quiet.quiet = true;
    CHECK(run(parse_config(c), quiet, os) == kExitOk);
    ::unsetenv("UHDG_OUTPUT_DIR");
    CHECK(fs::exists(env_out / "admissibility_0.json"));
    CHECK_FALSE(fs::exists(c["output_dir"].get<std::string>()));
    fs::remove_all(env_out);
}
