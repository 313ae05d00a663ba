#include "uhdg/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Unfitted HDG solver for quasilinear elliptic problems on curved domains"};
    std::string config;
    std::string out;
    uhdg::RunOptions opts;
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--out", out, "output directory, overrides the configuration");
    app.add_flag("--strict", opts.strict, "fail with exit status 3 on admissibility violations");
    app.add_flag("--quiet", opts.quiet, "suppress progress messages");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : uhdg::kExitConfig;
    }
    if (!out.empty())
        opts.output_dir = out;
    return uhdg::run_file(config, opts, std::cerr);
}
