#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fracrte/app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Half-order fractional transport: forward solves, Carleman checks, coefficient recovery"};
    fracrte::CommandOptions opt;
    std::string config;
    std::string out_dir = "out";
    app.add_option("subcommand", opt.subcommand, "forward | reduce | carleman | invert | stability | validate")
        ->required()
        ->check(CLI::IsMember(fracrte::subcommands()));
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--out-dir", out_dir, "directory for artifacts")->capture_default_str();
    app.add_option("--threads", opt.threads, "concurrent forward solves")->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--validate-only", opt.validate_only, "check the config and stop");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : fracrte::kExitConfig;
    }
    opt.config = config;
    opt.out_dir = out_dir;

    const fracrte::CommandResult r = fracrte::run_command(opt);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (r.exit_code != fracrte::kExitOk) {
        std::cerr << fracrte::result_json(r) << '\n';
        return r.exit_code;
    }
    if (opt.subcommand == "validate" || opt.validate_only) {
        std::cout << "config OK (" << opt.config.string() << ")\n";
        return 0;
    }
    for (const auto& a : r.artifacts) std::cout << (opt.out_dir / a).string() << '\n';
    std::cout << (opt.out_dir / "manifest.json").string() << '\n';
    return 0;
}
