// Batch front end: fbhfs <solve|convergence|expect|hfs|oracle|all> [options]

#include "fbhfs/errors.hpp"
#include "fbhfs/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kConfigErrorExit = 2;
constexpr int kRunErrorExit = 3;
constexpr int kCheckFailedExit = 4;

int fail(const std::exception& e) {
    const std::string kind = fbhfs::error_kind(e);
    std::cerr << nlohmann::json{{"error", kind}, {"message", e.what()}}.dump() << "\n";
    return kind == "config error" ? kConfigErrorExit : kRunErrorExit;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variational three-body solver and hyperfine structure of muonic helium"};
    std::string command;
    std::string config_path;
    std::string system;
    std::size_t n = 0;
    int digits = 0;
    std::string out_dir;
    bool quiet = false;
    app.add_option("command", command, "solve | convergence | expect | hfs | oracle | all")->required();
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--system", system, "he3 | he4 | custom");
    app.add_option("--n", n, "basis size");
    app.add_option("--digits", digits, "working precision in decimal digits");
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("-q,--quiet", quiet, "no progress lines on stderr");
    CLI11_PARSE(app, argc, argv);

    fbhfs::RunConfig config;
    fbhfs::Command cmd;
    try {
        cmd = fbhfs::parse_command(command);
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw fbhfs::ConfigError("cannot read config '" + config_path + "'");
            std::ostringstream text;
            text << in.rdbuf();
            fbhfs::apply_config_text(config, text.str());
        }
        if (!system.empty()) fbhfs::apply_config_value(config, "system.name", system);
        if (n) fbhfs::apply_config_value(config, "basis.n", std::to_string(n));
        if (digits) fbhfs::apply_config_value(config, "precision.digits", std::to_string(digits));
        if (!out_dir.empty()) fbhfs::apply_config_value(config, "output.dir", out_dir);
        fbhfs::validate_config(config);
    } catch (const std::exception& e) {
        return fail(e);
    }

    try {
        auto progress = [&](const std::string& line) {
            if (!quiet) std::cerr << line << std::endl;
        };
        const fbhfs::RunOutput out = fbhfs::run(config, cmd, progress);
        fbhfs::write_artifacts(config.out_dir, out.artifacts);
        std::cout << out.text;
        return out.passed ? 0 : kCheckFailedExit;
    } catch (const std::exception& e) {
        return fail(e);
    }
}
