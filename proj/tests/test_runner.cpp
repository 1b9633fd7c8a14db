#include "fbhfs/errors.hpp"
#include "fbhfs/runner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fbhfs;
using nlohmann::json;

namespace {

RunConfig from_text(std::string_view text) {
    RunConfig c;
    apply_config_text(c, text);
    return c;
}

std::string message_of(std::string_view text) {
    try {
        RunConfig c = from_text(text);
        validate_config(c);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const Artifact* find(const RunOutput& out, const std::string& name) {
    for (const auto& a : out.artifacts) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("configuration text") {
    const auto c = from_text(
        "# muonic helium-3\n"
        "system.name = he3\n"
        "basis.n = 120   # total\n"
        "basis.sizes = 40 80 120\n"
        "basis.box.1 = 0.3 2.5 0.3 2.5 350 450\n"
        "basis.box.2 = 0.3 6 0.3 6 300 550 2\n"
        "\n"
        "precision.digits = 48\n"
        "hfs.alpha_fs = 0.0073\n");
    CHECK(c.system == "he3");
    CHECK(c.n == 120);
    CHECK(c.sizes == std::vector<std::size_t>{40, 80, 120});
    REQUIRE(c.boxes.size() == 2);
    CHECK(c.boxes[1].weight == 2);
    CHECK(c.boxes[0].bounds[5] == "450");
    CHECK(c.digits == 48);
    REQUIRE(c.constants.size() == 1);
    CHECK(c.constants[0].second == 0.0073);
    CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("configuration errors name the line") {
    CHECK(message_of("basis.n = 10\nbasis.n = 20\n").find("line 2") != std::string::npos);
    CHECK(message_of("system.name = he5\n").find("line 1") != std::string::npos);
    CHECK(message_of("\n\nnonsense\n").find("line 3") != std::string::npos);
    CHECK(message_of("solver.colour = red\n").find("unknown key") != std::string::npos);
    CHECK(message_of("basis.n = -4\n") != "");
    CHECK(message_of("basis.n = 12x\n") != "");
    CHECK(message_of("basis.box.2 = 1 2 1 2 1 2\n").find("basis.box.1") != std::string::npos);
    CHECK(message_of("basis.box.1 = 3 2 1 2 1 2\n").find("lower bound") != std::string::npos);
    CHECK(message_of("basis.n = 10\nbasis.sizes = 5 20\n") != "");
    CHECK(message_of("precision.digits = 5\n") != "");
    CHECK(message_of("system.name = custom\n") != "");
    CHECK(message_of("system.masses = 1 2 3\n") != "");
    CHECK(message_of("hfs.delta31 = 0.3\n") != "");
    CHECK(message_of("system.name = he3\nhfs.delta21 = 0.3\n") != "");
    CHECK(message_of("basis.file = /nonexistent/wf.fbvs\n") != "");
    CHECK(message_of("hfs.planck = 1\n") != "");
    CHECK_THROWS_AS(parse_command("optimize"), ConfigError);
    CHECK(parse_command("all") == Command::All);
    CHECK(to_string(Command::Hfs) == "hfs");
}

TEST_CASE("configuration hash") {
    const auto a = from_text("basis.n = 100\nsystem.name = he4\n");
    const auto b = from_text("system.name = he4   # same run\nbasis.n = 100\noutput.dir = elsewhere\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    const auto c = from_text("basis.n = 101\n");
    CHECK(config_hash(a) != config_hash(c));
    const auto d = from_text("basis.n = 100\nprecision.digits = 65\n");
    CHECK(config_hash(a) != config_hash(d));
    // resolved defaults hash like the explicit preset
    RunConfig e = a;
    e.boxes = preset_boxes();
    CHECK(config_hash(a) == config_hash(e));
}

TEST_CASE("hfs from stored densities needs no solve") {
    const auto c = from_text(
        "system.name = he4\n"
        "hfs.delta21 = 0.313760535832\n");
    const RunOutput out = run(c, Command::Hfs);
    const Artifact* j = find(out, "hfs.json");
    REQUIRE(j);
    const json doc = json::parse(j->content);
    CHECK(doc["config_hash"] == config_hash(c));
    CHECK(doc["command"] == "hfs");
    CHECK(doc.contains("constants"));
    CHECK(std::stod(doc["hfs"]["splitting_MHz"].get<std::string>()) == doctest::Approx(4464.55454).epsilon(2e-8));
    CHECK(find(out, "wavefunction.fbvs") == nullptr);
    CHECK(out.text.find("4464.55") != std::string::npos);
}

TEST_CASE("small convergence study writes a loadable wave function") {
    const auto c = from_text(
        "basis.n = 24\n"
        "basis.sizes = 8 16 24\n"
        "basis.box.1 = 0.3 2.5 0.3 2.5 350 450\n"
        "basis.box.2 = 0.3 6 0.3 6 300 550\n"
        "precision.digits = 40\n");
    std::vector<std::string> progress;
    const RunOutput out = run(c, Command::Convergence, [&](const std::string& l) { progress.push_back(l); });
    CHECK_FALSE(progress.empty());
    const json doc = json::parse(find(out, "convergence.json")->content);
    CHECK(doc["monotone"] == true);
    REQUIRE(doc["rows"].size() == 3);
    CHECK(doc["precision"]["digits"] == 40);
    const Artifact* wf = find(out, "wavefunction.fbvs");
    REQUIRE(wf);

    const auto dir = std::filesystem::temp_directory_path() / "fbhfs_runner_test";
    std::filesystem::remove_all(dir);
    write_artifacts(dir.string(), out.artifacts);
    CHECK(std::filesystem::exists(dir / "convergence.txt"));

    // Re-solving the stored basis reproduces the energy.
    RunConfig again;
    apply_config_text(again, "basis.n = 24\nprecision.digits = 40\nbasis.file = " + (dir / "wavefunction.fbvs").string());
    const json solved = json::parse(find(run(again, Command::Solve), "solve.json")->content);
    CHECK(solved["energy"] == doc["rows"][2]["energy"]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("runs are reproducible") {
    const auto c = from_text("basis.n = 12\nbasis.sizes = 4 8 12\nprecision.digits = 40\n");
    const auto a = run(c, Command::All);
    const auto b = run(c, Command::All);
    REQUIRE(a.artifacts.size() == b.artifacts.size());
    for (std::size_t k = 0; k < a.artifacts.size(); ++k) CHECK(a.artifacts[k].content == b.artifacts[k].content);
}

TEST_CASE("invalid configurations produce no output") {
    RunConfig c;
    c.digits = 3;
    CHECK_THROWS_AS(run(c, Command::Solve), ConfigError);
    CHECK(error_kind(ConfigError("x")) == "config error");
    CHECK(error_kind(NoConvergence("x", 1)) == "no convergence");
    CHECK(error_kind(std::runtime_error("x")) == "internal error");
}

}
