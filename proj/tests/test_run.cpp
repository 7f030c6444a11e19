#include "doctest.h"

#include "crt/errors.hpp"
#include "crt/run.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace crt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig small(const std::string& dir) {
    RunConfig c;
    c.grid_size = 1 << 12;
    c.replicas = 1;
    c.carrier_cap = 120;
    c.n_max = 3;
    c.output_dir = (fs::temp_directory_path() / dir).string();
    fs::remove_all(c.output_dir);
    return c;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("Config JSON round trip and refusal") {
    RunConfig c;
    c.alpha = 0.1;
    c.grid_size = 777;
    c.master_seed = 18446744073709551615ULL;
    c.output_dir = "x y";
    const auto back = parse_config(config_to_json(c));
    CHECK(back.alpha == c.alpha);
    CHECK(back.grid_size == 777);
    CHECK(back.master_seed == c.master_seed);
    CHECK(back.output_dir == "x y");

    const auto partial = parse_config(R"({"p": 1.25})", c);
    CHECK(partial.p == 1.25);
    CHECK(partial.alpha == 0.1);

    CHECK_THROWS_AS(parse_config(R"({"alpah": 0.2})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"grid_size": 1.5})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"master_seed": -1})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"([1, 2])"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("{"), InvalidArgument);
    CHECK_THROWS_AS(load_config("/nonexistent/crt.json"), InvalidArgument);
}

TEST_CASE("Exit codes") {
    std::ostringstream log;
    auto c = small("crt_run_exit");
    c.alpha = 1.5;
    CHECK(run_command("simulate", "all", c, log) == exit_invalid_config);
    CHECK(!fs::exists(c.output_dir));
    c.alpha = 0.25;
    CHECK(run_command("bogus", "all", c, log) == exit_invalid_config);
    CHECK(run_command("verify", "bogus", c, log) == exit_invalid_config);

    // the anchor never reaches height 1 on so short a horizon
    c.horizon = 0.01;
    CHECK(run_command("simulate", "all", c, log) == exit_stage_failure);
    const auto m = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "manifest.json"));
    CHECK(m["status"] == "stage_failed");
    CHECK(m["failure"]["stage"] == "simulate");

    c.horizon = 8.0;
    CHECK(run_command("verify", "comparison", c, log) == exit_ok);
    CHECK(run_command("verify", "moment", c, log) == exit_verification_fail);
    fs::remove_all(c.output_dir);
}

TEST_CASE("Manifest records every written file with its hash") {
    std::ostringstream log;
    const auto c = small("crt_run_manifest");
    REQUIRE(run_command("nets", "all", c, log) == exit_ok);
    const auto m = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["config"]["grid_size"] == 4096);
    CHECK(m["seeds"].contains("pipeline_r0"));
    REQUIRE(m["files"].size() == 3);
    for (const auto& f : m["files"]) {
        const auto p = fs::path(c.output_dir) / f["path"].get<std::string>();
        CHECK(f["fnv1a64"] == fnv1a_file(p.string()));
        CHECK(f["bytes"] == fs::file_size(p));
    }
    const auto head = slurp(fs::path(c.output_dir) / "nets.csv");
    CHECK(head.rfind("replica,level,points,connected\n", 0) == 0);
    fs::remove_all(c.output_dir);
}

TEST_CASE("Two full runs are byte-identical apart from timings") {
    std::ostringstream log;
    const auto a = small("crt_run_det_a");
    const auto b = small("crt_run_det_b");
    const int ea = run_command("all", "all", a, log);
    const int eb = run_command("all", "all", b, log);
    CHECK(ea == eb);
    CHECK(ea != exit_stage_failure);

    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a.output_dir)) {
        const auto name = e.path().filename();
        if (name == "manifest.json") continue;
        REQUIRE(fs::exists(fs::path(b.output_dir) / name));
        CHECK_MESSAGE(slurp(e.path()) == slurp(fs::path(b.output_dir) / name), name.string());
        ++compared;
    }
    CHECK(compared >= 14);
    auto ma = nlohmann::json::parse(slurp(fs::path(a.output_dir) / "manifest.json"));
    auto mb = nlohmann::json::parse(slurp(fs::path(b.output_dir) / "manifest.json"));
    for (auto* m : {&ma, &mb}) {
        m->erase("timings");
        (*m)["config"].erase("output_dir");
    }
    CHECK(ma == mb);
    fs::remove_all(a.output_dir);
    fs::remove_all(b.output_dir);
}
