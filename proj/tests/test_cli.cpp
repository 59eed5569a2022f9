#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CRE_CLI_PATH) + " " + args +
                            " > cli_stdout.txt 2> cli_stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string scenario(const char* name) {
    return std::string(CRE_SCENARIO_DIR) + "/" + name;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) : path(fs::path("cli_out_") += tag) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("vertices run is deterministic and writes its artifacts") {
    TempDir d1("va"), d2("vb");
    REQUIRE(run("vertices --scenario " + scenario("default.scn") + " --out " +
                d1.path.string()) == 0);
    REQUIRE(run("vertices --scenario " + scenario("default.scn") + " --out " +
                d2.path.string()) == 0);
    for (const char* f : {"vertices.csv", "covariance_r_max.csv",
                          "covariance_e_max.csv", "covariance_c_min.csv",
                          "manifest.json"})
        CHECK(fs::exists(d1.path / f));
    CHECK(slurp(d1.path / "vertices.csv") == slurp(d2.path / "vertices.csv"));
    CHECK(slurp(d1.path / "covariance_c_min.csv") ==
          slurp(d2.path / "covariance_c_min.csv"));
}

TEST_CASE("solve-p1 accepts unit-suffixed thresholds") {
    TempDir d("p1");
    REQUIRE(run("solve-p1 --scenario " + scenario("default.scn") +
                " --gamma-eh=-39dBm --gamma-s inf --out " + d.path.string()) ==
            0);
    CHECK(fs::exists(d.path / "p1_solution.csv"));
    CHECK(fs::exists(d.path / "covariance_p1.csv"));

    // dB-scaled CRB threshold (very loose): 0 dB = 1 rad^2.
    REQUIRE(run("solve-p1 --scenario " + scenario("default.scn") +
                " --gamma-s 0dB --out " + d.path.string()) == 0);
}

TEST_CASE("solve-p1 reports infeasible thresholds with exit code 2") {
    TempDir d("inf");
    CHECK(run("solve-p1 --scenario " + scenario("default.scn") +
              " --gamma-eh 1e6J --out " + d.path.string()) == 2);
    CHECK(run("solve-p1 --scenario " + scenario("default.scn") +
              " --gamma-s 1e-30rad2 --out " + d.path.string()) == 2);
}

TEST_CASE("configuration errors exit with code 4") {
    TempDir d("cfg");
    CHECK(run("vertices --scenario /nonexistent.scn --out " + d.path.string()) ==
          4);
    const fs::path bad = d.path / "bad.scn";
    std::ofstream(bad) << "[system]\nm = two\n";
    CHECK(run("vertices --scenario " + bad.string() + " --out " +
              d.path.string()) == 4);
    CHECK(run("solve-p1 --scenario " + scenario("default.scn") +
              " --gamma-eh nonsense --out " + d.path.string()) == 4);
}

TEST_CASE("replaying a manifest reproduces the outputs bit-identically") {
    TempDir d1("ma"), d2("mb");
    REQUIRE(run("benchmark-ts --scenario " + scenario("default.scn") +
                " --step 0.1 --out " + d1.path.string()) == 0);
    // Point the recorded manifest at a fresh output directory, then replay.
    std::string manifest = slurp(d1.path / "manifest.json");
    const std::string needle = "\"out\": \"" + d1.path.string() + "\"";
    const auto pos = manifest.find(needle);
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, needle.size(), "\"out\": \"" + d2.path.string() + "\"");
    const fs::path edited = d1.path / "replay.json";
    std::ofstream(edited) << manifest;
    REQUIRE(run("--from-manifest " + edited.string()) == 0);
    CHECK(slurp(d1.path / "ts_frontier.csv") == slurp(d2.path / "ts_frontier.csv"));
}

TEST_CASE("surface command writes grid, manifest and plot stub") {
    TempDir d("surf");
    REQUIRE(run("surface --scenario " + scenario("default.scn") +
                " --grid 3 --workers 2 --out " + d.path.string()) == 0);
    CHECK(fs::exists(d.path / "surface.csv"));
    CHECK(fs::exists(d.path / "surface.gp"));
    const std::string body = slurp(d.path / "surface.csv");
    CHECK(body.find("gamma_eh") != std::string::npos);
    // Header, units row, and 9 grid rows.
    CHECK(std::count(body.begin(), body.end(), '\n') == 11);
}

TEST_CASE("validate passes on the default scenario") {
    TempDir d("val");
    CHECK(run("validate --scenario " + scenario("default.scn") +
              " --trials 5 --out " + d.path.string()) == 0);
}
