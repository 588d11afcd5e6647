#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bathsim/config.hpp"
#include "bathsim/errors.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = BATHSIM_CLI_PATH;

fs::path scratch_root()
{
    const fs::path root = fs::temp_directory_path() / "bathsim_cli_tests";
    fs::create_directories(root);
    return root;
}

int run_cli(const std::string& args)
{
    const std::string quiet = " > " + (scratch_root() / "stdout.txt").string() + " 2> " +
                              (scratch_root() / "stderr.txt").string();
    const int rc = std::system((kCli + " " + args + quiet).c_str());
    return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Small, fast experiment: gapless bath, 64 modes, five time units.
const char* kSmallConfig = R"({
  "spectrum": { "family": "gaussian_gapless" },
  "oscillator": { "V0": [0.0, 0.0, 1.0] },
  "discretization": { "N": 64, "nu_max": 8.0, "panels": 2 },
  "integration": { "dt": 0.001, "T": 5.0, "sample_stride": 10 },
  "initial": { "x0": 1.0, "p0": 0.0, "bath": "thermal", "temperature": 0.4, "seed": 7 },
  "analysis": { "window": 2.0, "hop": 1.0 },
  "output": { "dir": "OUTDIR" }
})";

std::string small_config(const std::string& out_dir)
{
    std::string text = kSmallConfig;
    const auto pos = text.find("OUTDIR");
    text.replace(pos, 6, out_dir);
    return text;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(scratch_root() / name)
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
};

} // namespace

TEST_CASE("cli: spectrum command reports K and hypothesis checks")
{
    TempDir tmp("cli_spectrum");
    write_file(tmp.path / "config.json", small_config((tmp.path / "out").string()));
    const int rc = run_cli("spectrum --config " + (tmp.path / "config.json").string());
    CHECK(rc == 0);

    const json report = json::parse(slurp(tmp.path / "out" / "spectrum_report.json"));
    CHECK(std::abs(report["K"]["value"].get<double>() - 1.0) < 1e-10);
    CHECK(report["hypotheses_all_passed"].get<bool>());
    CHECK(report["config"].is_string());
}

TEST_CASE("cli: simulate writes deterministic, hash-stamped artifacts")
{
    TempDir tmp("cli_simulate");
    write_file(tmp.path / "config.json", small_config((tmp.path / "out").string()));
    const std::string cfg = (tmp.path / "config.json").string();

    REQUIRE(run_cli("simulate --config " + cfg) == 0);
    const std::string first = slurp(tmp.path / "out" / "trajectory_full.csv");
    const std::string meta_first = slurp(tmp.path / "out" / "run_meta.json");

    REQUIRE(run_cli("simulate --config " + cfg) == 0);
    CHECK(slurp(tmp.path / "out" / "trajectory_full.csv") == first);
    CHECK(slurp(tmp.path / "out" / "run_meta.json") == meta_first);

    // schema header carries the config hash
    const json meta = json::parse(meta_first);
    const std::string hash = meta["config"].get<std::string>();
    CHECK(first.rfind("# bathsim trajectory v1 config=" + hash, 0) == 0);
    CHECK(meta["monitors"]["all_ok"].get<bool>());
}

TEST_CASE("cli: seed override via environment")
{
    TempDir tmp("cli_seed");
    write_file(tmp.path / "config.json", small_config((tmp.path / "out").string()));
    const std::string cfg = (tmp.path / "config.json").string();

    REQUIRE(run_cli("simulate --config " + cfg) == 0);
    const std::string base = slurp(tmp.path / "out" / "trajectory_full.csv");

    const int rc = std::system(("BATHSIM_SEED=99 " + kCli + " simulate --config " + cfg + " > " +
                                (scratch_root() / "stdout.txt").string() + " 2>&1")
                                   .c_str());
    REQUIRE(WEXITSTATUS(rc) == 0);
    CHECK(slurp(tmp.path / "out" / "trajectory_full.csv") != base);
    const json meta = json::parse(slurp(tmp.path / "out" / "run_meta.json"));
    CHECK(meta["seed"].get<std::uint64_t>() == 99);
}

TEST_CASE("cli: gle command writes the reduced trajectory and kernel")
{
    TempDir tmp("cli_gle");
    json cfg = json::parse(small_config((tmp.path / "out").string()));
    cfg["output"]["write_kernel"] = true;
    write_file(tmp.path / "config.json", cfg.dump());

    REQUIRE(run_cli("gle --config " + (tmp.path / "config.json").string()) == 0);
    CHECK(fs::exists(tmp.path / "out" / "trajectory_gle.csv"));
    CHECK(fs::exists(tmp.path / "out" / "kernel.csv"));
    const std::string kernel = slurp(tmp.path / "out" / "kernel.csv");
    CHECK(kernel.rfind("tau,w", 0) == 0);
}

TEST_CASE("cli: verify suite passes on a sound configuration")
{
    TempDir tmp("cli_verify");
    write_file(tmp.path / "config.json", small_config((tmp.path / "out").string()));
    CHECK(run_cli("verify --config " + (tmp.path / "config.json").string()) == 0);
    const json report = json::parse(slurp(tmp.path / "out" / "verify_report.json"));
    CHECK(report["failures"].get<int>() == 0);
}

TEST_CASE("cli: invalid configuration exits nonzero")
{
    TempDir tmp("cli_bad");
    json cfg = json::parse(small_config((tmp.path / "out").string()));
    cfg["integration"]["dt"] = -1.0;
    write_file(tmp.path / "config.json", cfg.dump());
    CHECK(run_cli("verify --config " + (tmp.path / "config.json").string()) != 0);

    CHECK(run_cli("simulate --config " + (tmp.path / "missing.json").string()) != 0);
}

TEST_CASE("cli: classify emits the prediction/measurement report")
{
    TempDir tmp("cli_classify");
    json cfg = json::parse(small_config((tmp.path / "out").string()));
    cfg["integration"]["T"] = 8.0;
    cfg["initial"]["bath"] = "zero";
    write_file(tmp.path / "config.json", cfg.dump());

    REQUIRE(run_cli("classify --config " + (tmp.path / "config.json").string()) == 0);
    const json rep = json::parse(slurp(tmp.path / "out" / "classification.json"));
    CHECK(rep.contains("predicted"));
    CHECK(rep.contains("measured"));
    CHECK(rep.contains("diagnostics"));
    CHECK(rep["thresholds"]["decay_ratio_max"].get<double>() == 0.05);
}

TEST_CASE("cli: sweep handles empty ranges and is reproducible")
{
    TempDir tmp("cli_sweep");
    json cfg = json::parse(small_config((tmp.path / "out").string()));
    cfg["integration"]["T"] = 6.0;
    cfg["initial"]["bath"] = "zero";
    cfg["sweep"] = {{"parameter", "v"}, {"values", json::array()}, {"workers", 2}};
    write_file(tmp.path / "config.json", cfg.dump());

    REQUIRE(run_cli("sweep --config " + (tmp.path / "config.json").string()) == 0);
    std::string table = slurp(tmp.path / "out" / "sweep.csv");
    int lines = 0;
    for (char ch : table)
        if (ch == '\n') ++lines;
    CHECK(lines == 2);  // comment + header only

    cfg["sweep"]["values"] = {1.5, 2.5};
    write_file(tmp.path / "config.json", cfg.dump());
    REQUIRE(run_cli("sweep --config " + (tmp.path / "config.json").string()) == 0);
    const std::string once = slurp(tmp.path / "out" / "sweep.csv");
    REQUIRE(run_cli("sweep --config " + (tmp.path / "config.json").string()) == 0);
    CHECK(slurp(tmp.path / "out" / "sweep.csv") == once);
    CHECK(once.find("Decay") != std::string::npos);
}

TEST_CASE("cli: tabulated spectrum from a csv table")
{
    TempDir tmp("cli_table");
    std::string table = "nu,a_hat\n";
    for (int k = 0; k <= 400; ++k) {
        const double nu = 0.02 * k;
        table += std::to_string(nu) + "," +
                 std::to_string(nu * std::exp(-nu * nu / 2.0) / std::pow(M_PI, 0.25)) + "\n";
    }
    write_file(tmp.path / "table.csv", table);

    json cfg = json::parse(small_config((tmp.path / "out").string()));
    cfg["spectrum"] = {{"family", "tabulated"}, {"nu0", 0.0}, {"table", "table.csv"}};
    cfg["discretization"]["nu_max"] = 8.0;
    write_file(tmp.path / "config.json", cfg.dump());

    REQUIRE(run_cli("spectrum --config " + (tmp.path / "config.json").string()) == 0);
    const json report = json::parse(slurp(tmp.path / "out" / "spectrum_report.json"));
    // piecewise-linear table of the unit-K density: close, not spectral
    CHECK(std::abs(report["K"]["value"].get<double>() - 1.0) < 1e-2);
}

TEST_CASE("cli: v-sweep flips the prediction exactly once")
{
    TempDir tmp("cli_vsweep");
    json cfg = json::parse(small_config((tmp.path / "out").string()));
    cfg["spectrum"] = {{"family", "gaussian_gap"}, {"nu0", 1.0}, {"amplitude", 1.0}, {"edge", 0.5}};
    cfg["discretization"] = {{"N", 128}, {"nu_max", 8.0}, {"panels", 4}};
    cfg["integration"] = {{"dt", 0.001}, {"T", 30.0}, {"sample_stride", 20}};
    cfg["initial"] = {{"x0", 1.0}, {"p0", 0.0}, {"bath", "zero"}, {"seed", 1}};
    cfg["analysis"] = {{"window", 10.0}, {"hop", 5.0}};
    cfg["sweep"] = {{"parameter", "v"}, {"values", {0.4, 0.8, 1.2, 1.8, 2.4}}, {"workers", 2}};
    write_file(tmp.path / "config.json", cfg.dump());

    REQUIRE(run_cli("sweep --config " + (tmp.path / "config.json").string()) == 0);
    std::istringstream table(slurp(tmp.path / "out" / "sweep.csv"));
    std::string line;
    std::getline(table, line);  // comment
    std::getline(table, line);  // header
    int flips = 0;
    std::string prev;
    while (std::getline(table, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        const std::string predicted = line.substr(a + 1, b - a - 1);
        if (!prev.empty() && predicted != prev) ++flips;
        prev = predicted;
    }
    CHECK(flips == 1);
}

TEST_CASE("presets parse and build")
{
    using namespace bathsim;
    for (const char* name :
         {"case-a-decay", "case-a-sync", "case-b-doublewell", "kg-demo"}) {
        const ExperimentConfig config =
            load_config(std::string(BATHSIM_PRESET_DIR) + "/" + name + ".json");
        CHECK_NOTHROW(build_spectrum(config));
        CHECK_NOTHROW(build_oscillator(config));
        CHECK(config.integration.duration > 0.0);
    }
}
