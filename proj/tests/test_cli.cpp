#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "aggdiff/config.hpp"
#include "aggdiff/diagnostics.hpp"
#include "aggdiff/error.hpp"
#include "aggdiff/run.hpp"

using namespace aggdiff;
namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "aggdiff_cli_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = tmp_root() / name;
    std::ofstream os(p, std::ios::binary);
    os << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// The report echoes the resolved output directory, which legitimately
/// differs between runs into different directories; drop that line before
/// comparing for byte determinism.
std::string without_out_line(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("out = ", 0) != 0) out << line << '\n';
    }
    return out.str();
}

std::string expect_config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const Error& e) {
        CHECK(e.code() == "config");
        return e.what();
    }
    FAIL("expected a config error");
    return "";
}

const char* kSmallSimulateConfig = R"(
[model]
eps = 1.0
mass1 = 1
mass2 = 1
[kernels]
base_family = gaussian
base_amplitude = 1
base_width = 1
sigma1 = 10
sigma2 = 1.5
[initial1]
shape = triangle(0, 1)
[initial2]
shape = triangle(0, 1)
[particles]
n = 16
t_final = 0.02
dt = 1e-3
snapshot_every = 0.01
[grid]
xmin = -3
xmax = 3
cells = 300
)";

const char* kSteadyConfig = R"(
[model]
eps = 0.01
mass1 = 0.5
mass2 = 0.5
[kernels]
base_family = gaussian
base_amplitude = 1
base_width = 1
sigma1 = 2
sigma2 = 0.5
[steady]
l1 = 0.5
l2 = 1.0
n1 = 32
n2 = 32
profile_cells = 128
[map]
l2_min = 0.8
l2_max = 1.2
steps = 3
)";

fs::path tool_path() {
    for (const char* cand : {"./aggdiff1d", "build/aggdiff1d"}) {
        if (fs::exists(cand)) return fs::path(cand);
    }
    return {};
}

/// Exit status of the tool under the given arguments, stdout/stderr
/// discarded; -1 when the process did not exit normally.
int run_tool(const std::string& args) {
    const std::string cmd = tool_path().string() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("config parsing: every section reaches its field") {
    const std::string text = R"(
# full configuration exercising each section
[model]
eps = 0.25
mass1 = 2
mass2 = 3
[kernels]
base_family = gaussian
base_amplitude = 1.5
base_width = 0.7
sigma1 = 4
sigma2 = 0.5
[initial1]
shape = uniform(-1, 2)
[initial2]
shape = gaussian(0.5, 1.25)
[particles]
n = 40
t_final = 1.5
dt = 5e-3
dt_min = 1e-7
gap_min = 1e-9
bandwidth_scale = 3
bandwidth = 0.2
stability_safety = 0.25
snapshot_every = 0.5
[grid]
xmin = -6
xmax = 6
cells = 1200
[steady]
l1 = 0.4
l2 = 1.1
n1 = 48
n2 = 96
profile_cells = 2048
tol = 1e-9
max_iter = 500
[map]
l2_min = 0.7
l2_max = 2.1
steps = 5
l1_fraction = 0.4
[coercivity]
xi_max = 30
n_xi = 501
[compare]
t_long = 6
n = 80
[run]
mode = steady-kr
out = results
)";
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.eps == 0.25);
    CHECK(cfg.mass1 == 2.0);
    CHECK(cfg.mass2 == 3.0);
    CHECK(cfg.base.family == "gaussian");
    CHECK(cfg.base.amplitude == 1.5);
    CHECK(cfg.base.width == 0.7);
    CHECK(cfg.sigma1 == 4.0);
    CHECK(cfg.sigma2 == 0.5);
    CHECK_FALSE(cfg.explicit_kernels);
    CHECK(cfg.init1.kind == "uniform");
    CHECK(cfg.init1.a == -1.0);
    CHECK(cfg.init1.b == 2.0);
    CHECK(cfg.init2.kind == "gaussian");
    CHECK(cfg.init2.a == 0.5);
    CHECK(cfg.init2.b == 1.25);
    CHECK(cfg.n_particles == 40);
    CHECK(cfg.t_final == 1.5);
    CHECK(cfg.dt == 5e-3);
    CHECK(cfg.dt_min == 1e-7);
    CHECK(cfg.gap_min == 1e-9);
    CHECK(cfg.bandwidth_scale == 3.0);
    CHECK(cfg.bandwidth_override == 0.2);
    CHECK(cfg.stability_safety == 0.25);
    CHECK(cfg.snapshot_every == 0.5);
    CHECK(cfg.grid_xmin == -6.0);
    CHECK(cfg.grid_xmax == 6.0);
    CHECK(cfg.grid_cells == 1200);
    CHECK(cfg.steady_l1 == 0.4);
    CHECK(cfg.steady_l2 == 1.1);
    CHECK(cfg.steady_n1 == 48);
    CHECK(cfg.steady_n2 == 96);
    CHECK(cfg.steady_profile_cells == 2048);
    CHECK(cfg.steady_tol == 1e-9);
    CHECK(cfg.steady_max_iter == 500);
    CHECK(cfg.map_l2_min == 0.7);
    CHECK(cfg.map_l2_max == 2.1);
    CHECK(cfg.map_steps == 5);
    CHECK(cfg.map_l1_fraction == 0.4);
    CHECK(cfg.coercivity_xi_max == 30.0);
    CHECK(cfg.coercivity_n_xi == 501);
    CHECK(cfg.compare_t_long == 6.0);
    CHECK(cfg.compare_n_particles == 80);
    CHECK(cfg.mode == "steady-kr");
    CHECK(cfg.out_dir == "results");

    // Rendering the resolved configuration and re-parsing it is stable.
    const std::string rendered = render_config(cfg);
    const ExperimentConfig again = parse_config_text(rendered);
    CHECK(render_config(again) == rendered);
    CHECK(again.eps == cfg.eps);
    CHECK(again.steady_max_iter == cfg.steady_max_iter);
    CHECK(again.init2.b == cfg.init2.b);
}

TEST_CASE("config parsing: defaults survive a minimal file") {
    const ExperimentConfig cfg = parse_config_text("[model]\neps = 1.5\n");
    CHECK(cfg.eps == 1.5);
    CHECK(cfg.mass1 == 1.0);
    CHECK(cfg.mass2 == 1.0);
    CHECK(cfg.n_particles == 50);
    CHECK(cfg.t_final == 2.0);
    CHECK(cfg.grid_cells == 800);
    CHECK(cfg.steady_l1 == 0.5);
    CHECK(cfg.steady_l2 == 1.0);
    CHECK(cfg.steady_tol == 1e-10);
    CHECK(cfg.map_steps == 10);
    CHECK(cfg.coercivity_n_xi == 2001);
    CHECK(cfg.mode == "simulate");
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.init1.kind == "triangle");
    CHECK(cfg.init2.kind == "triangle");
}

TEST_CASE("config parsing: diagnostics name the offending line") {
    CHECK(expect_config_error("[model]\neps = banana\n").find("line 2") != std::string::npos);
    CHECK(expect_config_error("[model]\nfrobs = 3\n").find("line 2") != std::string::npos);
    CHECK(expect_config_error("[model]\nfrobs = 3\n").find("unknown key") != std::string::npos);
    CHECK(expect_config_error("eps = 1\n").find("outside any section") != std::string::npos);
    CHECK(expect_config_error("[banana]\nx = 1\n").find("unknown section") != std::string::npos);
    CHECK(expect_config_error("[model\neps = 1\n").find("unterminated") != std::string::npos);
    CHECK(expect_config_error("[model]\neps =\n").find("empty value") != std::string::npos);
    CHECK(expect_config_error("[model]\neps 1\n").find("key = value") != std::string::npos);
    CHECK(expect_config_error("[model]\neps = 1 potato\n").find("trailing") != std::string::npos);
    CHECK(expect_config_error("[particles]\nn = -4\n").find("nonnegative") != std::string::npos);
    CHECK(expect_config_error("[initial1]\nshape = blob(1, 2)\n").find("unknown shape") !=
          std::string::npos);
    CHECK(expect_config_error("[initial1]\nshape = uniform(2, 1)\n").find("b > a") !=
          std::string::npos);
    CHECK(expect_config_error("[initial1]\nshape = triangle(0)\n").find("two numeric") !=
          std::string::npos);
    CHECK(expect_config_error("[kernels]\nbase_family = cubic\n").find("kernel family") !=
          std::string::npos);
}

TEST_CASE("config parsing: empty input and unknown modes are config errors") {
    CHECK(expect_config_error("").find("empty config") != std::string::npos);
    CHECK(expect_config_error("# only a comment\n\n").find("empty config") != std::string::npos);
    CHECK(expect_config_error("[run]\nmode = dance\n").find("unknown mode") != std::string::npos);
    CHECK(expect_config_error("[model]\neps = -1\n").find("eps must be > 0") !=
          std::string::npos);

    try {
        parse_config_file("/nonexistent/aggdiff.ini");
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.code() == "config");
        CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
    }
}

TEST_CASE("config parsing: comments and spacing are ignored") {
    const ExperimentConfig cfg = parse_config_text(
        "  [model]   # trailing comment\n"
        "\n"
        "  eps   =   2.5  ; another comment style\n"
        "mass1=0.25\n");
    CHECK(cfg.eps == 2.5);
    CHECK(cfg.mass1 == 0.25);
}

TEST_CASE("run_experiment: simulate writes a deterministic artifact set") {
    ExperimentConfig cfg = parse_config_text(kSmallSimulateConfig);
    const fs::path dir_a = tmp_root() / "sim_a";
    const fs::path dir_b = tmp_root() / "sim_b";

    const RunResult first = run_experiment(cfg, dir_a.string());
    CHECK(first.summary.rfind("verdict=", 0) == 0);
    for (const char* name : {"report.txt", "trajectory.csv", "snapshot_0000.csv",
                             "snapshot_0001.csv", "snapshot_0002.csv"}) {
        CHECK_MESSAGE(fs::exists(dir_a / name), name);
    }

    const std::string report = slurp(dir_a / "report.txt");
    CHECK(report.find("# experiment report") != std::string::npos);
    CHECK(report.find("mode: simulate") != std::string::npos);
    CHECK(report.find("verdict: ") != std::string::npos);
    CHECK(report.find("ordering_ok: yes") != std::string::npos);
    CHECK(report.find("# resolved configuration") != std::string::npos);
    CHECK(report.find("[model]") != std::string::npos);

    const std::string trajectory = slurp(dir_a / "trajectory.csv");
    CHECK(trajectory.rfind(metrics_csv_header(), 0) == 0);
    CHECK(slurp(dir_a / "snapshot_0000.csv").rfind("x,rho1,rho2,w,zeta", 0) == 0);

    const RunResult second = run_experiment(cfg, dir_b.string());
    CHECK(second.summary == first.summary);
    CHECK(slurp(dir_b / "trajectory.csv") == trajectory);
    CHECK(slurp(dir_b / "snapshot_0002.csv") == slurp(dir_a / "snapshot_0002.csv"));
    CHECK(without_out_line(slurp(dir_b / "report.txt")) == without_out_line(report));
}

TEST_CASE("run_experiment: coercivity verdict lines are pinned") {
    // Cross kernel dominating both self kernels at every frequency.
    ExperimentConfig coercive = parse_config_text(R"(
[model]
eps = 2.0
[kernels]
s1_family = gaussian
s1_amplitude = 1
s1_width = 1
s2_family = gaussian
s2_amplitude = 1
s2_width = 1
k_family = gaussian
k_amplitude = 1.5
k_width = 0.05
[run]
mode = coercivity-check
)");
    const fs::path dir_c = tmp_root() / "coercive";
    const RunResult res_c = run_experiment(coercive, dir_c.string());
    CHECK(res_c.summary.rfind("verdict=coercive", 0) == 0);
    CHECK(slurp(dir_c / "coercivity.csv") ==
          "verdict,xi_witness,lhs,rhs\ncoercive,0,1,0.25\n");

    // Strong self attraction of species one: diffusion loses at frequency zero.
    ExperimentConfig mixing = parse_config_text(R"(
[model]
eps = 1.0
[kernels]
base_family = gaussian
base_amplitude = 1
base_width = 1
sigma1 = 10
sigma2 = 1.5
[run]
mode = coercivity-check
)");
    const fs::path dir_m = tmp_root() / "not_coercive";
    const RunResult res_m = run_experiment(mixing, dir_m.string());
    CHECK(res_m.summary.rfind("verdict=not-coercive", 0) == 0);
    CHECK(slurp(dir_m / "coercivity.csv") ==
          "verdict,xi_witness,lhs,rhs\nnot-coercive,0,1,10\n");
    CHECK(slurp(dir_m / "report.txt").find("condition: 1") != std::string::npos);
}

TEST_CASE("run_experiment: steady modes emit aligned tables") {
    ExperimentConfig cfg = parse_config_text(kSteadyConfig);

    cfg.mode = "steady-kr";
    const fs::path dir_kr = tmp_root() / "kr";
    const RunResult kr = run_experiment(cfg, dir_kr.string());
    CHECK(kr.summary.rfind("eps=", 0) == 0);
    const std::string kr_csv = slurp(dir_kr / "steady_kr.csv");
    CHECK(kr_csv.rfind("x,rho1,rho2\n", 0) == 0);
    CHECK(slurp(dir_kr / "report.txt").find("eigenvalue_eps: ") != std::string::npos);

    cfg.mode = "steady-asymptotic";
    const fs::path dir_as = tmp_root() / "asym";
    const RunResult as = run_experiment(cfg, dir_as.string());
    CHECK(as.summary.rfind("mu=", 0) == 0);
    const std::string as_csv = slurp(dir_as / "steady_asymptotic.csv");
    CHECK(as_csv.rfind("x,rho1,rho2,w\n", 0) == 0);
    // header plus the configured lattice (cells + 1 nodes)
    const std::size_t rows =
        static_cast<std::size_t>(std::count(as_csv.begin(), as_csv.end(), '\n'));
    CHECK(rows == 1 + 128 + 1);
    const std::string as_report = slurp(dir_as / "report.txt");
    CHECK(as_report.find("mu: ") != std::string::npos);
    CHECK(as_report.find("residual1: ") != std::string::npos);
}

TEST_CASE("run_experiment: eps-map emits one row per requested support") {
    ExperimentConfig cfg = parse_config_text(kSteadyConfig);
    cfg.mode = "eps-map";
    const fs::path dir = tmp_root() / "map";
    const RunResult res = run_experiment(cfg, dir.string());
    CHECK(res.summary.find("rows=3") != std::string::npos);
    CHECK(res.summary.find("trend=nondecreasing") != std::string::npos);
    const std::string csv = slurp(dir / "eps_map.csv");
    CHECK(csv.rfind("l1,l2,eps\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("run_experiment: compare runs all three routes on one lattice") {
    ExperimentConfig cfg = parse_config_text(R"(
[model]
eps = 0.01
mass1 = 0.5
mass2 = 0.5
[kernels]
base_family = gaussian
base_amplitude = 1
base_width = 1
sigma1 = 2
sigma2 = 0.5
[initial1]
shape = uniform(-0.3, 0.3)
[initial2]
shape = uniform(-0.5, 0.5)
[particles]
dt = 1e-3
snapshot_every = 0.1
[grid]
xmin = -1
xmax = 1
cells = 400
[steady]
n1 = 32
n2 = 32
profile_cells = 128
[compare]
t_long = 0.3
n = 24
[run]
mode = compare
)");
    const fs::path dir = tmp_root() / "compare";
    const RunResult res = run_experiment(cfg, dir.string());
    CHECK(res.summary.rfind("l1_ta=", 0) == 0);
    const std::string csv = slurp(dir / "compare.csv");
    CHECK(csv.rfind("route_a,route_b,l1_distance\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("transport,asymptotic,") != std::string::npos);
    CHECK(csv.find("transport,steady-kr,") != std::string::npos);
    CHECK(csv.find("steady-kr,asymptotic,") != std::string::npos);
    const std::string report = slurp(dir / "report.txt");
    CHECK(report.find("kr_eigenvalue_eps: ") != std::string::npos);
    CHECK(report.find("asymptotic_mu: ") != std::string::npos);
    // no stray per-route artifacts: compare keeps the transport run in memory
    CHECK_FALSE(fs::exists(dir / "trajectory.csv"));
}

TEST_CASE("run_experiment: unknown mode is rejected before any work") {
    ExperimentConfig cfg = parse_config_text(kSteadyConfig);
    cfg.mode = "dance";
    CHECK_THROWS_WITH_AS(run_experiment(cfg, (tmp_root() / "never").string()),
                         doctest::Contains("unknown mode"), Error);
    CHECK_FALSE(fs::exists(tmp_root() / "never" / "report.txt"));
}

TEST_CASE("binary: exit codes separate configuration errors from numerics") {
    REQUIRE_MESSAGE(!tool_path().empty(), "aggdiff1d binary not found next to the tests");

    const fs::path ok_cfg = write_file("cli_ok.ini", R"(
[model]
eps = 2.0
[kernels]
s1_family = gaussian
s1_amplitude = 1
s1_width = 1
s2_family = gaussian
s2_amplitude = 1
s2_width = 1
k_family = gaussian
k_amplitude = 1.5
k_width = 0.05
)");
    const fs::path bad_value = write_file("cli_bad_value.ini", "[model]\neps = -3\n");
    const fs::path bad_syntax = write_file("cli_bad_syntax.ini", "[model]\neps = banana\n");
    // Self attraction of species one beats the cross pull: the steady-state
    // operator loses strong positivity and the eigensolver must refuse.
    const fs::path kr_fail = write_file("cli_kr_fail.ini", R"(
[kernels]
base_family = gaussian
base_amplitude = 1
base_width = 1
sigma1 = 10
sigma2 = 1.5
)");

    const std::string out = (tmp_root() / "cli_out").string();
    CHECK(run_tool("coercivity-check --config " + ok_cfg.string() + " --out " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "coercivity.csv"));
    CHECK(run_tool("--help") == 0);

    CHECK(run_tool("simulate --config /nonexistent/missing.ini") == 2);
    CHECK(run_tool("simulate --config " + bad_value.string()) == 2);
    CHECK(run_tool("simulate --config " + bad_syntax.string()) == 2);
    CHECK(run_tool("steady-kr") == 2);                                  // missing --config
    CHECK(run_tool("frobnicate --config " + ok_cfg.string()) == 2);     // unknown subcommand
    CHECK(run_tool("") == 2);                                           // no subcommand

    CHECK(run_tool("steady-kr --config " + kr_fail.string() + " --out " +
                   (tmp_root() / "cli_kr_out").string()) == 3);
}
