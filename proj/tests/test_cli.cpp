#include <doctest.h>

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "commands.hpp"
#include "eitms/metrics.hpp"
#include "eitms/regularizers.hpp"

using namespace eitms;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / ("eitms_cli_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

struct Run {
    int code;
    std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "eitms");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> with(const std::string& cmd, const std::string& dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> a{cmd, "--set", "output.dir=" + dir, "--set", "mesh.edge_length=0.018", "--set",
                               "mesh.sim_edge_length=0.014", "--set", "reconstruction.max_outer=3", "--set",
                               "reconstruction.max_inner=200", "--set", "output.render_resolution=48"};
    for (auto& e : extra) {
        a.push_back("--set");
        a.push_back(e);
    }
    return a;
}

}  // namespace

TEST_CASE("cli pipeline: mesh, simulate, reconstruct, evaluate, render") {
    TempDir tmp;
    const std::string d = (tmp.path / "run").string();

    auto r = run_cli(with("mesh", d));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("nodes") != std::string::npos);
    const Mesh m = load_mesh(std::filesystem::path(d) / "mesh.txt");
    CHECK(m.num_electrodes() == 16);
    const Mesh sim = load_mesh(std::filesystem::path(d) / "sim_mesh.txt");
    CHECK(sim.num_nodes() > m.num_nodes());
    // regenerating gives identical files
    const std::string mesh_bytes = slurp(std::filesystem::path(d) / "mesh.txt");
    REQUIRE(run_cli(with("mesh", d)).code == 0);
    CHECK(slurp(std::filesystem::path(d) / "mesh.txt") == mesh_bytes);

    r = run_cli(with("simulate", d));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("M = 240") != std::string::npos);
    const std::string meas = slurp(std::filesystem::path(d) / "measurements.txt");
    REQUIRE(run_cli(with("simulate", d)).code == 0);
    CHECK(slurp(std::filesystem::path(d) / "measurements.txt") == meas);
    REQUIRE(run_cli(with("simulate", d, {"simulation.seed=99"})).code == 0);
    CHECK(slurp(std::filesystem::path(d) / "measurements.txt") != meas);
    REQUIRE(run_cli(with("simulate", d)).code == 0);

    r = run_cli(with("reconstruct", d));
    CHECK(r.code == cli::exit_max_iterations);
    const std::string gamma = slurp(std::filesystem::path(d) / "gamma.csv");
    CHECK(gamma.rfind("node,x,y,value\n", 0) == 0);
    CHECK(std::filesystem::exists(std::filesystem::path(d) / "gamma.ppm"));
    CHECK(std::filesystem::exists(std::filesystem::path(d) / "z.ppm"));
    CHECK(slurp(std::filesystem::path(d) / "trace.csv").rfind("iteration,objective", 0) == 0);
    // same config and seed: byte-identical fields
    REQUIRE(run_cli(with("reconstruct", d)).code == cli::exit_max_iterations);
    CHECK(slurp(std::filesystem::path(d) / "gamma.csv") == gamma);

    // a loose tolerance converges and exits 0
    r = run_cli(with("reconstruct", d, {"reconstruction.outer_tol=10", "reconstruction.outer_window=1"}));
    CHECK(r.code == 0);

    r = run_cli(with("evaluate", d));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("relative_error_percent,") != std::string::npos);
    CHECK(r.out.find("hwhm70_conductive_area_rec,") != std::string::npos);
    CHECK(std::filesystem::exists(std::filesystem::path(d) / "report.csv"));

    // a perfect reconstruction (the interpolated truth) scores 0
    const NodalField truth = load_field_csv(sim, std::filesystem::path(d) / "truth.csv");
    save_field_csv(m, interpolate_field(sim, truth, m), std::filesystem::path(d) / "perfect.csv");
    r = run_cli({"evaluate", "--set", "output.dir=" + d, "--rec", d + "/perfect.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("relative_error_percent,0\n") != std::string::npos);
    // fields on the wrong mesh are rejected
    r = run_cli({"evaluate", "--set", "output.dir=" + d, "--rec", d + "/truth.csv"});
    CHECK(r.code == 1);

    r = run_cli({"render", d + "/truth.csv", "--mesh", d + "/sim_mesh.txt", "--set", "output.dir=" + d, "-o", d + "/t.ppm"});
    CHECK(r.code == 0);
    CHECK(slurp(std::filesystem::path(d) / "t.ppm").rfind("P6\n", 0) == 0);
}

TEST_CASE("cli: the smooth-gradient run has lower TV than the phase-field run") {
    TempDir tmp;
    const std::string d = (tmp.path / "tv").string();
    REQUIRE(run_cli(with("mesh", d)).code == 0);
    REQUIRE(run_cli(with("simulate", d)).code == 0);
    const std::vector<std::string> more{"reconstruction.max_outer=15", "reconstruction.max_inner=500"};
    auto g = with("reconstruct", d, more);
    g.insert(g.end(), {"--set", "reconstruction.regularizer=grad", "--set", "output.gamma=grad.csv"});
    REQUIRE(run_cli(g).code != 1);
    REQUIRE(run_cli(with("reconstruct", d, more)).code != 1);
    const Mesh m = load_mesh(std::filesystem::path(d) / "mesh.txt");
    const double tv_grad = eval_TV(m, load_field_csv(m, std::filesystem::path(d) / "grad.csv"), 1.0);
    const double tv_at = eval_TV(m, load_field_csv(m, std::filesystem::path(d) / "gamma.csv"), 1.0);
    CHECK(tv_grad < tv_at);
}

TEST_CASE("cli error handling") {
    TempDir tmp;
    const std::string d = (tmp.path / "empty").string();
    auto r = run_cli(with("reconstruct", d));
    CHECK(r.code == 1);
    CHECK(r.err.find("not found") != std::string::npos);
    REQUIRE(run_cli(with("mesh", d)).code == 0);
    r = run_cli(with("reconstruct", d));
    CHECK(r.code == 1);
    CHECK(r.err.find("measurement file") != std::string::npos);
    CHECK(run_cli({"mesh", "--set", "mesh.bogus=1"}).code == 1);
    CHECK(run_cli({"mesh", "--set", "output.dir=" + d, "--set", "mesh.coverage=0.5"}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"mesh", "--config", d + "/missing.cfg"}).code == 1);
    r = run_cli({"config", "--set", "reconstruction.lambda=10"});
    CHECK(r.code == 0);
    CHECK(r.out.find("lambda = 10\n") != std::string::npos);
    // a config file written by `config` loads back
    {
        std::ofstream f(tmp.path / "run.cfg");
        f << r.out;
    }
    r = run_cli({"config", "--config", (tmp.path / "run.cfg").string()});
    CHECK(r.out.find("lambda = 10\n") != std::string::npos);
}
