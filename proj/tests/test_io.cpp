#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "rcmap/config.hpp"
#include "rcmap/io.hpp"

using namespace rcmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rcmap_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("17-digit formatting round-trips doubles bit-exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> e(-300, 300);
  for (int k = 0; k < 2000; ++k) {
    double x = std::ldexp(u(rng), e(rng));
    double back = std::strtod(format_g17(x).c_str(), nullptr);
    CHECK(back == x);
  }
  CHECK(std::strtod(format_g17(0.1).c_str(), nullptr) == 0.1);
}

TEST_CASE("sensorgram CSV with sidecar round-trips bit-exactly") {
  TempDir tmp;
  SensorgramSet data;
  data.grid = InjectionGrid::uniform(0, 4, 25, 0.001, 2.0, 6);
  data.values.resize(25, 6);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (Eigen::Index i = 0; i < data.values.size(); ++i)
    data.values.data()[i] = u(rng);
  KineticsParams kp{0.5, 2.0, 0.1};
  DomainSpec dom;
  dom.ka = {-4, 0, true};
  dom.kd = {1, 8, true};

  std::string path = (tmp.path / "s.csv").string();
  write_sensorgram_csv(data, path);
  write_sensorgram_sidecar(data.grid, kp, dom, path + ".meta.json");
  auto back = read_sensorgram_csv(path);
  CHECK((back.data.values - data.values).norm() == 0.0);
  CHECK((back.data.grid.times - data.grid.times).norm() == 0.0);
  CHECK((back.data.grid.concentrations - data.grid.concentrations).norm() ==
        0.0);
  CHECK(back.kp.t_inj == kp.t_inj);
  CHECK(back.kp.dt_delay == kp.dt_delay);
  CHECK(back.domain.ka.log10);
  CHECK(back.domain.kd.hi == 8.0);
}

TEST_CASE("missing sidecar and malformed CSV are reported") {
  TempDir tmp;
  std::string path = (tmp.path / "bad.csv").string();
  {
    std::ofstream os(path);
    os << "t,C_1\n0,1\n1,not_a_number\n";
  }
  CHECK_THROWS(read_csv_matrix(path));
  {
    std::ofstream os(path);
    os << "t,C_1\n0,1\n1,2,3\n";
  }
  CHECK_THROWS(read_csv_matrix(path));
  {
    std::ofstream os(path);
    os << "t,C_1\n0,1\n1,2\n";
  }
  CHECK_THROWS(read_sensorgram_csv(path));  // no sidecar
  CHECK_THROWS(read_csv_matrix((tmp.path / "absent.csv").string()));
}

TEST_CASE("nodal map CSV and mesh file round-trip") {
  TempDir tmp;
  auto mesh = refine(uniform_initial_mesh({1, 7, 0, 3}, 5, 4), {1, 3});
  Eigen::VectorXd values(mesh.num_nodes());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < mesh.num_nodes(); ++i) values[i] = u(rng);

  std::string mpath = (tmp.path / "map.csv").string();
  write_nodal_map_csv(mesh, values, mpath);
  CHECK((read_nodal_map_csv(mpath) - values).norm() == 0.0);

  std::string meshpath = (tmp.path / "mesh.txt").string();
  write_mesh_file(mesh, meshpath);
  auto back = read_mesh_file(meshpath);
  REQUIRE(back.num_nodes() == mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i)
    CHECK((back.nodes()[i] - mesh.nodes()[i]).norm() == 0.0);
}

TEST_CASE("run configuration round-trips with a stable hash") {
  TempDir tmp;
  RunConfig cfg;
  cfg.domain.ka = {1, 7, false};
  cfg.domain.kd = {0, 3, false};
  cfg.grid = {0, 4, 150, 0.001, 2.0, 30};
  cfg.kinetics = {0, 2, 0};
  cfg.exact_map = {{1.0, 4.0, 4.0, 0.1}};
  cfg.synthetic.delta = 0.01;
  cfg.output_dir = (tmp.path / "run").string();
  cfg.validate();

  std::string path = (tmp.path / "cfg.json").string();
  save_run_config(cfg, path);
  auto back = load_run_config(path);
  CHECK(run_config_hash(back) == run_config_hash(cfg));
  CHECK(back.grid.nt == 150);
  CHECK(back.exact_map.size() == 1);
  CHECK(back.exact_map[0].decay == 0.1);

  back.synthetic.delta = 0.02;
  CHECK(run_config_hash(back) != run_config_hash(cfg));

  // the manifest embeds the config and reloads identically
  write_manifest(cfg, "simulate", (tmp.path / "run").string());
  auto from_manifest =
      load_run_config((tmp.path / "run" / "manifest.json").string());
  CHECK(run_config_hash(from_manifest) == run_config_hash(cfg));
}

TEST_CASE("config validation rejects bad settings") {
  RunConfig cfg;
  cfg.exact_map = {{1.0, 4.0, 4.0, 0.1}};
  cfg.domain.ka = {7, 1, false};
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg.domain.ka = {1, 7, false};
  cfg.analysis.nu = 100;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg.analysis.nu = 5;
  cfg.exact_map.clear();
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("analytic map sums the configured bumps") {
  RunConfig cfg;
  cfg.exact_map = {{2.0, 1.0, 0.0, 1.0}, {1.0, -1.0, 0.0, 0.5}};
  auto f = cfg.make_exact_map();
  double expect = 2.0 * std::exp(-1.0 * 4.0) + 1.0;  // at (-1, 0)
  CHECK(f(-1.0, 0.0) == doctest::Approx(expect).epsilon(1e-15));
}
