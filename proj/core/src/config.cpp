#include "rcmap/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rcmap/io.hpp"

namespace rcmap {

using nlohmann::json;

InjectionGrid GridSpec::make() const {
  return InjectionGrid::uniform(t_begin, t_end, nt, c_lo, c_hi, nc);
}

void RunConfig::validate() const {
  kinetics.validate();
  grid.make().validate();
  hyperpriors.validate();
  avba.validate();
  mcmc.validate();
  if (domain.ka.hi <= domain.ka.lo || domain.kd.hi <= domain.kd.lo)
    throw std::domain_error("config: domain axes must have lo < hi");
  if (!domain.ka.log10 && domain.ka.lo < 0)
    throw std::domain_error("config: raw ka axis must be nonnegative");
  if (!domain.kd.log10 && domain.kd.lo < 0)
    throw std::domain_error("config: raw kd axis must be nonnegative");
  if (mesh_nx < 2 || mesh_ny < 2)
    throw std::domain_error("config: mesh_nx/mesh_ny must be >= 2");
  if (exact_map.empty())
    throw std::domain_error("config: exact_map needs >= 1 bump");
  for (const auto& b : exact_map)
    if (!(b.decay > 0))
      throw std::domain_error("config: bump decay must be > 0");
  if (!(synthetic.delta >= 0))
    throw std::domain_error("config: synthetic.delta must be >= 0");
  if (!(analysis.nu > 0 && analysis.nu < 100))
    throw std::domain_error("config: analysis.nu must lie in (0, 100)");
  if (analysis.raster < 2)
    throw std::domain_error("config: analysis.raster must be >= 2");
  for (double p : analysis.moments)
    if (!(p > 0))
      throw std::domain_error("config: moment orders must be > 0");
}

AnalyticMap RunConfig::make_exact_map() const {
  std::vector<GaussianBump> bumps = exact_map;
  return [bumps](double x, double y) {
    double v = 0;
    for (const auto& b : bumps) {
      double dx = x - b.x0, dy = y - b.y0;
      v += b.amplitude * std::exp(-b.decay * (dx * dx + dy * dy));
    }
    return v;
  };
}

namespace {

json axis_json(const DomainAxis& a) {
  return {{"lo", a.lo}, {"hi", a.hi}, {"log10", a.log10}};
}

DomainAxis axis_from(const json& j) {
  DomainAxis a;
  a.lo = j.at("lo").get<double>();
  a.hi = j.at("hi").get<double>();
  a.log10 = j.value("log10", false);
  return a;
}

const char* reg_name(RegKind k) {
  return k == RegKind::identity ? "identity" : "graph_laplacian_shifted";
}

RegKind reg_from(const std::string& s) {
  if (s == "identity") return RegKind::identity;
  if (s == "graph_laplacian_shifted") return RegKind::graph_laplacian_shifted;
  throw std::domain_error("config: unknown regularizer '" + s + "'");
}

}  // namespace

std::string run_config_json(const RunConfig& cfg) {
  json j;
  j["domain"] = {{"ka", axis_json(cfg.domain.ka)},
                 {"kd", axis_json(cfg.domain.kd)}};
  j["grid"] = {{"t_begin", cfg.grid.t_begin}, {"t_end", cfg.grid.t_end},
               {"nt", cfg.grid.nt},           {"c_lo", cfg.grid.c_lo},
               {"c_hi", cfg.grid.c_hi},       {"nc", cfg.grid.nc}};
  j["kinetics"] = {{"t0", cfg.kinetics.t0},
                   {"t_inj", cfg.kinetics.t_inj},
                   {"dt_delay", cfg.kinetics.dt_delay}};
  j["exact_map"] = json::array();
  for (const auto& b : cfg.exact_map)
    j["exact_map"].push_back({{"amplitude", b.amplitude},
                              {"x0", b.x0},
                              {"y0", b.y0},
                              {"decay", b.decay}});
  j["synthetic"] = {{"delta", cfg.synthetic.delta},
                    {"ref_nx", cfg.synthetic.ref_nx},
                    {"ref_ny", cfg.synthetic.ref_ny},
                    {"per_point_noise", cfg.synthetic.per_point_noise}};
  j["mesh"] = {{"nx", cfg.mesh_nx}, {"ny", cfg.mesh_ny}};
  j["hyperpriors"] = {{"alpha_j", cfg.hyperpriors.alpha_j},
                      {"beta_j", cfg.hyperpriors.beta_j},
                      {"alpha_c", cfg.hyperpriors.alpha_c},
                      {"beta_c", cfg.hyperpriors.beta_c}};
  j["avba"] = {{"tau", cfg.avba.tau},
               {"eps", cfg.avba.eps},
               {"max_outer", cfg.avba.max_outer},
               {"sample_count", cfg.avba.sample_count},
               {"refine_budget", cfg.avba.refine_budget},
               {"quad_order", cfg.avba.quad_order},
               {"reg", reg_name(cfg.avba.reg)},
               {"reg_eps", cfg.avba.reg_eps},
               {"lambda0", cfg.avba.lambda0},
               {"kappa0", cfg.avba.kappa0},
               {"vb_tol", cfg.avba.vb_tol},
               {"vb_max_iter", cfg.avba.vb_max_iter},
               {"vb_burn_in", cfg.avba.vb_burn_in}};
  j["mcmc"] = {{"chain_length", cfg.mcmc.chain_length},
               {"burn_in", cfg.mcmc.burn_in},
               {"thinning", cfg.mcmc.thinning},
               {"t_max_seconds", cfg.mcmc.t_max_seconds},
               {"lambda0", cfg.mcmc.lambda0}};
  j["analysis"] = {{"nu", cfg.analysis.nu},
                   {"raster", cfg.analysis.raster},
                   {"moments", cfg.analysis.moments}};
  j["seeds"] = {{"data", cfg.seeds.data},
                {"vb", cfg.seeds.vb},
                {"mcmc", cfg.seeds.mcmc}};
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }

  // a run manifest embeds the resolved configuration under "config"
  if (j.contains("config") && j["config"].is_object()) j = j["config"];

  RunConfig cfg;
  try {
    if (j.contains("domain")) {
      cfg.domain.ka = axis_from(j["domain"].at("ka"));
      cfg.domain.kd = axis_from(j["domain"].at("kd"));
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      cfg.grid.t_begin = g.value("t_begin", cfg.grid.t_begin);
      cfg.grid.t_end = g.value("t_end", cfg.grid.t_end);
      cfg.grid.nt = g.value("nt", cfg.grid.nt);
      cfg.grid.c_lo = g.value("c_lo", cfg.grid.c_lo);
      cfg.grid.c_hi = g.value("c_hi", cfg.grid.c_hi);
      cfg.grid.nc = g.value("nc", cfg.grid.nc);
    }
    if (j.contains("kinetics")) {
      const auto& k = j["kinetics"];
      cfg.kinetics.t0 = k.value("t0", cfg.kinetics.t0);
      cfg.kinetics.t_inj = k.value("t_inj", cfg.kinetics.t_inj);
      cfg.kinetics.dt_delay = k.value("dt_delay", cfg.kinetics.dt_delay);
    }
    if (j.contains("exact_map")) {
      cfg.exact_map.clear();
      for (const auto& bj : j["exact_map"]) {
        GaussianBump b;
        b.amplitude = bj.value("amplitude", 1.0);
        b.x0 = bj.at("x0").get<double>();
        b.y0 = bj.at("y0").get<double>();
        b.decay = bj.value("decay", 1.0);
        cfg.exact_map.push_back(b);
      }
    }
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      cfg.synthetic.delta = s.value("delta", cfg.synthetic.delta);
      cfg.synthetic.ref_nx = s.value("ref_nx", cfg.synthetic.ref_nx);
      cfg.synthetic.ref_ny = s.value("ref_ny", cfg.synthetic.ref_ny);
      cfg.synthetic.per_point_noise =
          s.value("per_point_noise", cfg.synthetic.per_point_noise);
    }
    if (j.contains("mesh")) {
      cfg.mesh_nx = j["mesh"].value("nx", cfg.mesh_nx);
      cfg.mesh_ny = j["mesh"].value("ny", cfg.mesh_ny);
    }
    if (j.contains("hyperpriors")) {
      const auto& h = j["hyperpriors"];
      cfg.hyperpriors.alpha_j = h.value("alpha_j", cfg.hyperpriors.alpha_j);
      cfg.hyperpriors.beta_j = h.value("beta_j", cfg.hyperpriors.beta_j);
      cfg.hyperpriors.alpha_c = h.value("alpha_c", cfg.hyperpriors.alpha_c);
      cfg.hyperpriors.beta_c = h.value("beta_c", cfg.hyperpriors.beta_c);
    }
    if (j.contains("avba")) {
      const auto& a = j["avba"];
      cfg.avba.tau = a.value("tau", cfg.avba.tau);
      cfg.avba.eps = a.value("eps", cfg.avba.eps);
      cfg.avba.max_outer = a.value("max_outer", cfg.avba.max_outer);
      cfg.avba.sample_count = a.value("sample_count", cfg.avba.sample_count);
      cfg.avba.refine_budget =
          a.value("refine_budget", cfg.avba.refine_budget);
      cfg.avba.quad_order = a.value("quad_order", cfg.avba.quad_order);
      if (a.contains("reg"))
        cfg.avba.reg = reg_from(a["reg"].get<std::string>());
      cfg.avba.reg_eps = a.value("reg_eps", cfg.avba.reg_eps);
      cfg.avba.lambda0 = a.value("lambda0", cfg.avba.lambda0);
      cfg.avba.kappa0 = a.value("kappa0", cfg.avba.kappa0);
      cfg.avba.vb_tol = a.value("vb_tol", cfg.avba.vb_tol);
      cfg.avba.vb_max_iter = a.value("vb_max_iter", cfg.avba.vb_max_iter);
      cfg.avba.vb_burn_in = a.value("vb_burn_in", cfg.avba.vb_burn_in);
    }
    if (j.contains("mcmc")) {
      const auto& m = j["mcmc"];
      cfg.mcmc.chain_length = m.value("chain_length", cfg.mcmc.chain_length);
      cfg.mcmc.burn_in = m.value("burn_in", cfg.mcmc.burn_in);
      cfg.mcmc.thinning = m.value("thinning", cfg.mcmc.thinning);
      cfg.mcmc.t_max_seconds =
          m.value("t_max_seconds", cfg.mcmc.t_max_seconds);
      cfg.mcmc.lambda0 = m.value("lambda0", cfg.mcmc.lambda0);
    }
    if (j.contains("analysis")) {
      const auto& a = j["analysis"];
      cfg.analysis.nu = a.value("nu", cfg.analysis.nu);
      cfg.analysis.raster = a.value("raster", cfg.analysis.raster);
      if (a.contains("moments"))
        cfg.analysis.moments = a["moments"].get<std::vector<double>>();
    }
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      cfg.seeds.data = s.value("data", cfg.seeds.data);
      cfg.seeds.vb = s.value("vb", cfg.seeds.vb);
      cfg.seeds.mcmc = s.value("mcmc", cfg.seeds.mcmc);
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << run_config_json(cfg) << "\n";
}

std::uint64_t run_config_hash(const RunConfig& cfg) {
  std::string s = run_config_json(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand,
                    const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json j;
  j["subcommand"] = subcommand;
  j["config_hash"] = run_config_hash(cfg);
  j["seeds"] = {{"data", cfg.seeds.data},
                {"vb", cfg.seeds.vb},
                {"mcmc", cfg.seeds.mcmc}};
  j["config"] = json::parse(run_config_json(cfg));
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw std::runtime_error("cannot open manifest in " + dir);
  os << j.dump(2) << "\n";
}

}  // namespace rcmap
