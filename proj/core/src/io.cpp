#include "rcmap/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace rcmap {

std::string format_g17(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) throw std::runtime_error("format_g17 failed");
  return {buf, end};
}

void write_sensorgram_csv(const SensorgramSet& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "t";
  for (int j = 0; j < data.grid.nc(); ++j) os << ",C_" << (j + 1);
  os << "\n";
  for (int i = 0; i < data.grid.nt(); ++i) {
    os << format_g17(data.grid.times[i]);
    for (int j = 0; j < data.grid.nc(); ++j)
      os << "," << format_g17(data.values(i, j));
    os << "\n";
  }
}

Eigen::MatrixXd read_csv_matrix(const std::string& path, int skip_rows,
                                int skip_cols) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno <= skip_rows) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col++ < skip_cols) continue;
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows.front().size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
  return m;
}

void write_sensorgram_sidecar(const InjectionGrid& grid,
                              const KineticsParams& kp,
                              const DomainSpec& domain,
                              const std::string& path) {
  nlohmann::json j;
  j["concentrations"] = std::vector<double>(
      grid.concentrations.begin(), grid.concentrations.end());
  j["kinetics"] = {{"t0", kp.t0},
                   {"t_inj", kp.t_inj},
                   {"dt_delay", kp.dt_delay}};
  j["domain"] = {{"ka", {{"lo", domain.ka.lo},
                         {"hi", domain.ka.hi},
                         {"log10", domain.ka.log10}}},
                 {"kd", {{"lo", domain.kd.lo},
                         {"hi", domain.kd.hi},
                         {"log10", domain.kd.log10}}}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << j.dump(2) << "\n";
}

SensorgramFile read_sensorgram_csv(const std::string& path) {
  Eigen::MatrixXd m = read_csv_matrix(path, 1, 0);
  if (m.cols() < 2)
    throw std::runtime_error(path + ": expected t plus >= 1 response column");

  std::ifstream is(path + ".meta.json");
  if (!is)
    throw std::runtime_error(path + ".meta.json: missing sidecar");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ".meta.json: " + e.what());
  }

  SensorgramFile file;
  std::vector<double> conc = j.at("concentrations").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(conc.size()) != m.cols() - 1)
    throw std::runtime_error(path + ": concentration count (" +
                             std::to_string(conc.size()) +
                             ") != response columns (" +
                             std::to_string(m.cols() - 1) + ")");
  file.data.grid.times = m.col(0);
  file.data.grid.concentrations =
      Eigen::Map<const Eigen::VectorXd>(conc.data(), conc.size());
  file.data.values = m.rightCols(m.cols() - 1);
  file.data.grid.validate();

  const auto& k = j.at("kinetics");
  file.kp.t0 = k.at("t0").get<double>();
  file.kp.t_inj = k.at("t_inj").get<double>();
  file.kp.dt_delay = k.at("dt_delay").get<double>();
  file.kp.validate();

  const auto& d = j.at("domain");
  auto read_axis = [](const nlohmann::json& a) {
    DomainAxis axis;
    axis.lo = a.at("lo").get<double>();
    axis.hi = a.at("hi").get<double>();
    axis.log10 = a.at("log10").get<bool>();
    return axis;
  };
  file.domain.ka = read_axis(d.at("ka"));
  file.domain.kd = read_axis(d.at("kd"));
  return file;
}

void write_nodal_map_csv(const TriMesh& mesh, const Eigen::VectorXd& values,
                         const std::string& path) {
  if (values.size() != mesh.num_nodes())
    throw std::invalid_argument("nodal map size != node count");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "node,x,y,value\n";
  for (int i = 0; i < mesh.num_nodes(); ++i)
    os << i << "," << format_g17(mesh.nodes()[i].x()) << ","
       << format_g17(mesh.nodes()[i].y()) << "," << format_g17(values[i])
       << "\n";
}

Eigen::VectorXd read_nodal_map_csv(const std::string& path) {
  Eigen::MatrixXd m = read_csv_matrix(path, 1, 0);
  if (m.cols() != 4)
    throw std::runtime_error(path + ": expected node,x,y,value");
  return m.col(3);
}

void write_mesh_file(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  mesh.write(os);
}

TriMesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return TriMesh::read(is);
}

}  // namespace rcmap
