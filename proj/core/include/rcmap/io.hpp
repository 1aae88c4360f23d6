#ifndef RCMAP_IO_HPP
#define RCMAP_IO_HPP

#include <string>

#include "rcmap/kinetics.hpp"

namespace rcmap {

/// Shortest decimal with 17 significant digits (round-trips doubles).
std::string format_g17(double v);

/// Sensorgram CSV: header `t,C_1,...,C_{N_C}`, one row per time point.
/// Concentrations and kinetics parameters travel in a JSON sidecar.
void write_sensorgram_csv(const SensorgramSet& data, const std::string& path);
Eigen::MatrixXd read_csv_matrix(const std::string& path, int skip_rows = 1,
                                int skip_cols = 0);

void write_sensorgram_sidecar(const InjectionGrid& grid,
                              const KineticsParams& kp,
                              const DomainSpec& domain,
                              const std::string& path);

struct SensorgramFile {
  SensorgramSet data;
  KineticsParams kp;
  DomainSpec domain;
};

/// Reads `path` plus its `.meta.json` sidecar.
SensorgramFile read_sensorgram_csv(const std::string& path);

/// Nodal map CSV: header `node,x,y,value`.
void write_nodal_map_csv(const TriMesh& mesh, const Eigen::VectorXd& values,
                         const std::string& path);
Eigen::VectorXd read_nodal_map_csv(const std::string& path);

void write_mesh_file(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh_file(const std::string& path);

}  // namespace rcmap

#endif
