#include "rcmap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace rcmap {

namespace {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          const Eigen::Vector2d& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

TriMesh::TriMesh(std::vector<Eigen::Vector2d> nodes, std::vector<Tri> triangles)
    : nodes_(std::move(nodes)), tris_(std::move(triangles)) {
  if (nodes_.empty() || tris_.empty())
    throw std::invalid_argument("TriMesh: empty mesh");
  for (const auto& t : tris_) {
    for (int v : t.v)
      if (v < 0 || v >= num_nodes())
        throw std::invalid_argument("TriMesh: vertex index out of range");
    if (signed_area(nodes_[t.v[0]], nodes_[t.v[1]], nodes_[t.v[2]]) <= 0)
      throw std::invalid_argument("TriMesh: non-positive triangle area");
  }
  build_adjacency();
  build_buckets();
}

void TriMesh::build_adjacency() {
  neighbors_.assign(tris_.size(), {-1, -1, -1});
  std::unordered_map<std::uint64_t, std::pair<int, int>> first_use;
  first_use.reserve(tris_.size() * 2);
  for (int t = 0; t < num_triangles(); ++t) {
    for (int e = 0; e < 3; ++e) {
      std::uint64_t key = edge_key(tris_[t].v[e], tris_[t].v[(e + 1) % 3]);
      auto it = first_use.find(key);
      if (it == first_use.end()) {
        first_use.emplace(key, std::make_pair(t, e));
      } else {
        auto [ot, oe] = it->second;
        if (neighbors_[ot][oe] != -1)
          throw std::invalid_argument("TriMesh: edge shared by >2 triangles");
        neighbors_[t][e] = ot;
        neighbors_[ot][oe] = t;
      }
    }
  }

  node_adj_.assign(nodes_.size(), {});
  for (const auto& t : tris_) {
    for (int e = 0; e < 3; ++e) {
      int a = t.v[e], b = t.v[(e + 1) % 3];
      node_adj_[a].push_back(b);
      node_adj_[b].push_back(a);
    }
  }
  for (auto& adj : node_adj_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }
}

void TriMesh::build_buckets() {
  bounds_ = bounds();
  int target = std::max(1, static_cast<int>(std::sqrt(tris_.size() / 2.0)));
  grid_nx_ = target;
  grid_ny_ = target;
  buckets_.assign(static_cast<std::size_t>(grid_nx_) * grid_ny_, {});
  const double w = bounds_.width(), h = bounds_.height();
  for (int t = 0; t < num_triangles(); ++t) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (int v : tris_[t].v) {
      xmin = std::min(xmin, nodes_[v].x());
      xmax = std::max(xmax, nodes_[v].x());
      ymin = std::min(ymin, nodes_[v].y());
      ymax = std::max(ymax, nodes_[v].y());
    }
    int ix0 = std::clamp(static_cast<int>((xmin - bounds_.x0) / w * grid_nx_), 0, grid_nx_ - 1);
    int ix1 = std::clamp(static_cast<int>((xmax - bounds_.x0) / w * grid_nx_), 0, grid_nx_ - 1);
    int iy0 = std::clamp(static_cast<int>((ymin - bounds_.y0) / h * grid_ny_), 0, grid_ny_ - 1);
    int iy1 = std::clamp(static_cast<int>((ymax - bounds_.y0) / h * grid_ny_), 0, grid_ny_ - 1);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix)
        buckets_[static_cast<std::size_t>(iy) * grid_nx_ + ix].push_back(t);
  }
}

double TriMesh::area(int tri) const {
  const auto& t = tris_[tri];
  return signed_area(nodes_[t.v[0]], nodes_[t.v[1]], nodes_[t.v[2]]);
}

Eigen::Vector2d TriMesh::centroid(int tri) const {
  const auto& t = tris_[tri];
  return (nodes_[t.v[0]] + nodes_[t.v[1]] + nodes_[t.v[2]]) / 3.0;
}

double TriMesh::min_angle_deg() const {
  double worst = 180.0;
  for (const auto& t : tris_) {
    for (int e = 0; e < 3; ++e) {
      Eigen::Vector2d u = nodes_[t.v[(e + 1) % 3]] - nodes_[t.v[e]];
      Eigen::Vector2d w = nodes_[t.v[(e + 2) % 3]] - nodes_[t.v[e]];
      double cosang = u.dot(w) / (u.norm() * w.norm());
      double ang = std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / M_PI;
      worst = std::min(worst, ang);
    }
  }
  return worst;
}

double TriMesh::max_edge_length() const {
  double best = 0;
  for (const auto& t : tris_)
    for (int e = 0; e < 3; ++e)
      best = std::max(best,
                      (nodes_[t.v[(e + 1) % 3]] - nodes_[t.v[e]]).norm());
  return best;
}

double TriMesh::longest_edge_of(int tri) const {
  const auto& t = tris_[tri];
  double best = 0;
  for (int e = 0; e < 3; ++e)
    best = std::max(best, (nodes_[t.v[(e + 1) % 3]] - nodes_[t.v[e]]).norm());
  return best;
}

Rect TriMesh::bounds() const {
  Rect r{1e300, -1e300, 1e300, -1e300};
  for (const auto& p : nodes_) {
    r.x0 = std::min(r.x0, p.x());
    r.x1 = std::max(r.x1, p.x());
    r.y0 = std::min(r.y0, p.y());
    r.y1 = std::max(r.y1, p.y());
  }
  return r;
}

Eigen::Vector3d TriMesh::barycentric(int tri, const Eigen::Vector2d& p) const {
  const auto& t = tris_[tri];
  const Eigen::Vector2d &a = nodes_[t.v[0]], &b = nodes_[t.v[1]],
                        &c = nodes_[t.v[2]];
  double total = signed_area(a, b, c);
  return {signed_area(p, b, c) / total, signed_area(a, p, c) / total,
          signed_area(a, b, p) / total};
}

int TriMesh::locate(const Eigen::Vector2d& p) const {
  const double tol = -1e-12;
  int ix = std::clamp(
      static_cast<int>((p.x() - bounds_.x0) / bounds_.width() * grid_nx_), 0,
      grid_nx_ - 1);
  int iy = std::clamp(
      static_cast<int>((p.y() - bounds_.y0) / bounds_.height() * grid_ny_), 0,
      grid_ny_ - 1);
  for (int t : buckets_[static_cast<std::size_t>(iy) * grid_nx_ + ix]) {
    Eigen::Vector3d l = barycentric(t, p);
    if (l.minCoeff() >= tol) return t;
  }
  // fallback for points on bucket seams
  for (int t = 0; t < num_triangles(); ++t) {
    Eigen::Vector3d l = barycentric(t, p);
    if (l.minCoeff() >= tol) return t;
  }
  return -1;
}

bool TriMesh::is_conforming() const {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(tris_.size() * 2);
  for (const auto& t : tris_)
    for (int e = 0; e < 3; ++e)
      count[edge_key(t.v[e], t.v[(e + 1) % 3])]++;
  for (const auto& [key, c] : count)
    if (c != 1 && c != 2) return false;
  // no hanging nodes: refinement creates midpoints bit-exactly, so a node
  // sitting at the midpoint of a surviving edge is a conformity violation
  auto pos_key = [](const Eigen::Vector2d& p) {
    std::uint64_t x, y;
    std::memcpy(&x, &p.x(), 8);
    std::memcpy(&y, &p.y(), 8);
    return x * 1000003u ^ y;
  };
  std::unordered_map<std::uint64_t, int> by_pos;
  by_pos.reserve(nodes_.size());
  for (int m = 0; m < num_nodes(); ++m) by_pos.emplace(pos_key(nodes_[m]), m);
  for (const auto& [key, c] : count) {
    int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    Eigen::Vector2d mid = 0.5 * (nodes_[a] + nodes_[b]);
    auto it = by_pos.find(pos_key(mid));
    if (it != by_pos.end() && (nodes_[it->second] - mid).norm() == 0.0)
      return false;
  }
  return true;
}

void TriMesh::write(std::ostream& os) const {
  os.precision(17);
  for (const auto& p : nodes_) os << "v " << p.x() << " " << p.y() << "\n";
  for (const auto& t : tris_)
    os << "t " << t.v[0] << " " << t.v[1] << " " << t.v[2] << "\n";
}

TriMesh TriMesh::read(std::istream& is) {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<Tri> tris;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    char tag;
    ss >> tag;
    if (tag == 'v') {
      double x, y;
      ss >> x >> y;
      nodes.emplace_back(x, y);
    } else if (tag == 't') {
      Tri t{};
      ss >> t.v[0] >> t.v[1] >> t.v[2];
      tris.push_back(t);
    }
  }
  return TriMesh(std::move(nodes), std::move(tris));
}

TriMesh uniform_initial_mesh(const Rect& domain, int nx, int ny) {
  if (nx < 2 || ny < 2)
    throw std::invalid_argument("uniform_initial_mesh: nx, ny must be >= 2");
  if (domain.width() <= 0 || domain.height() <= 0)
    throw std::domain_error("uniform_initial_mesh: degenerate rectangle");
  std::vector<Eigen::Vector2d> nodes;
  nodes.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      nodes.emplace_back(domain.x0 + domain.width() * ix / (nx - 1),
                         domain.y0 + domain.height() * iy / (ny - 1));
  std::vector<TriMesh::Tri> tris;
  tris.reserve(2 * static_cast<std::size_t>(nx - 1) * (ny - 1));
  auto id = [nx](int ix, int iy) { return iy * nx + ix; };
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      int a = id(ix, iy), b = id(ix + 1, iy), c = id(ix, iy + 1),
          d = id(ix + 1, iy + 1);
      tris.push_back({{a, b, d}});
      tris.push_back({{a, d, c}});
    }
  }
  return TriMesh(std::move(nodes), std::move(tris));
}

namespace {

/// Mutable triangle soup used during refinement.
class RefineWork {
 public:
  explicit RefineWork(const TriMesh& mesh)
      : nodes_(mesh.nodes()) {
    for (const auto& t : mesh.triangles()) add_triangle(t.v);
  }

  bool alive(int t) const { return alive_[t]; }
  std::size_t alive_count() const { return alive_count_; }

  /// Bisect triangle t (and its incompatible neighbors, recursively)
  /// through the midpoint of the longest edge.
  void bisect(int t) {
    for (;;) {
      if (!alive_[t]) return;
      auto [a, b] = longest_edge(t);
      int nb = other_triangle(a, b, t);
      if (nb == -1) {
        split_pair(t, -1, a, b);
        return;
      }
      auto [na, nbv] = longest_edge(nb);
      if (edge_key(na, nbv) == edge_key(a, b)) {
        split_pair(t, nb, a, b);
        return;
      }
      bisect(nb);  // strictly longer edge: terminates
      // the triangle across (a, b) changed; retry
    }
  }

  TriMesh finish() {
    std::vector<TriMesh::Tri> tris;
    tris.reserve(alive_count_);
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (alive_[t]) tris.push_back({tris_[t]});
    return TriMesh(std::move(nodes_), std::move(tris));
  }

 private:
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<char> alive_;
  std::size_t alive_count_ = 0;
  // edge -> incident alive triangles (at most 2)
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge2tri_;
  std::unordered_map<std::uint64_t, int> midpoint_;

  int add_triangle(const std::array<int, 3>& v) {
    int id = static_cast<int>(tris_.size());
    tris_.push_back(v);
    alive_.push_back(1);
    ++alive_count_;
    for (int e = 0; e < 3; ++e) {
      std::uint64_t key = edge_key(v[e], v[(e + 1) % 3]);
      auto& slot = edge2tri_.try_emplace(key, std::array<int, 2>{-1, -1})
                       .first->second;
      if (slot[0] == -1)
        slot[0] = id;
      else
        slot[1] = id;
    }
    return id;
  }

  void remove_triangle(int t) {
    alive_[t] = 0;
    --alive_count_;
    const auto& v = tris_[t];
    for (int e = 0; e < 3; ++e) {
      auto& slot = edge2tri_[edge_key(v[e], v[(e + 1) % 3])];
      if (slot[0] == t) slot[0] = slot[1];
      slot[1] = -1;
    }
  }

  int other_triangle(int a, int b, int t) const {
    auto it = edge2tri_.find(edge_key(a, b));
    if (it == edge2tri_.end()) return -1;
    if (it->second[0] != -1 && it->second[0] != t) return it->second[0];
    if (it->second[1] != -1 && it->second[1] != t) return it->second[1];
    return -1;
  }

  /// Longest edge with a deterministic tie-break on the node-pair key,
  /// so both triangles sharing an edge agree.
  std::pair<int, int> longest_edge(int t) const {
    const auto& v = tris_[t];
    int ba = -1, bb = -1;
    double blen = -1;
    std::uint64_t bkey = 0;
    for (int e = 0; e < 3; ++e) {
      int a = v[e], b = v[(e + 1) % 3];
      double len = (nodes_[a] - nodes_[b]).squaredNorm();
      std::uint64_t key = edge_key(a, b);
      if (len > blen || (len == blen && key > bkey)) {
        blen = len;
        bkey = key;
        ba = a;
        bb = b;
      }
    }
    return {ba, bb};
  }

  int midpoint(int a, int b) {
    std::uint64_t key = edge_key(a, b);
    auto it = midpoint_.find(key);
    if (it != midpoint_.end()) return it->second;
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(0.5 * (nodes_[a] + nodes_[b]));
    midpoint_.emplace(key, id);
    return id;
  }

  void split_one(int t, int a, int b, int m) {
    const auto& v = tris_[t];
    int c = -1;
    for (int x : v)
      if (x != a && x != b) c = x;
    // preserve orientation: replace the (a, b) edge end by m in turn
    std::array<int, 3> t1{}, t2{};
    for (int e = 0; e < 3; ++e) {
      t1[e] = (v[e] == b) ? m : v[e];
      t2[e] = (v[e] == a) ? m : v[e];
    }
    (void)c;
    remove_triangle(t);
    add_triangle(t1);
    add_triangle(t2);
  }

  void split_pair(int t, int nb, int a, int b) {
    int m = midpoint(a, b);
    split_one(t, a, b, m);
    if (nb != -1) split_one(nb, a, b, m);
  }
};

}  // namespace

TriMesh refine(const TriMesh& mesh, const std::vector<int>& marked,
               std::size_t max_triangles) {
  if (marked.empty()) return mesh;
  for (int t : marked)
    if (t < 0 || t >= mesh.num_triangles())
      throw std::invalid_argument("refine: marked index out of range");
  RefineWork work(mesh);
  for (int t : marked) {
    if (!work.alive(t)) continue;  // already consumed by closure
    if (work.alive_count() >= max_triangles) break;
    work.bisect(t);
  }
  return work.finish();
}

double NodalBasis::eval(int l, const Eigen::Vector2d& p) const {
  int t = mesh_->locate(p);
  if (t < 0) throw std::domain_error("NodalBasis::eval: point outside mesh");
  const auto& tv = mesh_->triangles()[t].v;
  Eigen::Vector3d lam = mesh_->barycentric(t, p);
  for (int e = 0; e < 3; ++e)
    if (tv[e] == l) return std::clamp(lam[e], 0.0, 1.0);
  return 0.0;
}

double NodalBasis::interpolate(const Eigen::VectorXd& nodal,
                               const Eigen::Vector2d& p) const {
  int t = mesh_->locate(p);
  if (t < 0)
    throw std::domain_error("NodalBasis::interpolate: point outside mesh");
  const auto& tv = mesh_->triangles()[t].v;
  Eigen::Vector3d lam = mesh_->barycentric(t, p);
  return lam[0] * nodal[tv[0]] + lam[1] * nodal[tv[1]] + lam[2] * nodal[tv[2]];
}

}  // namespace rcmap
