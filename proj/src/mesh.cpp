#include "hho/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace hho {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Orientation sign of (a, b, c): >0 left turn, <0 right turn, 0 collinear.
int orient(const Point& a, const Point& b, const Point& c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

// Uniform bucket grid over the vertex cloud, used to find the vertices lying
// on an element side without an all-pairs search.
class VertexGrid {
 public:
  explicit VertexGrid(const std::vector<Point>& pts) : pts_(pts) {
    lo_ = pts.front();
    Point hi = pts.front();
    for (const Point& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Point ext = (hi - lo_).cwiseMax(Point::Constant(1e-300));
    const double cell = std::sqrt(std::max(ext.x() * ext.y(), ext.squaredNorm() * 1e-6) /
                                  static_cast<double>(pts.size()));
    cell_ = cell > 0.0 ? cell : 1.0;
    nx_ = std::max<long>(1, static_cast<long>(ext.x() / cell_) + 1);
    ny_ = std::max<long>(1, static_cast<long>(ext.y() / cell_) + 1);
    nx_ = std::min<long>(nx_, 1 << 14);
    ny_ = std::min<long>(ny_, 1 << 14);
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t i = 0; i < pts.size(); ++i) buckets_[bucket(pts[i])].push_back(i);
  }

  template <class Fn>
  void visit_box(const Point& a, const Point& b, double pad, Fn&& fn) const {
    const auto [i0, j0] = index(a.cwiseMin(b) - Point::Constant(pad));
    const auto [i1, j1] = index(a.cwiseMax(b) + Point::Constant(pad));
    for (long j = j0; j <= j1; ++j)
      for (long i = i0; i <= i1; ++i)
        for (std::size_t v : buckets_[static_cast<std::size_t>(j * nx_ + i)]) fn(v);
  }

 private:
  std::pair<long, long> index(const Point& p) const {
    auto clamp = [](long v, long n) { return std::clamp<long>(v, 0, n - 1); };
    return {clamp(static_cast<long>(std::floor((p.x() - lo_.x()) / cell_)), nx_),
            clamp(static_cast<long>(std::floor((p.y() - lo_.y()) / cell_)), ny_)};
  }
  std::size_t bucket(const Point& p) const {
    const auto [i, j] = index(p);
    return static_cast<std::size_t>(j * nx_ + i);
  }

  const std::vector<Point>& pts_;
  Point lo_;
  double cell_ = 1.0;
  long nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

struct PairHash {
  std::size_t operator()(const std::pair<std::size_t, std::size_t>& p) const noexcept {
    return std::hash<std::size_t>{}(p.first * 0x9E3779B97F4A7C15ull ^ p.second);
  }
};

std::string element_msg(std::size_t e, const std::string& what) {
  return "element " + std::to_string(e) + ": " + what;
}

}  // namespace

PolyMesh PolyMesh::from_polygons(std::vector<Point> vertices,
                                 std::vector<std::vector<std::size_t>> loops) {
  if (vertices.empty()) throw MeshError("mesh has no vertices");
  if (loops.empty()) throw MeshError("mesh has no elements");

  PolyMesh mesh;
  mesh.vertices_ = std::move(vertices);
  const auto& V = mesh.vertices_;
  mesh.elements_.resize(loops.size());

  // Element-intrinsic geometry from the vertex loop.
  for (std::size_t e = 0; e < loops.size(); ++e) {
    auto& loop = loops[e];
    Element& el = mesh.elements_[e];
    if (loop.size() < 3) throw MeshError(element_msg(e, "fewer than 3 vertices"), e);
    for (std::size_t v : loop)
      if (v >= V.size()) throw MeshError(element_msg(e, "vertex id out of range"), e);
    {
      auto sorted = loop;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw MeshError(element_msg(e, "repeated vertex in loop"), e);
    }
    const std::size_t p = loop.size();
    double a2 = 0.0;
    Point m = Point::Zero();
    const Point& o = V[loop[0]];
    for (std::size_t i = 0; i < p; ++i) {
      const Point x0 = V[loop[i]] - o;
      const Point x1 = V[loop[(i + 1) % p]] - o;
      const double c = cross(x0, x1);
      a2 += c;
      m += c * (x0 + x1);
    }
    if (!(a2 > 0.0)) throw MeshError(element_msg(e, "non-positive signed area (not CCW)"), e);
    el.area = 0.5 * a2;
    el.centroid = o + m / (3.0 * a2);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j)
        el.diameter = std::max(el.diameter, (V[loop[i]] - V[loop[j]]).norm());

    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 2; j < p; ++j) {
        if (i == 0 && j == p - 1) continue;  // adjacent through the wrap
        if (segments_intersect(V[loop[i]], V[loop[(i + 1) % p]], V[loop[j]],
                               V[loop[(j + 1) % p]]))
          throw MeshError(element_msg(e, "polygon is not simple"), e);
      }
    }
    el.vertices = std::move(loop);
  }

  // Face derivation: split every side at the mesh vertices lying on it.
  VertexGrid grid(V);
  std::unordered_map<std::pair<std::size_t, std::size_t>, std::size_t, PairHash> face_index;
  for (std::size_t e = 0; e < mesh.elements_.size(); ++e) {
    Element& el = mesh.elements_[e];
    const double tol = 1e-12 * el.diameter;
    const std::size_t p = el.vertices.size();
    for (std::size_t i = 0; i < p; ++i) {
      const std::size_t va = el.vertices[i];
      const std::size_t vb = el.vertices[(i + 1) % p];
      const Point& a = V[va];
      const Point& b = V[vb];
      const Point ab = b - a;
      const double len = ab.norm();
      std::vector<std::pair<double, std::size_t>> chain{{0.0, va}, {1.0, vb}};
      grid.visit_box(a, b, tol, [&](std::size_t v) {
        if (v == va || v == vb) return;
        const Point ap = V[v] - a;
        const double t = ap.dot(ab) / (len * len);
        if (t < -1e-14 || t > 1.0 + 1e-14) return;
        if (std::abs(cross(ab, ap)) / len > tol) return;
        chain.emplace_back(t, v);
      });
      std::sort(chain.begin(), chain.end());
      for (std::size_t c = 0; c + 1 < chain.size(); ++c) {
        const std::size_t u = chain[c].second;
        const std::size_t w = chain[c + 1].second;
        const double flen = (V[w] - V[u]).norm();
        if (!(flen > tol))
          throw MeshError(element_msg(e, "zero-length face (duplicate vertices)"), e);
        const auto key = std::minmax(u, w);
        auto [it, inserted] = face_index.try_emplace({key.first, key.second}, mesh.faces_.size());
        if (inserted) {
          Face f;
          f.vertices = {u, w};
          f.elements = {e, npos};
          f.length = flen;
          f.midpoint = 0.5 * (V[u] + V[w]);
          f.tangent = (V[w] - V[u]) / flen;
          mesh.faces_.push_back(f);
        } else {
          Face& f = mesh.faces_[it->second];
          if (f.elements[0] == e)
            throw MeshError(element_msg(e, "face emitted twice by the same element"), e);
          if (f.elements[1] != npos)
            throw MeshError(element_msg(e, "face shared by more than two elements"), e);
          f.elements[1] = e;
        }
        ElementFace ef;
        ef.face = it->second;
        ef.orientation = mesh.faces_[it->second].vertices[0] == u ? 1 : -1;
        el.faces.push_back(ef);
      }
    }
  }

  for (Face& f : mesh.faces_) f.boundary = f.elements[1] == npos;

  for (std::size_t e = 0; e < mesh.elements_.size(); ++e) {
    Element& el = mesh.elements_[e];
    for (ElementFace& ef : el.faces) {
      const Face& f = mesh.faces_[ef.face];
      const Point dir = ef.orientation * f.tangent;
      ef.normal = Point(dir.y(), -dir.x());
      ef.distance = (f.midpoint - el.centroid).dot(ef.normal);
      if (!(ef.distance > 1e-14 * el.diameter))
        throw MeshError(element_msg(e, "not star-shaped with respect to its centroid"), e);
    }
  }
  return mesh;
}

std::size_t PolyMesh::num_boundary_faces() const {
  return static_cast<std::size_t>(
      std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.boundary; }));
}

double PolyMesh::meshsize() const {
  double h = 0.0;
  for (const Element& el : elements_) h = std::max(h, el.diameter);
  return h;
}

double PolyMesh::total_area() const {
  double a = 0.0;
  for (const Element& el : elements_) a += el.area;
  return a;
}

bool PolyMesh::has_hanging_nodes() const {
  return std::any_of(elements_.begin(), elements_.end(),
                     [](const Element& el) { return el.faces.size() != el.vertices.size(); });
}

bool PolyMesh::is_triangular() const {
  return std::all_of(elements_.begin(), elements_.end(), [](const Element& el) {
    return el.vertices.size() == 3 && el.faces.size() == 3;
  });
}

std::optional<std::string> PolyMesh::check_invariants() const {
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    const Face& f = faces_[i];
    if (f.elements[0] == npos) return "face " + std::to_string(i) + " has no element";
    if (f.boundary != (f.elements[1] == npos))
      return "face " + std::to_string(i) + " boundary flag inconsistent";
  }
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const Element& el = elements_[e];
    if (!(el.area > 0.0)) return element_msg(e, "non-positive area");
    Point flux = Point::Zero();
    double pyramid = 0.0;
    double max_len = 0.0;
    for (std::size_t i = 0; i < el.faces.size(); ++i) {
      const ElementFace& ef = el.faces[i];
      const Face& f = faces_[ef.face];
      if (!(ef.distance > 0.0)) return element_msg(e, "non-positive d_TF");
      flux += f.length * ef.normal;
      pyramid += 0.5 * ef.distance * f.length;
      max_len = std::max(max_len, f.length);
      // Closed loop: this face ends where the next one starts.
      const ElementFace& next = el.faces[(i + 1) % el.faces.size()];
      const std::size_t end = f.vertices[ef.orientation > 0 ? 1 : 0];
      const Face& g = faces_[next.face];
      const std::size_t start = g.vertices[next.orientation > 0 ? 0 : 1];
      if (end != start) return element_msg(e, "face loop is not closed");
    }
    if (flux.norm() > 1e-12 * el.diameter) return element_msg(e, "sum |F| n_TF != 0");
    if (std::abs(pyramid - el.area) > 1e-12 * el.area)
      return element_msg(e, "sum d_TF |F| / 2 != |T|");
    if (el.diameter < max_len * (1.0 - 1e-14)) return element_msg(e, "h_T < max face length");
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text format

PolyMesh load_mesh(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::size_t> line_no;
  {
    std::size_t start = 0, no = 0;
    while (start <= text.size()) {
      const std::size_t end = std::min(text.find('\n', start), text.size());
      ++no;
      std::string_view line = text.substr(start, end - start);
      if (const auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      std::istringstream in{std::string(line)};
      std::vector<std::string> tokens;
      for (std::string tok; in >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) {
        lines.push_back(std::move(tokens));
        line_no.push_back(no);
      }
      if (end == text.size()) break;
      start = end + 1;
    }
  }

  std::size_t cur = 0;
  auto fail = [&](const std::string& what) -> MeshError {
    const std::size_t no = cur < line_no.size() ? line_no[cur] : line_no.empty() ? 0 : line_no.back();
    return MeshError("mesh format, line " + std::to_string(no) + ": " + what);
  };
  auto parse_size = [&](const std::string& tok) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw fail("expected integer, got '" + tok + "'");
    return v;
  };
  auto parse_double = [&](const std::string& tok) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
      throw fail("expected number, got '" + tok + "'");
    return v;
  };
  auto expect_header = [&](const char* keyword) {
    if (cur >= lines.size()) throw fail(std::string("missing ") + keyword);
    const auto& l = lines[cur];
    if (l.size() != 2 || l[0] != keyword) throw fail(std::string("expected '") + keyword + " <n>'");
    return parse_size(l[1]);
  };

  if (cur >= lines.size() || lines[cur].size() != 2 || lines[cur][0] != "POLYMESH2D" ||
      lines[cur][1] != "1")
    throw fail("expected 'POLYMESH2D 1'");
  ++cur;
  const std::size_t nv = expect_header("VERTICES");
  ++cur;
  std::vector<Point> vertices;
  vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i, ++cur) {
    if (cur >= lines.size()) throw fail("truncated vertex list");
    if (lines[cur].size() != 2) throw fail("vertex line needs 2 coordinates");
    vertices.emplace_back(parse_double(lines[cur][0]), parse_double(lines[cur][1]));
  }
  const std::size_t ne = expect_header("ELEMENTS");
  ++cur;
  std::vector<std::vector<std::size_t>> loops;
  loops.reserve(ne);
  for (std::size_t e = 0; e < ne; ++e, ++cur) {
    if (cur >= lines.size()) throw fail("truncated element list");
    const auto& l = lines[cur];
    const std::size_t p = parse_size(l[0]);
    if (l.size() != p + 1) throw fail("element vertex count mismatch");
    std::vector<std::size_t> loop;
    for (std::size_t i = 1; i <= p; ++i) loop.push_back(parse_size(l[i]));
    loops.push_back(std::move(loop));
  }
  if (cur != lines.size()) throw fail("trailing content after element list");
  return PolyMesh::from_polygons(std::move(vertices), std::move(loops));
}

PolyMesh load_mesh_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_mesh(ss.str());
}

std::string serialize(const PolyMesh& mesh) {
  std::string out = "POLYMESH2D 1\nVERTICES " + std::to_string(mesh.num_vertices()) + "\n";
  char buf[64];
  for (const Point& p : mesh.vertices()) {
    for (int c = 0; c < 2; ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, p[c]);
      out.append(buf, res.ptr);
      out.push_back(c == 0 ? ' ' : '\n');
    }
  }
  out += "ELEMENTS " + std::to_string(mesh.num_elements()) + "\n";
  for (const Element& el : mesh.elements()) {
    out += std::to_string(el.vertices.size());
    for (std::size_t v : el.vertices) out += " " + std::to_string(v);
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------

RegularityReport regularity_report(const PolyMesh& mesh) {
  RegularityReport r;
  for (const Element& el : mesh.elements()) {
    double dmin = std::numeric_limits<double>::infinity();
    for (const ElementFace& ef : el.faces) dmin = std::min(dmin, ef.distance);
    r.h_over_rho.push_back(el.diameter / (2.0 * dmin));
    r.min_d_over_h.push_back(dmin / el.diameter);
    ++r.face_count_histogram[el.faces.size()];
    r.max_h_over_rho = std::max(r.max_h_over_rho, r.h_over_rho.back());
    r.min_d_over_h_global = std::min(r.min_d_over_h_global, r.min_d_over_h.back());
  }
  return r;
}

std::string to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::cartesian: return "cartesian";
    case FamilyTag::triangular: return "triangular";
    case FamilyTag::nonconforming: return "nonconforming";
    case FamilyTag::agglomerated: return "agglomerated";
  }
  return "?";
}

FamilyTag family_tag_from_string(std::string_view name) {
  if (name == "cartesian") return FamilyTag::cartesian;
  if (name == "triangular") return FamilyTag::triangular;
  if (name == "nonconforming" || name == "nonconf") return FamilyTag::nonconforming;
  if (name == "agglomerated" || name == "agglo") return FamilyTag::agglomerated;
  throw std::invalid_argument("unknown mesh family '" + std::string(name) + "'");
}

void MeshFamily::validate() const {
  for (std::size_t i = 1; i < meshes.size(); ++i) {
    if (!(meshes[i].meshsize() < meshes[i - 1].meshsize()))
      throw MeshError("mesh family: h not strictly decreasing at level " + std::to_string(i));
    const double a0 = meshes[0].total_area();
    if (std::abs(meshes[i].total_area() - a0) > 1e-12 * a0)
      throw MeshError("mesh family: domain area differs at level " + std::to_string(i));
  }
}

MeshFamily make_family(FamilyTag tag, std::span<const int> levels) {
  MeshFamily fam;
  fam.tag = tag;
  fam.levels.assign(levels.begin(), levels.end());
  for (int n : levels) {
    switch (tag) {
      case FamilyTag::cartesian: fam.meshes.push_back(generate(MeshKind::cartesian, n)); break;
      case FamilyTag::triangular: fam.meshes.push_back(generate(MeshKind::triangular, n)); break;
      case FamilyTag::nonconforming: fam.meshes.push_back(generate_nonconforming(n, 0.5)); break;
      case FamilyTag::agglomerated: fam.meshes.push_back(generate_agglomerated(n, 2)); break;
    }
  }
  fam.validate();
  return fam;
}

}  // namespace hho
