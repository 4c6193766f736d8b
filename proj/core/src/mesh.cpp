#include "microfrac/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>

#include "microfrac/errors.hpp"

namespace microfrac {

namespace {

constexpr double kCoordTol = 1e-9;

struct Band {
  double lo;
  double hi;
};

// 1D node coordinates on [lo, hi] passing exactly through every break point.
// Segments whose midpoint lies inside a band use the fine size.
std::vector<double> graded_coordinates(double lo, double hi, std::vector<double> breaks,
                                       const std::vector<Band>& bands, double h,
                                       double h_fine) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  for (const Band& b : bands) {
    breaks.push_back(b.lo);
    breaks.push_back(b.hi);
  }
  std::erase_if(breaks, [&](double v) { return v < lo - kCoordTol || v > hi + kCoordTol; });
  for (double& v : breaks) v = std::clamp(v, lo, hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < kCoordTol; }),
               breaks.end());

  std::vector<double> coords{breaks.front()};
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s];
    const double b = breaks[s + 1];
    const double mid = 0.5 * (a + b);
    const bool fine = std::any_of(bands.begin(), bands.end(),
                                  [&](const Band& band) { return mid > band.lo && mid < band.hi; });
    const double size = fine ? h_fine : h;
    const auto n = std::max<long>(1, static_cast<long>(std::ceil((b - a) / size - 1e-9)));
    for (long k = 1; k < n; ++k) coords.push_back(a + (b - a) * static_cast<double>(k) / n);
    coords.push_back(b);
  }
  return coords;
}

// Horizontal slit at y = `y` for x < `tip`: cells above it get their own copy
// of the slit nodes.
struct Slit {
  double y;
  double tip;
};

struct GridSpec {
  std::vector<double> xs;
  std::vector<double> ys;
  std::function<bool(double, double)> keep_cell;
  std::optional<Slit> slit;
};

Mesh build_structured(const GridSpec& spec) {
  const auto nx = static_cast<Index>(spec.xs.size());
  const auto ny = static_cast<Index>(spec.ys.size());
  const auto grid_id = [nx](Index i, Index j) { return j * nx + i; };

  Index slit_row = -1;
  if (spec.slit) {
    for (Index j = 0; j < ny; ++j) {
      if (std::abs(spec.ys[j] - spec.slit->y) < kCoordTol) slit_row = j;
    }
    if (slit_row < 0) throw InternalError("slit line is not a grid line");
  }

  std::vector<char> kept(static_cast<std::size_t>((nx - 1) * (ny - 1)), 0);
  for (Index j = 0; j + 1 < ny; ++j) {
    for (Index i = 0; i + 1 < nx; ++i) {
      const double cx = 0.5 * (spec.xs[i] + spec.xs[i + 1]);
      const double cy = 0.5 * (spec.ys[j] + spec.ys[j + 1]);
      kept[j * (nx - 1) + i] = spec.keep_cell(cx, cy) ? 1 : 0;
    }
  }

  Mesh mesh;
  std::vector<Index> node_of(static_cast<std::size_t>(nx * ny), -1);
  std::vector<Index> upper_copy(static_cast<std::size_t>(nx), -1);

  const auto is_slit_node = [&](Index i, Index j) {
    return spec.slit && j == slit_row && spec.xs[i] < spec.slit->tip - kCoordTol;
  };
  const auto node = [&](Index i, Index j, bool from_above) -> Index {
    if (from_above && is_slit_node(i, j)) {
      Index& id = upper_copy[i];
      if (id < 0) {
        id = mesh.node_count();
        mesh.nodes.emplace_back(spec.xs[i], spec.ys[j]);
      }
      return id;
    }
    Index& id = node_of[grid_id(i, j)];
    if (id < 0) {
      id = mesh.node_count();
      mesh.nodes.emplace_back(spec.xs[i], spec.ys[j]);
    }
    return id;
  };

  for (Index j = 0; j + 1 < ny; ++j) {
    for (Index i = 0; i + 1 < nx; ++i) {
      if (!kept[j * (nx - 1) + i]) continue;
      // The bottom edge of this cell lies on the slit when j == slit_row.
      const bool above_slit = (j == slit_row);
      const Index p00 = node(i, j, above_slit);
      const Index p10 = node(i + 1, j, above_slit);
      const Index p11 = node(i + 1, j + 1, false);
      const Index p01 = node(i, j + 1, false);
      if ((i + j) % 2 == 0) {
        mesh.elements.push_back({p00, p10, p11});
        mesh.elements.push_back({p00, p11, p01});
      } else {
        mesh.elements.push_back({p00, p10, p01});
        mesh.elements.push_back({p10, p11, p01});
      }
    }
  }
  return mesh;
}

std::vector<Index> select_nodes(const Mesh& mesh, const std::function<bool(const Point2&)>& pred) {
  std::vector<Index> ids;
  for (Index n = 0; n < mesh.node_count(); ++n) {
    if (pred(mesh.nodes[n])) ids.push_back(n);
  }
  return ids;
}

bool near(double a, double b) { return std::abs(a - b) < kCoordTol; }

void check_h(double h, double limit, std::string_view what) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw MeshError("mesh size h must be positive, got " + std::to_string(h));
  }
  if (h > limit) {
    std::ostringstream msg;
    msg << "mesh size h = " << h << " exceeds the smallest feature (" << what << " = " << limit
        << ")";
    throw MeshError(msg.str());
  }
}

double fine_size(const MeshParams& p) {
  if (!(p.fine_factor > 0.0 && p.fine_factor <= 1.0)) {
    throw MeshError("fine_factor must lie in (0, 1]");
  }
  return p.fine_factor * p.h;
}

Mesh notched_square(const MeshParams& p, const std::vector<Band>& xbands,
                    const std::vector<Band>& ybands) {
  if (!(p.h > 0.0 && p.h < 0.5)) {
    throw MeshError("notched square requires 0 < h < 0.5, got " + std::to_string(p.h));
  }
  const double hf = fine_size(p);
  GridSpec spec;
  spec.xs = graded_coordinates(0.0, 1.0, {0.5}, xbands, p.h, hf);
  spec.ys = graded_coordinates(0.0, 1.0, {0.5}, ybands, p.h, hf);
  spec.keep_cell = [](double, double) { return true; };
  spec.slit = Slit{0.5, 0.5};
  Mesh mesh = build_structured(spec);
  mesh.node_sets["top"] = select_nodes(mesh, [](const Point2& x) { return near(x.y(), 1.0); });
  mesh.node_sets["bottom"] = select_nodes(mesh, [](const Point2& x) { return near(x.y(), 0.0); });
  mesh.node_sets["left"] = select_nodes(mesh, [](const Point2& x) { return near(x.x(), 0.0); });
  mesh.node_sets["right"] = select_nodes(mesh, [](const Point2& x) { return near(x.x(), 1.0); });
  mesh.thickness = 1.0;
  return mesh;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<Index>& Mesh::node_set(std::string_view name) const {
  const auto it = node_sets.find(std::string(name));
  if (it == node_sets.end()) throw MeshError("missing node set '" + std::string(name) + "'");
  return it->second;
}

bool Mesh::has_node_set(std::string_view name) const {
  return node_sets.find(std::string(name)) != node_sets.end();
}

void Mesh::validate() const {
  const Index n = node_count();
  for (Index e = 0; e < element_count(); ++e) {
    const auto& el = elements[e];
    for (Index v : el) {
      if (v < 0 || v >= n) {
        throw MeshError("element " + std::to_string(e) + " references node " + std::to_string(v) +
                        " outside [0, " + std::to_string(n) + ")");
      }
    }
    if (el[0] == el[1] || el[1] == el[2] || el[0] == el[2]) {
      throw MeshError("element " + std::to_string(e) + " repeats a node index");
    }
    const double a = signed_area(nodes[el[0]], nodes[el[1]], nodes[el[2]]);
    if (!(a > 0.0)) {
      throw MeshError("element " + std::to_string(e) + " is not counter-clockwise (area " +
                      std::to_string(a) + ")");
    }
  }
  for (const auto& [name, ids] : node_sets) {
    for (Index v : ids) {
      if (v < 0 || v >= n) {
        throw MeshError("node set '" + name + "' contains out-of-range index " + std::to_string(v));
      }
    }
  }
}

double Mesh::total_area() const {
  double area = 0.0;
  for (const auto& el : elements) area += signed_area(nodes[el[0]], nodes[el[1]], nodes[el[2]]);
  return area;
}

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

ElementGeometry element_geometry(const Mesh& mesh, Index element_index) {
  if (element_index < 0 || element_index >= mesh.element_count()) {
    throw MeshError("element index " + std::to_string(element_index) + " out of range");
  }
  const auto& el = mesh.elements[element_index];
  const Point2& p1 = mesh.nodes[el[0]];
  const Point2& p2 = mesh.nodes[el[1]];
  const Point2& p3 = mesh.nodes[el[2]];
  const double area = signed_area(p1, p2, p3);
  if (std::abs(area) < kDegenerateArea) {
    throw MeshError("element " + std::to_string(element_index) + " is degenerate (area " +
                    std::to_string(area) + " mm^2)");
  }

  // grad N_i = (y_j - y_k, x_k - x_j) / (2A) for the cyclic triple (i, j, k).
  ElementGeometry g;
  g.area = area;
  const std::array<const Point2*, 3> p{&p1, &p2, &p3};
  for (int i = 0; i < 3; ++i) {
    const Point2& pj = *p[(i + 1) % 3];
    const Point2& pk = *p[(i + 2) % 3];
    g.shape_grads[i] = Point2(pj.y() - pk.y(), pk.x() - pj.x()) / (2.0 * area);
  }
  g.centroid_shape_values = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  g.centroid = (p1 + p2 + p3) / 3.0;
  return g;
}

std::vector<ElementGeometry> element_geometries(const Mesh& mesh) {
  std::vector<ElementGeometry> out;
  out.reserve(mesh.elements.size());
  for (Index e = 0; e < mesh.element_count(); ++e) out.push_back(element_geometry(mesh, e));
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(CaseKind kind) noexcept {
  switch (kind) {
    case CaseKind::SENT: return "SENT";
    case CaseKind::SENS: return "SENS";
    case CaseKind::LPanel: return "LPanel";
    case CaseKind::TPB: return "TPB";
    case CaseKind::Custom: return "Custom";
  }
  return "?";
}

CaseKind case_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "sent") return CaseKind::SENT;
  if (lower == "sens") return CaseKind::SENS;
  if (lower == "lpanel" || lower == "l-panel" || lower == "l_panel") return CaseKind::LPanel;
  if (lower == "tpb") return CaseKind::TPB;
  if (lower == "custom") return CaseKind::Custom;
  throw ConfigError("unknown case '" + std::string(name) + "' (expected SENT, SENS, LPanel, TPB, Custom)");
}

Mesh generate_sent_mesh(double h) { return generate_sent_mesh(MeshParams{.h = h}); }

Mesh generate_sent_mesh(const MeshParams& p) {
  std::vector<Band> ybands;
  if (p.refine_width > 0.0) ybands.push_back({0.5 - p.refine_width, 0.5 + p.refine_width});
  return notched_square(p, {}, ybands);
}

Mesh generate_sens_mesh(double h) { return generate_sens_mesh(MeshParams{.h = h}); }

Mesh generate_sens_mesh(const MeshParams& p) {
  std::vector<Band> xbands;
  std::vector<Band> ybands;
  if (p.refine_width > 0.0) {
    xbands.push_back({0.5 - p.refine_width, 1.0});
    ybands.push_back({0.0, 0.5 + p.refine_width});
  }
  return notched_square(p, xbands, ybands);
}

Mesh generate_lpanel_mesh(double h) { return generate_lpanel_mesh(MeshParams{.h = h}); }

Mesh generate_lpanel_mesh(const MeshParams& p) {
  const double edge = p.lpanel_load_edge;
  if (!(edge > 0.0 && edge < 250.0)) throw MeshError("L-panel load edge must lie in (0, 250) mm");
  check_h(p.h, edge, "load edge length");
  const double hf = fine_size(p);
  std::vector<Band> ybands;
  if (p.refine_width > 0.0) ybands.push_back({250.0 - p.refine_width, 250.0 + 2.0 * p.refine_width});

  GridSpec spec;
  spec.xs = graded_coordinates(0.0, 500.0, {250.0, 500.0 - edge}, {}, p.h, hf);
  spec.ys = graded_coordinates(0.0, 500.0, {250.0}, ybands, p.h, hf);
  spec.keep_cell = [](double cx, double cy) { return !(cx > 250.0 && cy < 250.0); };
  Mesh mesh = build_structured(spec);
  mesh.node_sets["fixed_bottom"] =
      select_nodes(mesh, [](const Point2& x) { return near(x.y(), 0.0); });
  mesh.node_sets["load_edge"] = select_nodes(mesh, [edge](const Point2& x) {
    return near(x.y(), 250.0) && x.x() > 500.0 - edge - kCoordTol;
  });
  mesh.thickness = 100.0;
  return mesh;
}

Mesh generate_tpb_mesh(double h) { return generate_tpb_mesh(MeshParams{.h = h}); }

Mesh generate_tpb_mesh(const MeshParams& p) {
  constexpr double kLength = 450.0;
  constexpr double kHeight = 100.0;
  constexpr double kMid = 225.0;
  constexpr double kNotchHalfWidth = 2.5;
  constexpr double kNotchHeight = 50.0;
  check_h(p.h, 2.0 * kNotchHalfWidth, "notch width");
  const double inset = p.tpb_support_inset;
  if (!(inset >= 0.0 && inset < kMid - kNotchHalfWidth)) {
    throw MeshError("TPB support inset must lie in [0, 222.5) mm");
  }
  const double hf = fine_size(p);
  std::vector<Band> xbands;
  if (p.refine_width > 0.0) xbands.push_back({kMid - p.refine_width, kMid + p.refine_width});

  GridSpec spec;
  spec.xs = graded_coordinates(0.0, kLength,
                               {kMid - kNotchHalfWidth, kMid, kMid + kNotchHalfWidth, inset,
                                kLength - inset},
                               xbands, p.h, hf);
  spec.ys = graded_coordinates(0.0, kHeight, {kNotchHeight}, {}, p.h, hf);
  spec.keep_cell = [&](double cx, double cy) {
    return !(std::abs(cx - kMid) < kNotchHalfWidth && cy < kNotchHeight);
  };
  Mesh mesh = build_structured(spec);
  mesh.node_sets["support_left"] = select_nodes(
      mesh, [&](const Point2& x) { return near(x.y(), 0.0) && near(x.x(), inset); });
  mesh.node_sets["support_right"] = select_nodes(
      mesh, [&](const Point2& x) { return near(x.y(), 0.0) && near(x.x(), kLength - inset); });
  mesh.node_sets["load_point"] = select_nodes(
      mesh, [&](const Point2& x) { return near(x.y(), kHeight) && near(x.x(), kMid); });
  mesh.thickness = 100.0;
  return mesh;
}

Mesh generate_case_mesh(CaseKind kind, const MeshParams& params) {
  switch (kind) {
    case CaseKind::SENT: return generate_sent_mesh(params);
    case CaseKind::SENS: return generate_sens_mesh(params);
    case CaseKind::LPanel: return generate_lpanel_mesh(params);
    case CaseKind::TPB: return generate_tpb_mesh(params);
    case CaseKind::Custom: break;
  }
  throw MeshError("case 'Custom' has no built-in generator; supply a mesh file");
}

double analytic_area(CaseKind kind) {
  switch (kind) {
    case CaseKind::SENT:
    case CaseKind::SENS: return 1.0;
    case CaseKind::LPanel: return 500.0 * 500.0 - 250.0 * 250.0;
    case CaseKind::TPB: return 450.0 * 100.0 - 5.0 * 50.0;
    case CaseKind::Custom: break;
  }
  throw MeshError("no analytic area for case 'Custom'");
}

double default_thickness(CaseKind kind) {
  switch (kind) {
    case CaseKind::SENT:
    case CaseKind::SENS: return 1.0;
    case CaseKind::LPanel:
    case CaseKind::TPB: return 100.0;
    case CaseKind::Custom: return 1.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "microfrac-mesh v1\n";
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const auto& x : mesh.nodes) out << x.x() << ' ' << x.y() << '\n';
  out << "elements " << mesh.elements.size() << '\n';
  for (const auto& el : mesh.elements) out << el[0] << ' ' << el[1] << ' ' << el[2] << '\n';
  for (const auto& [name, ids] : mesh.node_sets) {
    out << "nodeset " << name << ' ' << ids.size() << '\n';
    for (Index v : ids) out << v << '\n';
  }
}

void write_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_mesh(mesh, out);
  if (!out) throw IoError("failed writing mesh to '" + path + "'");
}

Mesh read_mesh(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("microfrac-mesh v1", 0) != 0) {
    throw MeshError("missing 'microfrac-mesh v1' header");
  }
  Mesh mesh;
  std::string keyword;
  bool have_nodes = false;
  bool have_elements = false;
  while (in >> keyword) {
    if (keyword == "nodes") {
      std::size_t count = 0;
      if (!(in >> count)) throw MeshError("bad node count");
      mesh.nodes.resize(count);
      for (auto& x : mesh.nodes) {
        if (!(in >> x.x() >> x.y())) throw MeshError("truncated node list");
      }
      have_nodes = true;
    } else if (keyword == "elements") {
      std::size_t count = 0;
      if (!(in >> count)) throw MeshError("bad element count");
      mesh.elements.resize(count);
      for (auto& el : mesh.elements) {
        if (!(in >> el[0] >> el[1] >> el[2])) throw MeshError("truncated element list");
      }
      have_elements = true;
    } else if (keyword == "nodeset") {
      std::string name;
      std::size_t count = 0;
      if (!(in >> name >> count)) throw MeshError("bad nodeset header");
      auto& ids = mesh.node_sets[name];
      ids.resize(count);
      for (auto& v : ids) {
        if (!(in >> v)) throw MeshError("truncated node set '" + name + "'");
      }
    } else {
      throw MeshError("unexpected keyword '" + keyword + "' in mesh file");
    }
  }
  if (!have_nodes || !have_elements) throw MeshError("mesh file lacks nodes or elements section");
  mesh.validate();
  return mesh;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

}  // namespace microfrac
