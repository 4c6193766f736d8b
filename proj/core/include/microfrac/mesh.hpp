#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace microfrac {

using Index = std::int64_t;
using Point2 = Eigen::Vector2d;

/// Linear triangle (T3) mesh with named node sets.
///
/// Elements are stored counter-clockwise. Notches are explicit slits: nodes
/// on a slit face are duplicated so the two faces are not connected.
struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<Index, 3>> elements;
  std::map<std::string, std::vector<Index>> node_sets;
  double thickness = 1.0;  // [mm]

  Index node_count() const { return static_cast<Index>(nodes.size()); }
  Index element_count() const { return static_cast<Index>(elements.size()); }

  /// Throws MeshError when the set does not exist.
  const std::vector<Index>& node_set(std::string_view name) const;
  bool has_node_set(std::string_view name) const;

  /// Checks index ranges, distinct vertices, positive orientation and node
  /// set membership. Throws MeshError naming the first offending entity.
  void validate() const;

  double total_area() const;
};

/// Geometry of one T3 element sampled at its single centroid quadrature point.
struct ElementGeometry {
  double area = 0.0;                        // [mm^2]
  std::array<Point2, 3> shape_grads{};      // [1/mm], constant over the element
  std::array<double, 3> centroid_shape_values{};
  Point2 centroid = Point2::Zero();
};

/// Elements with |area| below this are rejected as degenerate [mm^2].
inline constexpr double kDegenerateArea = 1e-14;

double signed_area(const Point2& a, const Point2& b, const Point2& c);

ElementGeometry element_geometry(const Mesh& mesh, Index element_index);

/// Precomputes geometry for every element.
std::vector<ElementGeometry> element_geometries(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Benchmark geometry generators
// ---------------------------------------------------------------------------

enum class CaseKind { SENT, SENS, LPanel, TPB, Custom };

std::string_view to_string(CaseKind kind) noexcept;
CaseKind case_kind_from_string(std::string_view name);

/// Structured quad-split generation parameters.
///
/// `refine_width` > 0 switches on a band around the expected crack path in
/// which the element size is `fine_factor * h`. The band location is fixed per
/// benchmark (see the generators).
struct MeshParams {
  double h = 0.0;
  double refine_width = 0.0;
  double fine_factor = 0.25;
  /// L-panel: length of the loaded edge at the tip of the upper arm [mm].
  double lpanel_load_edge = 30.0;
  /// TPB: distance of the supports from the beam ends [mm].
  double tpb_support_inset = 0.0;

  bool operator==(const MeshParams&) const = default;
};

/// Unit square with a slit from (0, 0.5) to (0.5, 0.5).
/// Node sets: top, bottom, left, right.
Mesh generate_sent_mesh(double h);
Mesh generate_sent_mesh(const MeshParams& params);

/// Same geometry as SENT; the band follows the shear crack towards the
/// lower-right corner.
Mesh generate_sens_mesh(double h);
Mesh generate_sens_mesh(const MeshParams& params);

/// L-shape [0,500]^2 minus [250,500]x[0,250]. Node sets: fixed_bottom
/// (y = 0), load_edge (y = 250, last `lpanel_load_edge` mm of the arm).
Mesh generate_lpanel_mesh(double h);
Mesh generate_lpanel_mesh(const MeshParams& params);

/// 450 x 100 beam with a 5 x 50 mid-span notch cut from the bottom.
/// Node sets: support_left, support_right, load_point.
Mesh generate_tpb_mesh(double h);
Mesh generate_tpb_mesh(const MeshParams& params);

Mesh generate_case_mesh(CaseKind kind, const MeshParams& params);

/// Exact domain area of a benchmark geometry [mm^2].
double analytic_area(CaseKind kind);

/// Default out-of-plane thickness for a benchmark [mm].
double default_thickness(CaseKind kind);

// ---------------------------------------------------------------------------
// Text format `microfrac-mesh v1`
// ---------------------------------------------------------------------------

void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh_file(const Mesh& mesh, const std::string& path);
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

}  // namespace microfrac
