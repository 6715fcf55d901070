#pragma once

// Closed-form geometry of the symmetrized behavior sets in the (X, Y) slice.
//
// The two-outcome set is the convex hull of the trivial point (0,0), the two
// vertices on X + Y = 1 reached by {K, I-K, 0}, and the ellipse traced by the
// projective strategies {0, K, I-K} and {K, 0, I-K}. The three-outcome set is
// the hull of (0,0) and the curve generated by the symmetric extremal family.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "semidi/qmat.hpp"

namespace semidi {

enum class PointSource { kEllipse, kVertexSegment, kP3Curve, kTrivial };
std::string to_string(PointSource s);
PointSource point_source_from_string(const std::string& s);

struct BoundaryPoint {
  double x = 0.0;
  double y = 0.0;
  PointSource source = PointSource::kTrivial;
};

/// Closed convex region stored as a counter-clockwise hull polyline. A region
/// whose hull collapses onto a line is kept as a segment and tested in 1-D.
class ConvexRegion2D {
 public:
  static constexpr double kDefaultTolerance = 1e-7;

  ConvexRegion2D() = default;
  /// Builds the convex hull of the given points.
  static ConvexRegion2D hull_of(std::vector<BoundaryPoint> points, double tolerance = kDefaultTolerance);

  [[nodiscard]] const std::vector<BoundaryPoint>& vertices() const { return vertices_; }
  [[nodiscard]] bool degenerate() const { return vertices_.size() < 3; }
  [[nodiscard]] double tolerance() const { return tolerance_; }

  /// Signed distance to the boundary: positive inside, negative outside. For a
  /// degenerate region this is minus the distance to the segment.
  [[nodiscard]] double signed_distance(double x, double y) const;
  [[nodiscard]] bool contains(double x, double y) const { return signed_distance(x, y) >= -tolerance_; }
  [[nodiscard]] bool contains(const SliceCoords& c) const { return contains(c.x, c.y); }
  /// All consecutive cross products share one sign.
  [[nodiscard]] bool is_convex() const;
  [[nodiscard]] double area() const;

  /// Largest t with origin + t*dir inside the region (origin must be inside).
  [[nodiscard]] double ray_exit(double ox, double oy, double dx, double dy) const;

  void write_csv(std::ostream& os) const;
  static ConvexRegion2D read_csv(std::istream& is, double tolerance = kDefaultTolerance);

 private:
  std::vector<BoundaryPoint> vertices_;
  double tolerance_ = kDefaultTolerance;
};

/// Samples per analytic arc used for hull construction.
inline constexpr int kArcSamples = 4096;

/// Point reached by the projective strategy {0, K, I-K}, K = (I + u.sigma)/2,
/// u = (sin alpha, 0, cos alpha). Throws DomainError for delta in {0, 1}.
BoundaryPoint p2_ellipse_point(double delta, double alpha);
/// Residual of the ellipse equation at (x, y); zero on the curve.
double p2_ellipse_residual(double delta, double x, double y);
std::pair<BoundaryPoint, BoundaryPoint> p2_vertices(double delta);
ConvexRegion2D p2_region(double delta);

BoundaryPoint p3_curve_point(double delta, double phi);
ConvexRegion2D p3_region(double delta);

struct SliceCertificate {
  SliceCoords coords;
  double p2_distance = 0.0;  ///< signed distance to the two-outcome region
  bool genuine3 = false;
  bool outside_p3 = false;   ///< the behavior violates the overlap assumption
};

SliceCertificate certify_genuine3_slice(const Behavior& b, double delta);

}  // namespace semidi
