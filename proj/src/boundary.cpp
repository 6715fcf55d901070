#include "semidi/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace semidi {

namespace {

double cross(const BoundaryPoint& o, const BoundaryPoint& a, const BoundaryPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double segment_distance(double px, double py, const BoundaryPoint& a, const BoundaryPoint& b) {
  const double ex = b.x - a.x, ey = b.y - a.y;
  const double len2 = ex * ex + ey * ey;
  double t = len2 > 0.0 ? ((px - a.x) * ex + (py - a.y) * ey) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * ex), py - (a.y + t * ey));
}

// Ellipse parameterization without the degenerate-overlap guard.
BoundaryPoint ellipse_point(double theta, double alpha) {
  return {0.25 * (1.0 + std::cos(alpha + 2.0 * theta)), 0.25 * (1.0 + std::cos(alpha - 2.0 * theta)),
          PointSource::kEllipse};
}

bool is_segment_overlap(double delta) { return delta >= 1.0; }

ConvexRegion2D trivial_segment() {
  return ConvexRegion2D::hull_of({{0.0, 0.0, PointSource::kTrivial}, {0.5, 0.5, PointSource::kTrivial}});
}

void check_overlap(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("overlap must lie in [0, 1]");
}

}  // namespace

std::string to_string(PointSource s) {
  switch (s) {
    case PointSource::kEllipse: return "ellipse";
    case PointSource::kVertexSegment: return "vertex-segment";
    case PointSource::kP3Curve: return "p3-curve";
    case PointSource::kTrivial: return "trivial";
  }
  return "trivial";
}

PointSource point_source_from_string(const std::string& s) {
  if (s == "ellipse") return PointSource::kEllipse;
  if (s == "vertex-segment") return PointSource::kVertexSegment;
  if (s == "p3-curve") return PointSource::kP3Curve;
  if (s == "trivial") return PointSource::kTrivial;
  throw ValidationError("unknown boundary point source '" + s + "'");
}

ConvexRegion2D ConvexRegion2D::hull_of(std::vector<BoundaryPoint> pts, double tolerance) {
  ConvexRegion2D region;
  region.tolerance_ = tolerance;
  std::sort(pts.begin(), pts.end(), [](const BoundaryPoint& a, const BoundaryPoint& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const BoundaryPoint& a, const BoundaryPoint& b) {
                          return std::abs(a.x - b.x) < 1e-15 && std::abs(a.y - b.y) < 1e-15;
                        }),
            pts.end());
  if (pts.size() < 3) {
    region.vertices_ = pts;
    return region;
  }
  // Andrew's monotone chain; collinear points are dropped.
  std::vector<BoundaryPoint> hull(2 * pts.size());
  std::size_t k = 0;
  constexpr double kCollinear = 1e-18;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= kCollinear) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= kCollinear) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    // Collinear input: keep the two extreme points.
    region.vertices_ = {pts.front(), pts.back()};
  } else {
    region.vertices_ = std::move(hull);
  }
  return region;
}

double ConvexRegion2D::signed_distance(double x, double y) const {
  if (vertices_.empty()) return -std::numeric_limits<double>::infinity();
  if (vertices_.size() == 1) return -std::hypot(x - vertices_[0].x, y - vertices_[0].y);
  if (vertices_.size() == 2) return -segment_distance(x, y, vertices_[0], vertices_[1]);
  bool inside = true;
  double dist = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % n];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double side = ((b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x)) / len;
    if (side < 0.0) inside = false;
    dist = std::min(dist, segment_distance(x, y, a, b));
  }
  return inside ? dist : -dist;
}

bool ConvexRegion2D::is_convex() const {
  const std::size_t n = vertices_.size();
  if (n < 3) return true;
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(vertices_[i], vertices_[(i + 1) % n], vertices_[(i + 2) % n]) < -1e-15) return false;
  }
  return true;
}

double ConvexRegion2D::area() const {
  double a = 0.0;
  const std::size_t n = vertices_.size();
  if (n < 3) return 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = vertices_[i];
    const auto& q = vertices_[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double ConvexRegion2D::ray_exit(double ox, double oy, double dx, double dy) const {
  if (vertices_.size() < 3) {
    // Along a segment the ray stays inside only when parallel to it.
    if (vertices_.size() < 2) return 0.0;
    const auto& a = vertices_[0];
    const auto& b = vertices_[1];
    const double ex = b.x - a.x, ey = b.y - a.y;
    if (std::abs(ex * dy - ey * dx) > 1e-14) return 0.0;
    const double len2 = ex * ex + ey * ey;
    const double t_dir = (ex * dx + ey * dy) / len2;
    const double t0 = ((ox - a.x) * ex + (oy - a.y) * ey) / len2;
    if (t_dir > 0.0) return (1.0 - t0) / t_dir;
    if (t_dir < 0.0) return -t0 / t_dir;
    return std::numeric_limits<double>::infinity();
  }
  double t_exit = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[(i + 1) % n];
    // Inward normal of a CCW edge is (-(by-ay), bx-ax).
    const double nx = -(b.y - a.y), ny = b.x - a.x;
    const double slack = nx * (ox - a.x) + ny * (oy - a.y);
    const double rate = nx * dx + ny * dy;
    if (rate < 0.0) t_exit = std::min(t_exit, slack / -rate);
  }
  return t_exit;
}

void ConvexRegion2D::write_csv(std::ostream& os) const {
  os << "X,Y,source\n";
  os.precision(17);
  for (const auto& v : vertices_) os << v.x << ',' << v.y << ',' << to_string(v.source) << '\n';
}

ConvexRegion2D ConvexRegion2D::read_csv(std::istream& is, double tolerance) {
  std::string line;
  if (!std::getline(is, line) || line != "X,Y,source") throw ValidationError("region CSV header must be X,Y,source");
  ConvexRegion2D region;
  region.tolerance_ = tolerance;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string fx, fy, src;
    if (!std::getline(ls, fx, ',') || !std::getline(ls, fy, ',') || !std::getline(ls, src)) {
      throw ValidationError("region CSV line " + std::to_string(lineno) + " needs three fields");
    }
    try {
      region.vertices_.push_back({std::stod(fx), std::stod(fy), point_source_from_string(src)});
    } catch (const std::logic_error&) {
      throw ValidationError("region CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return region;
}

BoundaryPoint p2_ellipse_point(double delta, double alpha) {
  check_overlap(delta);
  if (delta <= 0.0 || delta >= 1.0) {
    throw DomainError("the ellipse degenerates at overlap 0 or 1; use p2_region instead");
  }
  return ellipse_point(0.5 * std::acos(delta), alpha);
}

double p2_ellipse_residual(double delta, double x, double y) {
  const double u = x + y - 0.5;
  const double w = x - y;
  return 4.0 * u * u / (delta * delta) + 4.0 * w * w / (1.0 - delta * delta) - 1.0;
}

std::pair<BoundaryPoint, BoundaryPoint> p2_vertices(double delta) {
  check_overlap(delta);
  const double r = std::sqrt(1.0 - delta * delta);
  return {{0.5 * (1.0 - r), 0.5 * (1.0 + r), PointSource::kVertexSegment},
          {0.5 * (1.0 + r), 0.5 * (1.0 - r), PointSource::kVertexSegment}};
}

ConvexRegion2D p2_region(double delta) {
  check_overlap(delta);
  if (is_segment_overlap(delta)) return trivial_segment();
  const double theta = 0.5 * std::acos(delta);
  std::vector<BoundaryPoint> pts;
  pts.reserve(kArcSamples + 3);
  pts.push_back({0.0, 0.0, PointSource::kTrivial});
  const auto [v1, v2] = p2_vertices(delta);
  pts.push_back(v1);
  pts.push_back(v2);
  for (int i = 0; i < kArcSamples; ++i) {
    pts.push_back(ellipse_point(theta, 2.0 * kPi * i / kArcSamples));
  }
  return ConvexRegion2D::hull_of(std::move(pts));
}

BoundaryPoint p3_curve_point(double delta, double phi) {
  check_overlap(delta);
  if (!(phi >= -kPi / 2 - 1e-12 && phi <= kPi / 2 + 1e-12)) throw DomainError("curve angle must lie in [-pi/2, pi/2]");
  const double two_theta = std::acos(delta);
  const double denom = 2.0 * (1.0 + std::cos(phi));
  return {(1.0 - std::cos(phi - two_theta)) / denom, (1.0 - std::cos(phi + two_theta)) / denom,
          PointSource::kP3Curve};
}

ConvexRegion2D p3_region(double delta) {
  check_overlap(delta);
  if (is_segment_overlap(delta)) return trivial_segment();
  std::vector<BoundaryPoint> pts;
  pts.reserve(kArcSamples + 2);
  pts.push_back({0.0, 0.0, PointSource::kTrivial});
  for (int i = 0; i <= kArcSamples; ++i) {
    pts.push_back(p3_curve_point(delta, -kPi / 2 + kPi * i / kArcSamples));
  }
  return ConvexRegion2D::hull_of(std::move(pts));
}

SliceCertificate certify_genuine3_slice(const Behavior& b, double delta) {
  b.validate(1e-9);
  const ConvexRegion2D p2 = p2_region(delta);
  SliceCertificate cert;
  cert.coords = slice_coords(symmetrize_t(b));
  cert.p2_distance = p2.signed_distance(cert.coords.x, cert.coords.y);
  cert.genuine3 = cert.p2_distance < -p2.tolerance();
  if (cert.genuine3) cert.outside_p3 = !p3_region(delta).contains(cert.coords);
  return cert;
}

}  // namespace semidi
