#include "semidi/qmat.hpp"

#include <algorithm>
#include <sstream>

namespace semidi {

namespace {

// Written once at startup (CLI flag parsing); read-only afterwards.
Tolerances g_tolerances;

const Mat2c& pauli(int k) {
  static const std::array<Mat2c, 3> sigma = [] {
    std::array<Mat2c, 3> s;
    s[0] << 0, 1, 1, 0;
    s[1] << 0, Complex(0, -1), Complex(0, 1), 0;
    s[2] << 1, 0, 0, -1;
    return s;
  }();
  return sigma[k];
}

}  // namespace

const Tolerances& tolerances() { return g_tolerances; }
void set_tolerances(const Tolerances& t) { g_tolerances = t; }

HermitianMat2 HermitianMat2::projector(const Vec2c& v) {
  return from_matrix(v * v.adjoint());
}

HermitianMat2 HermitianMat2::from_matrix(const Mat2c& m) {
  // Tr[m sigma_k] / 2 picks the Pauli coefficient; the real part keeps only the
  // Hermitian component.
  HermitianMat2 h;
  h.a0 = 0.5 * (m(0, 0) + m(1, 1)).real();
  for (int k = 0; k < 3; ++k) h.a[k] = 0.5 * (m * pauli(k)).trace().real();
  return h;
}

Mat2c HermitianMat2::matrix() const {
  Mat2c m;
  m << Complex(a0 + a[2], 0), Complex(a[0], -a[1]), Complex(a[0], a[1]), Complex(a0 - a[2], 0);
  return m;
}

HermitianMat2& HermitianMat2::operator+=(const HermitianMat2& o) {
  a0 += o.a0;
  for (int k = 0; k < 3; ++k) a[k] += o.a[k];
  return *this;
}

HermitianMat2& HermitianMat2::operator-=(const HermitianMat2& o) {
  a0 -= o.a0;
  for (int k = 0; k < 3; ++k) a[k] -= o.a[k];
  return *this;
}

HermitianMat2& HermitianMat2::operator*=(double s) {
  a0 *= s;
  for (auto& v : a) v *= s;
  return *this;
}

double trace_product(const HermitianMat2& lhs, const HermitianMat2& rhs) {
  return 2.0 * (lhs.a0 * rhs.a0 + lhs.a[0] * rhs.a[0] + lhs.a[1] * rhs.a[1] + lhs.a[2] * rhs.a[2]);
}

double frobenius_distance(const HermitianMat2& lhs, const HermitianMat2& rhs) {
  const HermitianMat2 d = lhs - rhs;
  return std::sqrt(trace_product(d, d));
}

Vec2c PreparationPair::state(int x) const {
  const double sign = x == 0 ? 1.0 : -1.0;
  return Vec2c(std::cos(theta), sign * std::sin(theta));
}

HermitianMat2 PreparationPair::density(int x) const {
  const auto n = bloch(x);
  return {0.5, {0.5 * n[0], 0.5 * n[1], 0.5 * n[2]}};
}

std::array<double, 3> PreparationPair::bloch(int x) const {
  const double sign = x == 0 ? 1.0 : -1.0;
  return {sign * std::sin(2.0 * theta), 0.0, std::cos(2.0 * theta)};
}

PreparationPair make_preparation(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw DomainError("overlap must lie in [0, 1], got " + std::to_string(delta));
  }
  return {0.5 * std::acos(delta), delta};
}

HermitianMat2 Povm::sum() const {
  return elements[0] + elements[1] + elements[2];
}

void Povm::validate() const {
  const auto& tol = tolerances();
  for (std::size_t b = 0; b < elements.size(); ++b) {
    if (!elements[b].is_psd(tol.psd)) {
      throw ValidationError("POVM element " + std::to_string(b) + " has eigenvalue " +
                            std::to_string(elements[b].min_eigenvalue()));
    }
  }
  const double err = frobenius_distance(sum(), HermitianMat2::identity());
  if (err > tol.normalization) {
    throw ValidationError("POVM elements do not sum to identity (error " + std::to_string(err) + ")");
  }
}

bool Povm::is_valid() const {
  try {
    validate();
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

Behavior Behavior::uniform() {
  constexpr double t = 1.0 / 3.0;
  return from_rows({t, t, t}, {t, t, t});
}

Behavior Behavior::from_rows(const std::array<double, 3>& row0, const std::array<double, 3>& row1) {
  Behavior b;
  b.p[0] = row0;
  b.p[1] = row1;
  return b;
}

Behavior Behavior::usd(double delta) {
  return from_rows({1.0 - delta, 0.0, delta}, {0.0, 1.0 - delta, delta});
}

Behavior Behavior::slice_point(double x, double y) {
  const double rest = 1.0 - x - y;
  return from_rows({x, y, rest}, {y, x, rest});
}

void Behavior::validate(double row_slack) const {
  for (int x = 0; x < 2; ++x) {
    double sum = 0.0;
    for (int b = 0; b < 3; ++b) {
      const double v = p[x][b];
      if (!std::isfinite(v) || v < -row_slack || v > 1.0 + row_slack) {
        throw ValidationError("p(" + std::to_string(b) + "|" + std::to_string(x) +
                              ") = " + std::to_string(v) + " is not a probability");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > row_slack) {
      throw ValidationError("row " + std::to_string(x) + " sums to " + std::to_string(sum));
    }
  }
}

std::array<double, 6> Behavior::flat() const {
  return {p[0][0], p[0][1], p[0][2], p[1][0], p[1][1], p[1][2]};
}

double Behavior::distance(const Behavior& other) const {
  double m = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int b = 0; b < 3; ++b) m = std::max(m, std::abs(p[x][b] - other.p[x][b]));
  return m;
}

Povm symmetric_povm(double phi) {
  if (!(phi >= -kPi / 2 - 1e-12 && phi <= kPi / 2 + 1e-12)) {
    throw DomainError("symmetric POVM angle must lie in [-pi/2, pi/2]");
  }
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double lambda = 1.0 / (2.0 * (1.0 + c));
  Povm m;
  m.elements[0] = {lambda, {-lambda * s, 0.0, -lambda * c}};
  m.elements[1] = {lambda, {lambda * s, 0.0, -lambda * c}};
  const double lambda2 = 1.0 - 2.0 * lambda;  // = cos(phi)/(1+cos(phi))
  m.elements[2] = {lambda2, {0.0, 0.0, lambda2}};
  return m;
}

Povm extremal_povm(std::span<const double, 3> angles) {
  // Solve sum lambda_b = 1, sum lambda_b u_b = 0 for the weights.
  Eigen::Matrix3d a;
  for (int b = 0; b < 3; ++b) {
    a(0, b) = 1.0;
    a(1, b) = std::sin(angles[b]);
    a(2, b) = std::cos(angles[b]);
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
  if (!lu.isInvertible()) throw DomainError("degenerate Bloch-vector triple");
  const Eigen::Vector3d lambda = lu.solve(Eigen::Vector3d(1.0, 0.0, 0.0));
  if (lambda.minCoeff() < -1e-12) throw DomainError("origin outside the Bloch-vector triangle");
  Povm m;
  for (int b = 0; b < 3; ++b) {
    const double l = std::max(lambda[b], 0.0);
    m.elements[b] = {l, {l * std::sin(angles[b]), 0.0, l * std::cos(angles[b])}};
  }
  return m;
}

Behavior simulate_behavior(const PreparationPair& prep, const Povm& povm) {
  povm.validate();
  Behavior out;
  for (int x = 0; x < 2; ++x) {
    const HermitianMat2 rho = prep.density(x);
    for (int b = 0; b < 3; ++b) out(x, b) = trace_product(rho, povm.elements[b]);
  }
  return out;
}

Behavior mix_with_noise(const Behavior& b, double xi, const Behavior& noise) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("noise weight must lie in [0, 1]");
  Behavior out;
  for (int x = 0; x < 2; ++x)
    for (int k = 0; k < 3; ++k) out(x, k) = (1.0 - xi) * b(x, k) + xi * noise(x, k);
  return out;
}

Behavior relabel_pi(const Behavior& b) {
  // (a,b,c; d,e,f) -> (e,d,f; b,a,c)
  return Behavior::from_rows({b(1, 1), b(1, 0), b(1, 2)}, {b(0, 1), b(0, 0), b(0, 2)});
}

Behavior symmetrize_t(const Behavior& b) {
  const Behavior r = relabel_pi(b);
  Behavior out;
  for (int x = 0; x < 2; ++x)
    for (int k = 0; k < 3; ++k) out(x, k) = 0.5 * (b(x, k) + r(x, k));
  return out;
}

SliceCoords slice_coords(const Behavior& b) {
  return {0.5 * (b(0, 0) + b(1, 1)), 0.5 * (b(1, 0) + b(0, 1))};
}

std::string to_string(const Behavior& b) {
  std::ostringstream os;
  os.precision(6);
  os << "[[" << b(0, 0) << ", " << b(0, 1) << ", " << b(0, 2) << "], [" << b(1, 0) << ", "
     << b(1, 1) << ", " << b(1, 2) << "]]";
  return os.str();
}

}  // namespace semidi
