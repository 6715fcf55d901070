#pragma once

// Qubit linear algebra and the two-preparation / three-outcome scenario model.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace semidi {

using Complex = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;

inline constexpr double kPi = 3.14159265358979323846;

/// Global numeric slack used by validation routines. Mutable only through
/// set_tolerances(); every other piece of state in the library is immutable.
struct Tolerances {
  double psd = 1e-10;            ///< allowed negative eigenvalue of a POVM element
  double normalization = 1e-10;  ///< ||sum_b M_b - I|| slack
  double row_sum = 1e-12;        ///< behavior row-sum slack
};

const Tolerances& tolerances();
void set_tolerances(const Tolerances& t);

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hermitian 2x2 matrix in Pauli form a0*I + a.sigma.
struct HermitianMat2 {
  double a0 = 0.0;
  std::array<double, 3> a{0.0, 0.0, 0.0};  // (x, y, z)

  static HermitianMat2 identity() { return {1.0, {0.0, 0.0, 0.0}}; }
  static HermitianMat2 zero() { return {}; }
  /// |v><v| for a (not necessarily normalized) complex 2-vector.
  static HermitianMat2 projector(const Vec2c& v);
  /// Hermitian part of an arbitrary 2x2 complex matrix.
  static HermitianMat2 from_matrix(const Mat2c& m);

  [[nodiscard]] double bloch_norm() const { return std::hypot(a[0], a[1], a[2]); }
  [[nodiscard]] double min_eigenvalue() const { return a0 - bloch_norm(); }
  [[nodiscard]] double max_eigenvalue() const { return a0 + bloch_norm(); }
  [[nodiscard]] double trace() const { return 2.0 * a0; }
  [[nodiscard]] bool is_psd(double slack) const { return min_eigenvalue() >= -slack; }
  [[nodiscard]] Mat2c matrix() const;

  HermitianMat2& operator+=(const HermitianMat2& o);
  HermitianMat2& operator-=(const HermitianMat2& o);
  HermitianMat2& operator*=(double s);
  friend HermitianMat2 operator+(HermitianMat2 l, const HermitianMat2& r) { return l += r; }
  friend HermitianMat2 operator-(HermitianMat2 l, const HermitianMat2& r) { return l -= r; }
  friend HermitianMat2 operator*(double s, HermitianMat2 m) { return m *= s; }
  friend bool operator==(const HermitianMat2&, const HermitianMat2&) = default;
};

/// Tr[A B] for Hermitian A, B (always real).
double trace_product(const HermitianMat2& lhs, const HermitianMat2& rhs);
/// Frobenius norm of the difference.
double frobenius_distance(const HermitianMat2& lhs, const HermitianMat2& rhs);

/// Two real pure states cos(t)|0> +- sin(t)|1> with overlap delta = cos(2t).
struct PreparationPair {
  double theta = 0.0;
  double delta = 1.0;

  [[nodiscard]] Vec2c state(int x) const;
  [[nodiscard]] HermitianMat2 density(int x) const;
  /// Bloch vector ((-1)^x sin 2t, 0, cos 2t).
  [[nodiscard]] std::array<double, 3> bloch(int x) const;
  [[nodiscard]] double cos_theta() const { return std::cos(theta); }
  [[nodiscard]] double sin_theta() const { return std::sin(theta); }
};

PreparationPair make_preparation(double delta);

/// Three-outcome POVM. Two-outcome measurements carry an explicit zero element.
struct Povm {
  std::array<HermitianMat2, 3> elements;

  [[nodiscard]] HermitianMat2 sum() const;
  /// Throws ValidationError when an element is not PSD or the sum is not I.
  void validate() const;
  [[nodiscard]] bool is_valid() const;
};

/// p(b|x): row x in {0,1}, column b in {0,1,2}.
struct Behavior {
  std::array<std::array<double, 3>, 2> p{};

  [[nodiscard]] double operator()(int x, int b) const { return p[x][b]; }
  double& operator()(int x, int b) { return p[x][b]; }

  static Behavior uniform();
  static Behavior from_rows(const std::array<double, 3>& row0, const std::array<double, 3>& row1);
  /// The optimal unambiguous-discrimination table [[1-d,0,d],[0,1-d,d]].
  static Behavior usd(double delta);
  /// Point (X, Y) of the relabeling-symmetric slice.
  static Behavior slice_point(double x, double y);

  /// Throws ValidationError when entries leave [0,1] or rows do not sum to 1.
  void validate(double row_slack) const;
  void validate() const { validate(tolerances().row_sum); }

  /// Flattened as (p(0|0), p(1|0), p(2|0), p(0|1), p(1|1), p(2|1)).
  [[nodiscard]] std::array<double, 6> flat() const;
  [[nodiscard]] double distance(const Behavior& other) const;
  friend bool operator==(const Behavior&, const Behavior&) = default;
};

struct SliceCoords {
  double x = 0.0;
  double y = 0.0;
};

/// Symmetric extremal family: Bloch vectors (-+sin phi, 0, -cos phi) with weight
/// 1/(2(1+cos phi)) and the remainder along +z.
Povm symmetric_povm(double phi);

/// Extremal POVM with three unit Bloch vectors in the x-z plane at the given
/// polar angles (measured from +z towards +x). Throws DomainError when the
/// origin is not a convex combination of the three vectors.
Povm extremal_povm(std::span<const double, 3> angles);

Behavior simulate_behavior(const PreparationPair& prep, const Povm& povm);
Behavior mix_with_noise(const Behavior& b, double xi, const Behavior& noise);
Behavior relabel_pi(const Behavior& b);
Behavior symmetrize_t(const Behavior& b);
SliceCoords slice_coords(const Behavior& b);

std::string to_string(const Behavior& b);

}  // namespace semidi
