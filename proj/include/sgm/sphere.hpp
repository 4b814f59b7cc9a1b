#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sgm/errors.hpp"
#include "sgm/rng.hpp"

namespace sgm {

using Vec3 = Eigen::Vector3d;

inline constexpr double kUnitNormTol = 1e-12;

/// Point on the unit sphere. Construction enforces |x^2+y^2+z^2 - 1| <= 1e-12.
class SphericalPoint {
 public:
  SphericalPoint(double x, double y, double z) : v_(x, y, z) { check_unit(v_); }
  explicit SphericalPoint(const Vec3& v) : v_(v) { check_unit(v_); }

  /// Project an arbitrary non-zero vector onto the sphere.
  static SphericalPoint normalized(const Vec3& v) {
    const double n = v.norm();
    if (n < 1e-14) throw GeometryError("cannot normalize a near-zero vector");
    return SphericalPoint(Vec3(v / n), Unchecked{});
  }

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

  bool operator==(const SphericalPoint& o) const { return v_ == o.v_; }
  bool operator!=(const SphericalPoint& o) const { return !(*this == o); }

 private:
  struct Unchecked {};
  SphericalPoint(const Vec3& v, Unchecked) : v_(v) {}
  static void check_unit(const Vec3& v) {
    if (std::abs(v.squaredNorm() - 1.0) > kUnitNormTol)
      throw DomainError("point is not on the unit sphere");
  }
  Vec3 v_;
};

/// Arc length between two unit vectors, in [0, pi].
inline double geodesic_distance(const SphericalPoint& a, const SphericalPoint& b) {
  return std::atan2(a.vec().cross(b.vec()).norm(), a.vec().dot(b.vec()));
}

/// Uniform points on the sphere via normalized 3D Gaussian draws.
inline std::vector<SphericalPoint> sample_uniform_sphere(std::size_t count, RngStream& rng) {
  if (count == 0) throw DomainError("sample_uniform_sphere: count must be >= 1");
  std::vector<SphericalPoint> out;
  out.reserve(count);
  while (out.size() < count) {
    const Vec3 g(rng.normal(), rng.normal(), rng.normal());
    if (g.norm() < 1e-8) continue;  // essentially never
    out.push_back(SphericalPoint::normalized(g));
  }
  return out;
}

/// One draw from the von Mises-Fisher distribution vMF(mu, kappa) on S^2.
/// Uses the tangent-normal decomposition; on S^2 the cosine component has a
/// closed-form inverse CDF, so no rejection loop is needed.
inline SphericalPoint sample_vmf(const SphericalPoint& mu, double kappa, RngStream& rng) {
  if (!(kappa > 0.0)) throw DomainError("sample_vmf: kappa must be positive");
  const double u = rng.uniform_pos();
  // F^-1(u) for density prop. to exp(kappa*w) on [-1,1]; exp(-2k) underflows
  // to 0 for large kappa and the expression stays exact in that limit.
  double w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
  w = std::clamp(w, -1.0, 1.0);

  const Vec3& m = mu.vec();
  const Vec3 axis = std::abs(m.x()) < 0.5 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = m.cross(axis).normalized();
  const Vec3 e2 = m.cross(e1);

  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
  return SphericalPoint::normalized(w * m + r * (std::cos(theta) * e1 + std::sin(theta) * e2));
}

/// Normalized Euclidean mean. Antipodal-degenerate sets (mean norm < 1e-9)
/// are an error rather than an arbitrary tie-break.
inline SphericalPoint spherical_centroid(const std::vector<SphericalPoint>& points) {
  if (points.empty()) throw DomainError("spherical_centroid: empty point set");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p.vec();
  const Vec3 mean = sum / static_cast<double>(points.size());
  if (mean.norm() < 1e-9)
    throw GeometryError("spherical_centroid: degenerate (near-zero) mean");
  return SphericalPoint::normalized(mean);
}

}  // namespace sgm
