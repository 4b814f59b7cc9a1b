#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "sgm/sphere.hpp"

using namespace sgm;
using Catch::Matchers::WithinAbs;

namespace {
const SphericalPoint kNorth(0.0, 0.0, 1.0);
const SphericalPoint kSouth(0.0, 0.0, -1.0);
const SphericalPoint kEx(1.0, 0.0, 0.0);
const SphericalPoint kEy(0.0, 1.0, 0.0);
}  // namespace

TEST_CASE("construction rejects non-unit vectors") {
  REQUIRE_THROWS_AS(SphericalPoint(0.5, 0.0, 0.0), DomainError);
  REQUIRE_THROWS_AS(SphericalPoint(1.0, 1.0, 1.0), DomainError);
  REQUIRE_NOTHROW(SphericalPoint(1.0, 0.0, 0.0));
}

TEST_CASE("geodesic distance on known configurations") {
  REQUIRE(geodesic_distance(kNorth, kNorth) == 0.0);
  REQUIRE_THAT(geodesic_distance(kNorth, kSouth), WithinAbs(std::numbers::pi, 1e-15));
  REQUIRE_THAT(geodesic_distance(kEx, kEy), WithinAbs(std::numbers::pi / 2.0, 1e-15));
}

TEST_CASE("geodesic distance is a metric on random triples") {
  RngStream rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto pts = sample_uniform_sphere(3, rng);
    const double ab = geodesic_distance(pts[0], pts[1]);
    const double ba = geodesic_distance(pts[1], pts[0]);
    REQUIRE(ab == ba);
    const double bc = geodesic_distance(pts[1], pts[2]);
    const double ac = geodesic_distance(pts[0], pts[2]);
    REQUIRE(ac <= ab + bc + 1e-12);
    REQUIRE(ab >= 0.0);
    REQUIRE(ab <= std::numbers::pi);
  }
}

TEST_CASE("uniform sphere sampling: unit norm, zero mean, hemisphere symmetry") {
  RngStream rng(3);
  const std::size_t n = 100000;
  const auto pts = sample_uniform_sphere(n, rng);
  Vec3 sum = Vec3::Zero();
  std::size_t upper = 0;
  for (const auto& p : pts) {
    REQUIRE(std::abs(p.vec().squaredNorm() - 1.0) <= 1e-12);
    sum += p.vec();
    if (p.z() > 0.0) ++upper;
  }
  REQUIRE((sum / static_cast<double>(n)).norm() < 0.02);
  REQUIRE_THAT(static_cast<double>(upper) / static_cast<double>(n), WithinAbs(0.5, 0.01));
}

TEST_CASE("uniform sphere sampling rejects empty requests") {
  RngStream rng(0);
  REQUIRE_THROWS_AS(sample_uniform_sphere(0, rng), DomainError);
}

TEST_CASE("vMF sampling rejects non-positive concentration") {
  RngStream rng(0);
  REQUIRE_THROWS_AS(sample_vmf(kNorth, 0.0, rng), DomainError);
  REQUIRE_THROWS_AS(sample_vmf(kNorth, -1.0, rng), DomainError);
}

TEST_CASE("vMF concentration limit: huge kappa stays at the mean") {
  RngStream rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto x = sample_vmf(kEx, 1e9, rng);
    REQUIRE(geodesic_distance(x, kEx) < 1e-3);
    REQUIRE(std::abs(x.vec().squaredNorm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("vMF mean resultant length matches coth(k) - 1/k") {
  // closed form for the S^2 resultant: A(k) = coth(k) - 1/k
  const double kappa = 100.0;
  const double expected = 1.0 / std::tanh(kappa) - 1.0 / kappa;
  RngStream rng(17);
  const int n = 100000;
  Vec3 sum = Vec3::Zero();
  for (int i = 0; i < n; ++i) sum += sample_vmf(kNorth, kappa, rng).vec();
  REQUIRE_THAT((sum / n).norm(), WithinAbs(expected, 0.005));
}

TEST_CASE("vMF empirical mean direction converges to mu") {
  RngStream rng(23);
  const SphericalPoint mu = SphericalPoint::normalized(Vec3(1.0, -2.0, 0.5));
  for (const double kappa : {10.0, 100.0, 1000.0}) {
    const int n = 10000;
    Vec3 sum = Vec3::Zero();
    for (int i = 0; i < n; ++i) sum += sample_vmf(mu, kappa, rng).vec();
    const auto dir = SphericalPoint::normalized(sum);
    REQUIRE(geodesic_distance(dir, mu) < 3.0 / std::sqrt(kappa * n));
  }
  // paper-range check at kappa = 1000 with a larger sample
  Vec3 sum = Vec3::Zero();
  for (int i = 0; i < 100000; ++i) sum += sample_vmf(mu, 1000.0, rng).vec();
  REQUIRE(geodesic_distance(SphericalPoint::normalized(sum), mu) < 0.01);
}

TEST_CASE("sampling is deterministic given the stream key") {
  RngStream a(77, 3), b(77, 3);
  for (int i = 0; i < 100; ++i) {
    const auto pa = sample_vmf(kNorth, 42.0, a);
    const auto pb = sample_vmf(kNorth, 42.0, b);
    REQUIRE(pa.vec() == pb.vec());
  }
}

TEST_CASE("spherical centroid") {
  SECTION("singleton") {
    const std::vector<SphericalPoint> pts{kEx};
    REQUIRE(spherical_centroid(pts).vec() == kEx.vec());
  }
  SECTION("two orthogonal points bisect") {
    const std::vector<SphericalPoint> pts{kEx, kEy};
    const auto c = spherical_centroid(pts);
    const double s = 1.0 / std::sqrt(2.0);
    REQUIRE_THAT(c.x(), WithinAbs(s, 1e-15));
    REQUIRE_THAT(c.y(), WithinAbs(s, 1e-15));
    REQUIRE_THAT(c.z(), WithinAbs(0.0, 1e-15));
  }
  SECTION("antipodal pair is degenerate") {
    const std::vector<SphericalPoint> pts{kNorth, kSouth};
    REQUIRE_THROWS_AS(spherical_centroid(pts), GeometryError);
  }
  SECTION("empty input") {
    REQUIRE_THROWS_AS(spherical_centroid({}), DomainError);
  }
}
