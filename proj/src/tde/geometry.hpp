// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tde/types.hpp"

namespace tde
{

// Impedance condition du/dnu = damping * du/dt + stiffness * u on the obstacle surface, or
// u = 0 when dirichlet is set.
struct SurfaceCoefficients
{
  double damping = 0.0;
  double stiffness = 0.0;
  bool dirichlet = false;
};

struct SphereObstacle
{
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  SurfaceCoefficients surface;
};

// Obstacle given as the negative set of a smooth level function.
class ImplicitObstacle
{
public:
  using Level = std::function<double(const Vec3 &)>;
  using Gradient = std::function<Vec3(const Vec3 &)>;
  using Hessian = std::function<Mat3(const Vec3 &)>;

  ImplicitObstacle(Level level, Gradient gradient, Hessian hessian, Vec3 interior_point,
                   double extent, SurfaceCoefficients surface, std::string description);

  static ImplicitObstacle ellipsoid(const Vec3 &center, const Vec3 &semi_axes,
                                    const Mat3 &rotation, SurfaceCoefficients surface = {});
  // Half space {(x - point) . outward_normal < 0}.
  static ImplicitObstacle half_space(const Vec3 &point, const Vec3 &outward_normal,
                                     SurfaceCoefficients surface = {});

  double level(const Vec3 &x) const { return level_(x); }
  Vec3 gradient(const Vec3 &x) const { return gradient_(x); }
  Mat3 hessian(const Vec3 &x) const { return hessian_(x); }

  // A point inside the obstacle from which every surface point is visible along a ray.
  const Vec3 &interior_point() const { return interior_point_; }
  // Radius about interior_point containing the obstacle; infinite for unbounded obstacles.
  double extent() const { return extent_; }
  bool bounded() const { return std::isfinite(extent_); }
  const SurfaceCoefficients &surface() const { return surface_; }
  const std::string &description() const { return description_; }

  // Exact signed distance when available (half space); otherwise empty.
  std::optional<std::function<double(const Vec3 &)>> exact_distance;

private:
  Level level_;
  Gradient gradient_;
  Hessian hessian_;
  Vec3 interior_point_;
  double extent_;
  SurfaceCoefficients surface_;
  std::string description_;
};

struct Scene
{
  std::vector<SphereObstacle> spheres;
  std::optional<ImplicitObstacle> implicit;

  static Scene empty() { return {}; }
  static Scene single_sphere(const SphereObstacle &s) { return Scene{{s}, std::nullopt}; }
  static Scene single(const ImplicitObstacle &o) { return Scene{{}, o}; }

  bool is_empty() const { return spheres.empty() && !implicit; }
  std::size_t obstacle_count() const { return spheres.size() + (implicit ? 1 : 0); }
  // Throws on overlapping spheres, negative damping or nonpositive radii.
  void validate() const;
  // Largest extent of the obstacle union; 1 for an unbounded obstacle.
  double diameter() const;
  // Axis-aligned bounds of the obstacle union; empty optional for unbounded scenes.
  std::optional<std::pair<Vec3, Vec3>> bounds() const;
  bool contains(const Vec3 &x) const;
  // Signed distance to the obstacle union, negative inside.
  double signed_distance(const Vec3 &x) const;
  // Closest surface point, its outward unit normal and the index of the owning obstacle.
  struct Foot
  {
    Vec3 point;
    Vec3 normal;
    double distance;
    std::size_t obstacle;
  };
  Foot closest_point(const Vec3 &x) const;
  const SurfaceCoefficients &surface_of(std::size_t obstacle) const;
};

struct Probe
{
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
};

// Shape operator in an orthonormal tangent basis (e1, e2) with e1 x e2 = normal.
struct ShapeOperator2
{
  Mat2 matrix = Mat2::Zero();
  Vec3 e1, e2, normal;
  double k1 = 0.0, k2 = 0.0;  // k1 <= k2
  Vec3 direction1, direction2;

  double gauss() const { return k1 * k2; }
  double mean() const { return 0.5 * (k1 + k2); }
  // Normal curvature along a tangent vector.
  double normal_curvature(const Vec3 &tangent) const;
};

ShapeOperator2 make_shape_operator(const Mat2 &matrix, const Vec3 &e1, const Vec3 &e2,
                                   const Vec3 &normal);
std::pair<Vec3, Vec3> tangent_basis(const Vec3 &normal);

struct Spheroid
{
  Vec3 focus = Vec3::Zero();
  Vec3 other_focus = Vec3::Zero();
  double level = 1.0;  // broken-path length |x - focus| + |x - other_focus|

  void validate() const;
  double path_length(const Vec3 &x) const;
};

struct ReflectorSet
{
  std::vector<Vec3> points;
  bool finite = true;
};

double boundary_distance(const Scene &scene, const Vec3 &p);
ReflectorSet first_reflector(const Scene &scene, const Vec3 &p, double tol = -1.0);
ShapeOperator2 shape_operator(const Scene &scene, const Vec3 &q, double tol = 1e-7);
double reflector_determinant(const Scene &scene, const Vec3 &p, const Vec3 &q);

struct SpheroidPoint
{
  Vec3 point;
  double offset;  // distance from the second focus along the direction
};
SpheroidPoint spheroid_point(const Spheroid &spheroid, const Vec3 &direction);
ShapeOperator2 spheroid_shape_operator(const Spheroid &spheroid, const Vec3 &q,
                                       double tol = 1e-9);

struct BistaticReflection
{
  double min_path = 0.0;
  ReflectorSet points;
};
BistaticReflection bistatic_reflector(const Scene &scene, const Vec3 &p, const Vec3 &p2,
                                      double tol = -1.0);

// Graph of the surface over its tangent plane at q, h(s1, s2) measured along the outward
// normal, up to fourth derivatives.
struct HJet
{
  Vec3 e1, e2, normal;
  Mat2 hessian = Mat2::Zero();
  std::array<double, 8> third{};    // index (i, j, k) -> 4i + 2j + k
  std::array<double, 16> fourth{};  // index (i, j, k, l) -> 8i + 4j + 2k + l

  double h3(int i, int j, int k) const { return third[4 * i + 2 * j + k]; }
  double h4(int i, int j, int k, int l) const { return fourth[8 * i + 4 * j + 2 * k + l]; }
};

HJet sphere_jet(double radius, const Vec3 &normal);
HJet graph_jet(const Scene &scene, const Vec3 &q);

// Minimize a smooth function over one obstacle's surface, starting from a surface point.
struct SurfaceObjective
{
  std::function<double(const Vec3 &)> value;
  std::function<Vec3(const Vec3 &)> gradient;
  std::function<Mat3(const Vec3 &)> hessian;
};
Vec3 minimize_on_surface(const Scene &scene, std::size_t obstacle, const SurfaceObjective &f,
                         const Vec3 &seed);

// Seed points on each obstacle surface (icosphere directions projected onto the surface).
std::vector<std::vector<Vec3>> surface_seeds(const Scene &scene, int subdivisions,
                                             const std::vector<Vec3> &focus_points);

std::vector<Vec3> icosphere(int subdivisions);

}  // namespace tde
