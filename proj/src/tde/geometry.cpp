// SPDX-License-Identifier: Apache-2.0
#include "tde/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "tde/error.hpp"

namespace tde
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform access to one obstacle's level function.
struct SurfaceView
{
  std::function<double(const Vec3 &)> level;
  std::function<Vec3(const Vec3 &)> gradient;
  std::function<Mat3(const Vec3 &)> hessian;
};

SurfaceView view_of(const Scene &scene, std::size_t obstacle)
{
  if (obstacle < scene.spheres.size())
  {
    const SphereObstacle s = scene.spheres[obstacle];
    return {[s](const Vec3 &x) { return (x - s.center).norm() - s.radius; },
            [s](const Vec3 &x) { return Vec3((x - s.center).normalized()); },
            [s](const Vec3 &x)
            {
              const Vec3 d = x - s.center;
              const double r = d.norm();
              const Vec3 n = d / r;
              return Mat3((Mat3::Identity() - n * n.transpose()) / r);
            }};
  }
  if (obstacle == scene.spheres.size() && scene.implicit)
  {
    const ImplicitObstacle &o = *scene.implicit;
    return {[&o](const Vec3 &x) { return o.level(x); },
            [&o](const Vec3 &x) { return o.gradient(x); },
            [&o](const Vec3 &x) { return o.hessian(x); }};
  }
  fail(ErrorCode::InvalidArgument, "obstacle index out of range");
}

Vec3 project_onto(const SurfaceView &v, Vec3 y, double scale)
{
  for (int it = 0; it < 100; ++it)
  {
    const Vec3 g = v.gradient(y);
    const double gg = g.squaredNorm();
    if (gg == 0.0)
    {
      fail(ErrorCode::Singular, "surface projection: vanishing level gradient");
    }
    const Vec3 step = v.level(y) * g / gg;
    y -= step;
    if (step.norm() < 1e-15 * scale)
    {
      break;
    }
  }
  return y;
}

double level_residual(const SurfaceView &v, const Vec3 &x)
{
  const double g = v.gradient(x).norm();
  if (g == 0.0)
  {
    return kInf;
  }
  return std::abs(v.level(x)) / g;
}

std::vector<Vec3> cluster(const std::vector<Vec3> &points, double tol)
{
  std::vector<Vec3> out;
  for (const auto &p : points)
  {
    bool merged = false;
    for (auto &c : out)
    {
      if ((c - p).norm() <= tol)
      {
        merged = true;
        break;
      }
    }
    if (!merged)
    {
      out.push_back(p);
    }
  }
  return out;
}

constexpr std::size_t kMaxFiniteReflectors = 12;

}  // namespace

ImplicitObstacle::ImplicitObstacle(Level level, Gradient gradient, Hessian hessian,
                                   Vec3 interior_point, double extent,
                                   SurfaceCoefficients surface, std::string description)
  : level_(std::move(level)), gradient_(std::move(gradient)), hessian_(std::move(hessian)),
    interior_point_(std::move(interior_point)), extent_(extent), surface_(surface),
    description_(std::move(description))
{
  if (!(surface_.damping >= 0))
  {
    fail(ErrorCode::InvalidArgument, "implicit obstacle: damping must be nonnegative");
  }
}

ImplicitObstacle ImplicitObstacle::ellipsoid(const Vec3 &center, const Vec3 &semi_axes,
                                             const Mat3 &rotation, SurfaceCoefficients surface)
{
  if (!(semi_axes.minCoeff() > 0))
  {
    fail(ErrorCode::InvalidArgument, "ellipsoid: semi-axes must be positive");
  }
  const Vec3 w = semi_axes.cwiseInverse().cwiseAbs2();
  const Mat3 metric = rotation * w.asDiagonal() * rotation.transpose();
  std::ostringstream d;
  d.precision(17);
  d << "ellipsoid center=(" << center.transpose() << ") axes=(" << semi_axes.transpose()
    << ") rotation=(" << Eigen::Map<const Eigen::Matrix<double, 1, 9>>(rotation.data()) << ")";
  return ImplicitObstacle(
      [center, metric](const Vec3 &x)
      {
        const Vec3 y = x - center;
        return y.dot(metric * y) - 1.0;
      },
      [center, metric](const Vec3 &x) { return Vec3(2.0 * metric * (x - center)); },
      [metric](const Vec3 &) { return Mat3(2.0 * metric); }, center, semi_axes.maxCoeff(),
      surface, d.str());
}

ImplicitObstacle ImplicitObstacle::half_space(const Vec3 &point, const Vec3 &outward_normal,
                                              SurfaceCoefficients surface)
{
  const Vec3 n = outward_normal.normalized();
  std::ostringstream d;
  d.precision(17);
  d << "half_space point=(" << point.transpose() << ") normal=(" << n.transpose() << ")";
  ImplicitObstacle o([point, n](const Vec3 &x) { return (x - point).dot(n); },
                     [n](const Vec3 &) { return n; }, [](const Vec3 &) { return Mat3::Zero().eval(); },
                     point - n, kInf, surface, d.str());
  o.exact_distance = [point, n](const Vec3 &x) { return (x - point).dot(n); };
  return o;
}

void Scene::validate() const
{
  if (!spheres.empty() && implicit)
  {
    fail(ErrorCode::InvalidArgument, "scene: use either spheres or one implicit obstacle");
  }
  for (std::size_t i = 0; i < spheres.size(); ++i)
  {
    const auto &s = spheres[i];
    if (!(s.radius > 0))
    {
      fail(ErrorCode::InvalidArgument, "scene: sphere " + std::to_string(i) + " radius must be positive");
    }
    if (!(s.surface.damping >= 0))
    {
      fail(ErrorCode::InvalidArgument, "scene: sphere " + std::to_string(i) + " damping must be nonnegative");
    }
    for (std::size_t j = 0; j < i; ++j)
    {
      if ((s.center - spheres[j].center).norm() <= s.radius + spheres[j].radius)
      {
        fail(ErrorCode::InvalidArgument, "scene: spheres " + std::to_string(j) + " and " +
                                             std::to_string(i) + " overlap or touch");
      }
    }
  }
}

std::optional<std::pair<Vec3, Vec3>> Scene::bounds() const
{
  if (implicit && !implicit->bounded())
  {
    return std::nullopt;
  }
  if (is_empty())
  {
    return std::nullopt;
  }
  Vec3 lo = Vec3::Constant(kInf), hi = Vec3::Constant(-kInf);
  for (const auto &s : spheres)
  {
    lo = lo.cwiseMin(s.center - Vec3::Constant(s.radius));
    hi = hi.cwiseMax(s.center + Vec3::Constant(s.radius));
  }
  if (implicit)
  {
    const double e = implicit->extent();
    lo = lo.cwiseMin(implicit->interior_point() - Vec3::Constant(e));
    hi = hi.cwiseMax(implicit->interior_point() + Vec3::Constant(e));
  }
  return std::make_pair(lo, hi);
}

double Scene::diameter() const
{
  const auto b = bounds();
  if (!b)
  {
    return 1.0;
  }
  return (b->second - b->first).norm();
}

bool Scene::contains(const Vec3 &x) const
{
  for (const auto &s : spheres)
  {
    if ((x - s.center).norm() < s.radius)
    {
      return true;
    }
  }
  return implicit && implicit->level(x) < 0.0;
}

const SurfaceCoefficients &Scene::surface_of(std::size_t obstacle) const
{
  if (obstacle < spheres.size())
  {
    return spheres[obstacle].surface;
  }
  if (implicit && obstacle == spheres.size())
  {
    return implicit->surface();
  }
  fail(ErrorCode::InvalidArgument, "obstacle index out of range");
}

Scene::Foot Scene::closest_point(const Vec3 &x) const
{
  Foot best{x, Vec3::UnitX(), kInf, 0};
  for (std::size_t i = 0; i < spheres.size(); ++i)
  {
    const Vec3 d = x - spheres[i].center;
    const double r = d.norm();
    const Vec3 n = r > 0 ? Vec3(d / r) : Vec3::UnitX();
    const double dist = r - spheres[i].radius;
    if (std::abs(dist) < std::abs(best.distance))
    {
      best = {spheres[i].center + spheres[i].radius * n, n, dist, i};
    }
  }
  if (implicit)
  {
    const std::size_t idx = spheres.size();
    const SurfaceView v = view_of(*this, idx);
    Vec3 foot;
    if (implicit->exact_distance)
    {
      const double s = (*implicit->exact_distance)(x);
      const Vec3 n = implicit->gradient(x).normalized();
      foot = x - s * n;
    }
    else
    {
      const SurfaceObjective f{[x](const Vec3 &y) { return 0.5 * (y - x).squaredNorm(); },
                               [x](const Vec3 &y) { return Vec3(y - x); },
                               [](const Vec3 &) { return Mat3::Identity().eval(); }};
      foot = minimize_on_surface(*this, idx, f, x);
    }
    const Vec3 n = implicit->gradient(foot).normalized();
    const double dist = (implicit->level(x) < 0 ? -1.0 : 1.0) * (x - foot).norm();
    if (std::abs(dist) < std::abs(best.distance))
    {
      best = {foot, n, dist, idx};
    }
  }
  if (!std::isfinite(best.distance))
  {
    fail(ErrorCode::InvalidArgument, "closest_point: empty scene");
  }
  return best;
}

double Scene::signed_distance(const Vec3 &x) const
{
  return closest_point(x).distance;
}

std::pair<Vec3, Vec3> tangent_basis(const Vec3 &normal)
{
  const Vec3 n = normal.normalized();
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  const Vec3 a = Vec3::Unit(axis);
  const Vec3 e1 = a.cross(n).normalized();
  const Vec3 e2 = n.cross(e1);
  return {e1, e2};
}

ShapeOperator2 make_shape_operator(const Mat2 &matrix, const Vec3 &e1, const Vec3 &e2,
                                   const Vec3 &normal)
{
  ShapeOperator2 s;
  s.matrix = 0.5 * (matrix + matrix.transpose());
  s.e1 = e1;
  s.e2 = e2;
  s.normal = normal;
  Eigen::SelfAdjointEigenSolver<Mat2> eig(s.matrix);
  s.k1 = eig.eigenvalues()[0];
  s.k2 = eig.eigenvalues()[1];
  const Vec2 v1 = eig.eigenvectors().col(0), v2 = eig.eigenvectors().col(1);
  s.direction1 = (v1[0] * e1 + v1[1] * e2).normalized();
  s.direction2 = (v2[0] * e1 + v2[1] * e2).normalized();
  return s;
}

double ShapeOperator2::normal_curvature(const Vec3 &tangent) const
{
  const Vec2 t(tangent.dot(e1), tangent.dot(e2));
  const double n2 = t.squaredNorm();
  if (n2 == 0.0)
  {
    fail(ErrorCode::InvalidArgument, "normal_curvature: vector is normal to the surface");
  }
  return t.dot(matrix * t) / n2;
}

std::vector<Vec3> icosphere(int subdivisions)
{
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto &x : v)
  {
    x.normalize();
  }
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level)
  {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b)
    {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end())
      {
        return it->second;
      }
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto &f : faces)
    {
      const int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  return v;
}

std::vector<std::vector<Vec3>> surface_seeds(const Scene &scene, int subdivisions,
                                             const std::vector<Vec3> &focus_points)
{
  const auto dirs = icosphere(subdivisions);
  std::vector<std::vector<Vec3>> out;
  for (const auto &s : scene.spheres)
  {
    std::vector<Vec3> pts;
    for (const auto &d : dirs)
    {
      pts.push_back(s.center + s.radius * d);
    }
    out.push_back(std::move(pts));
  }
  if (scene.implicit)
  {
    const auto &o = *scene.implicit;
    std::vector<Vec3> pts;
    if (!o.bounded())
    {
      const SurfaceView v = view_of(scene, scene.spheres.size());
      Vec3 mean = Vec3::Zero();
      for (const auto &f : focus_points)
      {
        pts.push_back(project_onto(v, f, 1.0));
        mean += f;
      }
      if (!focus_points.empty())
      {
        pts.push_back(project_onto(v, mean / focus_points.size(), 1.0));
      }
    }
    else
    {
      const Vec3 c = o.interior_point();
      const double reach = 2.0 * o.extent();
      constexpr int kMarch = 64;
      for (const auto &d : dirs)
      {
        double a = 0.0, b = -1.0;
        for (int k = 1; k <= kMarch; ++k)
        {
          const double t = reach * k / kMarch;
          if (o.level(c + t * d) >= 0.0)
          {
            a = reach * (k - 1) / kMarch;
            b = t;
            break;
          }
        }
        if (b < 0)
        {
          continue;
        }
        for (int it = 0; it < 80; ++it)
        {
          const double m = 0.5 * (a + b);
          (o.level(c + m * d) < 0.0 ? a : b) = m;
        }
        pts.push_back(c + 0.5 * (a + b) * d);
      }
    }
    out.push_back(std::move(pts));
  }
  return out;
}

Vec3 minimize_on_surface(const Scene &scene, std::size_t obstacle, const SurfaceObjective &f,
                         const Vec3 &seed)
{
  const SurfaceView v = view_of(scene, obstacle);
  const double scale = scene.diameter();
  Vec3 y = project_onto(v, seed, scale);
  double fy = f.value(y);
  double step = 0.1 * scale;
  for (int it = 0; it < 5000; ++it)
  {
    const Vec3 n = v.gradient(y).normalized();
    const Vec3 g = f.gradient(y);
    const Vec3 gt = g - g.dot(n) * n;
    const double gn = gt.norm();
    if (gn <= 1e-13 * (g.norm() + 1e-300))
    {
      break;
    }
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt)
    {
      const Vec3 trial = project_onto(v, y - (step / gn) * gt, scale);
      const double ft = f.value(trial);
      if (ft <= fy - 1e-4 * step * gn)
      {
        y = trial;
        fy = ft;
        step *= 2.0;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
    {
      break;
    }
  }
  // Newton polish on the Lagrange conditions.
  Vec3 z = y;
  Vec3 g0 = v.gradient(z);
  double lambda = -f.gradient(z).dot(g0) / g0.squaredNorm();
  for (int it = 0; it < 30; ++it)
  {
    const Vec3 gpsi = v.gradient(z);
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J.topLeftCorner<3, 3>() = f.hessian(z) + lambda * v.hessian(z);
    J.block<3, 1>(0, 3) = gpsi;
    J.block<1, 3>(3, 0) = gpsi.transpose();
    Eigen::Vector4d F;
    F.head<3>() = f.gradient(z) + lambda * gpsi;
    F[3] = v.level(z);
    const Eigen::Vector4d d = J.fullPivLu().solve(-F);
    if (!d.allFinite())
    {
      break;
    }
    z += d.head<3>();
    lambda += d[3];
    if (d.head<3>().norm() < 1e-15 * scale)
    {
      break;
    }
  }
  if (z.allFinite() && (z - y).norm() < 1e-3 * scale && level_residual(v, z) < 1e-12 * scale &&
      f.value(z) <= fy + 1e-14 * std::max(1.0, std::abs(fy)))
  {
    return z;
  }
  return y;
}

double boundary_distance(const Scene &scene, const Vec3 &p)
{
  if (scene.is_empty())
  {
    fail(ErrorCode::InvalidArgument, "boundary_distance: empty scene");
  }
  if (scene.contains(p))
  {
    fail(ErrorCode::DomainError, "boundary_distance: point lies inside an obstacle");
  }
  double best = kInf;
  for (const auto &s : scene.spheres)
  {
    best = std::min(best, (p - s.center).norm() - s.radius);
  }
  if (scene.implicit)
  {
    if (scene.implicit->exact_distance)
    {
      best = std::min(best, (*scene.implicit->exact_distance)(p));
    }
    else
    {
      const auto r = first_reflector(scene, p);
      for (const auto &q : r.points)
      {
        best = std::min(best, (q - p).norm());
      }
    }
  }
  return std::max(best, 0.0);
}

ReflectorSet first_reflector(const Scene &scene, const Vec3 &p, double tol)
{
  if (scene.is_empty())
  {
    fail(ErrorCode::InvalidArgument, "first_reflector: empty scene");
  }
  if (scene.contains(p))
  {
    fail(ErrorCode::DomainError, "first_reflector: point lies inside an obstacle");
  }
  if (tol < 0)
  {
    tol = 1e-6 * scene.diameter();
  }
  std::vector<Vec3> candidates;
  for (const auto &s : scene.spheres)
  {
    candidates.push_back(s.center + s.radius * (p - s.center).normalized());
  }
  if (scene.implicit)
  {
    const std::size_t idx = scene.spheres.size();
    const SurfaceObjective f{[p](const Vec3 &y) { return 0.5 * (y - p).squaredNorm(); },
                             [p](const Vec3 &y) { return Vec3(y - p); },
                             [](const Vec3 &) { return Mat3::Identity().eval(); }};
    const auto seeds = surface_seeds(scene, 3, {p}).back();
    for (const auto &s : seeds)
    {
      candidates.push_back(minimize_on_surface(scene, idx, f, s));
    }
  }
  double best = kInf;
  for (const auto &c : candidates)
  {
    best = std::min(best, (c - p).norm());
  }
  std::vector<Vec3> near;
  for (const auto &c : candidates)
  {
    if ((c - p).norm() <= best + tol)
    {
      near.push_back(c);
    }
  }
  ReflectorSet out;
  out.points = cluster(near, tol);
  out.finite = out.points.size() <= kMaxFiniteReflectors;
  return out;
}

ShapeOperator2 shape_operator(const Scene &scene, const Vec3 &q, double tol)
{
  const double scale = scene.diameter();
  for (std::size_t i = 0; i < scene.spheres.size(); ++i)
  {
    const auto &s = scene.spheres[i];
    const Vec3 d = q - s.center;
    if (std::abs(d.norm() - s.radius) <= tol * scale)
    {
      const Vec3 n = d.normalized();
      const auto [e1, e2] = tangent_basis(n);
      return make_shape_operator(-Mat2::Identity() / s.radius, e1, e2, n);
    }
  }
  if (scene.implicit)
  {
    const auto &o = *scene.implicit;
    const Vec3 g = o.gradient(q);
    const double gn = g.norm();
    if (gn < 1e-12)
    {
      fail(ErrorCode::Singular, "shape_operator: degenerate level gradient");
    }
    if (std::abs(o.level(q)) / gn <= tol * scale)
    {
      const Vec3 n = g / gn;
      const auto [e1, e2] = tangent_basis(n);
      const Mat3 h = o.hessian(q);
      Mat2 m;
      m << e1.dot(h * e1), e1.dot(h * e2), e2.dot(h * e1), e2.dot(h * e2);
      return make_shape_operator(-m / gn, e1, e2, n);
    }
  }
  fail(ErrorCode::NotOnSurface, "shape_operator: point is not on the obstacle surface");
}

double reflector_determinant(const Scene &scene, const Vec3 &p, const Vec3 &q)
{
  const ShapeOperator2 s = shape_operator(scene, q);
  const double lambda = 1.0 / (p - q).norm();
  return (lambda - s.k1) * (lambda - s.k2);
}

void Spheroid::validate() const
{
  if (!(level > (focus - other_focus).norm()))
  {
    fail(ErrorCode::InvalidArgument, "spheroid: level must exceed the focal distance");
  }
}

double Spheroid::path_length(const Vec3 &x) const
{
  return (x - focus).norm() + (x - other_focus).norm();
}

SpheroidPoint spheroid_point(const Spheroid &sph, const Vec3 &direction)
{
  sph.validate();
  const Vec3 w = direction.normalized();
  const double sep2 = (sph.focus - sph.other_focus).squaredNorm();
  const double s = (sph.level * sph.level - sep2) /
                   (2.0 * (sph.level - w.dot(sph.focus - sph.other_focus)));
  return {sph.other_focus + s * w, s};
}

ShapeOperator2 spheroid_shape_operator(const Spheroid &sph, const Vec3 &q, double tol)
{
  sph.validate();
  if (std::abs(sph.path_length(q) - sph.level) > tol * sph.level)
  {
    fail(ErrorCode::NotOnSurface, "spheroid_shape_operator: point is not on the spheroid");
  }
  const Vec3 a = q - sph.focus, b = q - sph.other_focus;
  const double ra = a.norm(), rb = b.norm();
  const Vec3 ua = a / ra, ub = b / rb;
  const Vec3 g = ua + ub;
  const Mat3 h = (Mat3::Identity() - ua * ua.transpose()) / ra +
                 (Mat3::Identity() - ub * ub.transpose()) / rb;
  const double gn = g.norm();
  const Vec3 inward = -g / gn;
  const auto [e1, e2] = tangent_basis(inward);
  Mat2 m;
  m << e1.dot(h * e1), e1.dot(h * e2), e2.dot(h * e1), e2.dot(h * e2);
  return make_shape_operator(m / gn, e1, e2, inward);
}

BistaticReflection bistatic_reflector(const Scene &scene, const Vec3 &p, const Vec3 &p2,
                                      double tol)
{
  if (scene.is_empty())
  {
    fail(ErrorCode::InvalidArgument, "bistatic_reflector: empty scene");
  }
  if (scene.contains(p) || scene.contains(p2))
  {
    fail(ErrorCode::DomainError, "bistatic_reflector: focus lies inside an obstacle");
  }
  if (tol < 0)
  {
    tol = 1e-6 * scene.diameter();
  }
  const SurfaceObjective f{
      [p, p2](const Vec3 &x) { return (x - p).norm() + (x - p2).norm(); },
      [p, p2](const Vec3 &x) { return Vec3((x - p).normalized() + (x - p2).normalized()); },
      [p, p2](const Vec3 &x)
      {
        const Vec3 a = x - p, b = x - p2;
        const double ra = a.norm(), rb = b.norm();
        const Vec3 ua = a / ra, ub = b / rb;
        return Mat3((Mat3::Identity() - ua * ua.transpose()) / ra +
                    (Mat3::Identity() - ub * ub.transpose()) / rb);
      }};
  const auto seeds = surface_seeds(scene, 3, {p, p2});
  std::vector<Vec3> minima;
  for (std::size_t obstacle = 0; obstacle < seeds.size(); ++obstacle)
  {
    std::vector<std::pair<double, Vec3>> ranked;
    for (const auto &s : seeds[obstacle])
    {
      ranked.emplace_back(f.value(s), s);
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const auto &a, const auto &b) { return a.first < b.first; });
    const std::size_t keep = std::min<std::size_t>(ranked.size(), 24);
    for (std::size_t i = 0; i < keep; ++i)
    {
      minima.push_back(minimize_on_surface(scene, obstacle, f, ranked[i].second));
    }
  }
  BistaticReflection out;
  out.min_path = kInf;
  for (const auto &m : minima)
  {
    out.min_path = std::min(out.min_path, f.value(m));
  }
  std::vector<Vec3> near;
  for (const auto &m : minima)
  {
    if (f.value(m) <= out.min_path + tol)
    {
      near.push_back(m);
    }
  }
  out.points.points = cluster(near, tol);
  out.points.finite = out.points.points.size() <= kMaxFiniteReflectors;
  return out;
}

HJet sphere_jet(double radius, const Vec3 &normal)
{
  HJet j;
  j.normal = normal.normalized();
  std::tie(j.e1, j.e2) = tangent_basis(j.normal);
  // h = -R + sqrt(R^2 - |s|^2) = -|s|^2/(2R) - |s|^4/(8R^3) + ...
  j.hessian = -Mat2::Identity() / radius;
  const double r3 = radius * radius * radius;
  for (int i = 0; i < 2; ++i)
  {
    for (int k = 0; k < 2; ++k)
    {
      for (int l = 0; l < 2; ++l)
      {
        for (int m = 0; m < 2; ++m)
        {
          // Fourth derivative of (s1^2 + s2^2)^2 is 8 (d_ik d_lm + d_il d_km + d_im d_kl).
          const double sym = (i == k && l == m) + (i == l && k == m) + (i == m && k == l);
          j.fourth[8 * i + 4 * k + 2 * l + m] = -sym / r3;
        }
      }
    }
  }
  return j;
}

HJet graph_jet(const Scene &scene, const Vec3 &q)
{
  const ShapeOperator2 s = shape_operator(scene, q);
  for (const auto &sp : scene.spheres)
  {
    if (std::abs((q - sp.center).norm() - sp.radius) <= 1e-7 * scene.diameter())
    {
      HJet j = sphere_jet(sp.radius, s.normal);
      return j;
    }
  }
  const auto &o = *scene.implicit;
  HJet j;
  j.normal = s.normal;
  j.e1 = s.e1;
  j.e2 = s.e2;
  const double curvature = std::max({std::abs(s.k1), std::abs(s.k2), 1.0 / scene.diameter()});
  const double reach = 0.08 / curvature;
  constexpr int kSide = 11;
  constexpr int kDegree = 6;
  std::vector<std::pair<int, int>> powers;
  for (int total = 0; total <= kDegree; ++total)
  {
    for (int a = total; a >= 0; --a)
    {
      powers.emplace_back(a, total - a);
    }
  }
  Eigen::MatrixXd M(kSide * kSide, powers.size());
  Eigen::VectorXd rhs(kSide * kSide);
  int row = 0;
  for (int a = 0; a < kSide; ++a)
  {
    for (int b = 0; b < kSide; ++b)
    {
      const double s1 = reach * (2.0 * a / (kSide - 1) - 1.0);
      const double s2 = reach * (2.0 * b / (kSide - 1) - 1.0);
      const Vec3 base = q + s1 * j.e1 + s2 * j.e2;
      double h = 0.0;
      for (int it = 0; it < 60; ++it)
      {
        const Vec3 x = base + h * j.normal;
        const double dh = o.level(x) / o.gradient(x).dot(j.normal);
        h -= dh;
        if (std::abs(dh) < 1e-16 * reach)
        {
          break;
        }
      }
      // Scaled coordinates keep the fit well conditioned.
      for (std::size_t c = 0; c < powers.size(); ++c)
      {
        M(row, c) = std::pow(s1 / reach, powers[c].first) * std::pow(s2 / reach, powers[c].second);
      }
      rhs[row] = h;
      ++row;
    }
  }
  const Eigen::VectorXd coef = M.colPivHouseholderQr().solve(rhs);
  auto derivative = [&](int a, int b)
  {
    for (std::size_t c = 0; c < powers.size(); ++c)
    {
      if (powers[c].first == a && powers[c].second == b)
      {
        double fact = 1.0;
        for (int k = 2; k <= a; ++k)
        {
          fact *= k;
        }
        for (int k = 2; k <= b; ++k)
        {
          fact *= k;
        }
        return coef[c] * fact / std::pow(reach, a + b);
      }
    }
    return 0.0;
  };
  j.hessian << derivative(2, 0), derivative(1, 1), derivative(1, 1), derivative(0, 2);
  for (int i = 0; i < 2; ++i)
  {
    for (int k = 0; k < 2; ++k)
    {
      for (int l = 0; l < 2; ++l)
      {
        const int a = (i == 0) + (k == 0) + (l == 0);
        j.third[4 * i + 2 * k + l] = derivative(a, 3 - a);
        for (int m = 0; m < 2; ++m)
        {
          const int a4 = a + (m == 0);
          j.fourth[8 * i + 4 * k + 2 * l + m] = derivative(a4, 4 - a4);
        }
      }
    }
  }
  return j;
}

}  // namespace tde
