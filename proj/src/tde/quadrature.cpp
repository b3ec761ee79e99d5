// SPDX-License-Identifier: Apache-2.0
#include "tde/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "tde/error.hpp"

namespace tde
{

Rule1D gauss_legendre(int n, double a, double b)
{
  if (n < 1)
  {
    fail(ErrorCode::InvalidArgument, "gauss_legendre: need at least one node");
  }
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k)
      {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = w * half;
  }
  return r;
}

namespace
{

void add_octahedral(SphereRule &r, double w)
{
  for (int axis = 0; axis < 3; ++axis)
  {
    for (double s : {-1.0, 1.0})
    {
      Vec3 v = Vec3::Zero();
      v[axis] = s;
      r.directions.push_back(v);
      r.weights.push_back(w);
    }
  }
}

void add_edges(SphereRule &r, double w)
{
  const double a = 1.0 / std::sqrt(2.0);
  for (int skip = 0; skip < 3; ++skip)
  {
    for (double s1 : {-a, a})
    {
      for (double s2 : {-a, a})
      {
        Vec3 v = Vec3::Zero();
        v[(skip + 1) % 3] = s1;
        v[(skip + 2) % 3] = s2;
        r.directions.push_back(v);
        r.weights.push_back(w);
      }
    }
  }
}

void add_corners(SphereRule &r, double w)
{
  const double a = 1.0 / std::sqrt(3.0);
  for (double sx : {-a, a})
  {
    for (double sy : {-a, a})
    {
      for (double sz : {-a, a})
      {
        r.directions.emplace_back(sx, sy, sz);
        r.weights.push_back(w);
      }
    }
  }
}

// 24 points of the form (l, l, m) and permutations with all sign choices.
void add_llm(SphereRule &r, double l, double w)
{
  const double m = std::sqrt(1.0 - 2.0 * l * l);
  for (int odd = 0; odd < 3; ++odd)
  {
    for (double s0 : {-1.0, 1.0})
    {
      for (double s1 : {-1.0, 1.0})
      {
        for (double s2 : {-1.0, 1.0})
        {
          Vec3 v;
          v[odd] = s0 * m;
          v[(odd + 1) % 3] = s1 * l;
          v[(odd + 2) % 3] = s2 * l;
          r.directions.push_back(v);
          r.weights.push_back(w);
        }
      }
    }
  }
}

}  // namespace

SphereRule lebedev(int points)
{
  SphereRule r;
  if (points == 26)
  {
    add_octahedral(r, 1.0 / 21.0);
    add_edges(r, 4.0 / 105.0);
    add_corners(r, 9.0 / 280.0);
  }
  else if (points == 50)
  {
    add_octahedral(r, 4.0 / 315.0);
    add_edges(r, 64.0 / 2835.0);
    add_corners(r, 27.0 / 1280.0);
    add_llm(r, 3.0 / std::sqrt(99.0), 14641.0 / 725760.0);
  }
  else
  {
    fail(ErrorCode::InvalidArgument, "lebedev: supported sizes are 26 and 50");
  }
  return r;
}

BallQuadrature ball_quadrature(const Vec3 &center, double radius, int radial_points,
                               int sphere_points)
{
  if (!(radius > 0))
  {
    fail(ErrorCode::InvalidArgument, "ball_quadrature: radius must be positive");
  }
  const Rule1D radial = gauss_legendre(radial_points, 0.0, radius);
  const SphereRule sphere = lebedev(sphere_points);
  BallQuadrature q;
  q.center = center;
  q.radius = radius;
  for (int i = 0; i < radial_points; ++i)
  {
    const double r = radial.nodes[i];
    for (std::size_t j = 0; j < sphere.directions.size(); ++j)
    {
      q.nodes.push_back(center + r * sphere.directions[j]);
      q.weights.push_back(4.0 * std::numbers::pi * r * r * radial.weights[i] * sphere.weights[j]);
    }
  }
  return q;
}

BallQuadrature ball_quadrature_dense(const Vec3 &center, double radius, int radial_points,
                                     int polar_points, int azimuth_points)
{
  const Rule1D radial = gauss_legendre(radial_points, 0.0, radius);
  const Rule1D polar = gauss_legendre(polar_points, -1.0, 1.0);
  BallQuadrature q;
  q.center = center;
  q.radius = radius;
  const double dphi = 2.0 * std::numbers::pi / azimuth_points;
  for (int i = 0; i < radial_points; ++i)
  {
    const double r = radial.nodes[i];
    for (int j = 0; j < polar_points; ++j)
    {
      const double c = polar.nodes[j], s = std::sqrt(1.0 - c * c);
      for (int k = 0; k < azimuth_points; ++k)
      {
        const double a = k * dphi;
        q.nodes.push_back(center + r * Vec3(s * std::cos(a), s * std::sin(a), c));
        q.weights.push_back(r * r * radial.weights[i] * polar.weights[j] * dphi);
      }
    }
  }
  return q;
}

}  // namespace tde
