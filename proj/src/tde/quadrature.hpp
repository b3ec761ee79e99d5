// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tde/types.hpp"

namespace tde
{

struct Rule1D
{
  std::vector<double> nodes, weights;
};

// Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Sphere rule with weights summing to one.
struct SphereRule
{
  std::vector<Vec3> directions;
  std::vector<double> weights;
};

// Lebedev rules of degree 7 (26 points) and 11 (50 points).
SphereRule lebedev(int points);

// Nodes and weights for integrating over a ball; weights sum to the ball volume.
struct BallQuadrature
{
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre in radius times a Lebedev sphere rule.
BallQuadrature ball_quadrature(const Vec3 &center, double radius, int radial_points = 6,
                               int sphere_points = 26);

// Product rule in spherical coordinates (Gauss-Legendre in r and cos(theta), trapezoid in
// azimuth). Used to check closed-form ball integrals independently of the Lebedev rule.
BallQuadrature ball_quadrature_dense(const Vec3 &center, double radius, int radial_points,
                                     int polar_points, int azimuth_points);

}  // namespace tde
