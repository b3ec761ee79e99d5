// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tde/geometry.hpp"
#include "tde/quadrature.hpp"

namespace tde
{

struct Box
{
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct GridSpec
{
  Box box;
  double h = 0.0;
  double dt = 0.0;
  int n_steps = 0;
  double cfl = 0.9;

  // Node counts along each axis.
  std::array<int, 3> shape() const;
  std::size_t node_count() const;
  double duration() const { return dt * n_steps; }
  // Throws CflViolation when dt exceeds cfl * h / sqrt(3).
  void validate() const;
};

// Grid with spacing h over box, time step cfl * h / sqrt(3) and enough steps to reach T.
GridSpec make_grid(const Box &box, double h, double T, double cfl = 0.9);

// Box whose faces are farther than T/2 + margin from every probe ball. With pad_obstacles
// the obstacles are padded the same way; without it the box only has to hide the outer
// boundary from the receivers, which is all causality needs.
Box causal_box(const Scene &scene, const std::vector<Probe> &probes, double T, double margin,
               bool pad_obstacles = true);

// Initial velocity chi_B of a ball.
struct SourceSpec
{
  Probe ball;
};

// Field sampled at the quadrature nodes of one receiver ball. values(n, j) is u at time
// n * dt and node j.
struct WaveRecord
{
  Probe probe;
  BallQuadrature quadrature;
  double dt = 0.0;
  Eigen::MatrixXd values;

  int sample_count() const { return static_cast<int>(values.rows()); }
  double duration() const { return dt * (values.rows() - 1); }
  double time(int n) const { return dt * n; }
};

struct SimulationOptions
{
  int radial_points = 6;
  int sphere_points = 26;
  // Evaluate the discrete energy every this many steps; 0 disables it.
  int energy_every = 0;
};

struct SimulationResult
{
  std::vector<WaveRecord> records;
  // Field value interpolated at each receiver center, per time sample.
  std::vector<std::vector<double>> center_traces;
  std::vector<double> energy_times;
  std::vector<double> energy;
  std::size_t ghost_count = 0;
  std::size_t fluid_count = 0;
};

// Leapfrog solution of the wave equation outside the scene's obstacles with the impedance
// condition imposed through ghost nodes. Initial displacement zero, initial velocity chi_B.
SimulationResult simulate(const Scene &scene, const SourceSpec &source,
                          const std::vector<Probe> &receivers, const GridSpec &grid,
                          const SimulationOptions &options = {});

// Largest relative rise of the energy history between consecutive samples, measured
// against its running maximum.
double max_energy_rise(const std::vector<double> &energy);

// Raw trace file of little-endian float64 values: n_nodes, n_steps, dt, probe center (3),
// probe radius, 3 * n_nodes node coordinates, n_nodes weights, then (n_steps + 1) * n_nodes
// field values in time-major order.
void write_trace(const std::string &path, const WaveRecord &record);
WaveRecord read_trace(const std::string &path);

// One-dimensional check of the boundary treatment: a Gaussian pulse hits the face x = 0 of
// the half line x > 0 carrying the impedance condition, and the reflected amplitude is
// compared with the incident one.
struct SlabReflection
{
  double measured = 0.0;
  double expected = 0.0;
};
SlabReflection slab_reflection(const SurfaceCoefficients &surface, double h = 0.01);

}  // namespace tde
