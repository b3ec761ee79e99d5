// SPDX-License-Identifier: Apache-2.0
#include "tde/fdtd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "tde/error.hpp"

namespace tde
{

namespace
{

// Image points sit this many cell diagonals off the surface so that their trilinear
// stencils stay clear of the obstacle.
constexpr double kImageOffset = 1.01;

struct Lattice
{
  Vec3 lo;
  double h;
  int nx, ny, nz;

  std::size_t index(int i, int j, int k) const
  {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(j) +
                                            static_cast<std::size_t>(ny) * k);
  }
  Vec3 position(int i, int j, int k) const { return lo + h * Vec3(i, j, k); }
};

// Trilinear interpolation weights; `ok` is false when the stencil leaves the grid interior.
struct Stencil
{
  std::array<std::size_t, 8> index{};
  std::array<double, 8> weight{};
  bool ok = false;

  double apply(const double *u) const
  {
    double s = 0.0;
    for (int m = 0; m < 8; ++m)
    {
      s += weight[m] * u[index[m]];
    }
    return s;
  }
};

Stencil make_stencil(const Lattice &g, const Vec3 &x)
{
  Stencil st;
  const Vec3 f = (x - g.lo) / g.h;
  const int i = static_cast<int>(std::floor(f.x()));
  const int j = static_cast<int>(std::floor(f.y()));
  const int k = static_cast<int>(std::floor(f.z()));
  if (i < 1 || j < 1 || k < 1 || i + 1 > g.nx - 2 || j + 1 > g.ny - 2 || k + 1 > g.nz - 2)
  {
    return st;
  }
  const double fx = f.x() - i, fy = f.y() - j, fz = f.z() - k;
  int m = 0;
  for (int c = 0; c < 2; ++c)
  {
    for (int b = 0; b < 2; ++b)
    {
      for (int a = 0; a < 2; ++a)
      {
        st.index[m] = g.index(i + a, j + b, k + c);
        st.weight[m] = (a ? fx : 1 - fx) * (b ? fy : 1 - fy) * (c ? fz : 1 - fz);
        ++m;
      }
    }
  }
  st.ok = true;
  return st;
}

// One ghost node: its value is rebuilt every step from one or two image values.
struct Ghost
{
  std::size_t node;
  Stencil near, far;
  bool dirichlet;
  bool active;
  // Dirichlet: u_G = c_near * u_near. Robin: u_G = c_near u_near + c_far u_far + c_hist g.
  double c_near = 0.0, c_far = 0.0, c_hist = 0.0;
  // Boundary value from the same quadratic: u_B = b_ghost u_G + b_near u_near + b_far u_far.
  double b_ghost = 0.0, b_near = 0.0, b_far = 0.0;
  double damping = 0.0, stiffness = 0.0;
  double boundary_now = 0.0, boundary_prev = 0.0;
};

void check_resolvable(const Scene &scene, double h)
{
  for (const auto &s : scene.spheres)
  {
    if (2.0 * s.radius < 3.0 * h)
    {
      fail(ErrorCode::Unresolvable, "fdtd: sphere of radius " + std::to_string(s.radius) +
                                        " is thinner than 3 grid cells");
    }
  }
}

double ball_fraction(const Vec3 &x, const Probe &ball, double h)
{
  const double r = (x - ball.center).norm();
  const double half_diag = 0.5 * std::sqrt(3.0) * h;
  if (r <= ball.radius - half_diag)
  {
    return 1.0;
  }
  if (r >= ball.radius + half_diag)
  {
    return 0.0;
  }
  constexpr int sub = 6;
  int hits = 0;
  for (int a = 0; a < sub; ++a)
  {
    for (int b = 0; b < sub; ++b)
    {
      for (int c = 0; c < sub; ++c)
      {
        const Vec3 y = x + h * (Vec3(a, b, c) + Vec3::Constant(0.5)) / sub - Vec3::Constant(0.5 * h);
        hits += (y - ball.center).squaredNorm() < ball.radius * ball.radius;
      }
    }
  }
  return static_cast<double>(hits) / (sub * sub * sub);
}

}  // namespace

std::array<int, 3> GridSpec::shape() const
{
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a)
  {
    n[a] = static_cast<int>(std::llround((box.hi[a] - box.lo[a]) / h)) + 1;
  }
  return n;
}

std::size_t GridSpec::node_count() const
{
  const auto n = shape();
  return static_cast<std::size_t>(n[0]) * n[1] * n[2];
}

void GridSpec::validate() const
{
  if (!(h > 0) || !(dt > 0) || n_steps < 1)
  {
    fail(ErrorCode::InvalidArgument, "grid: h, dt and n_steps must be positive");
  }
  if (!(cfl > 0 && cfl <= 1.0))
  {
    fail(ErrorCode::InvalidArgument, "grid: cfl factor must lie in (0, 1]");
  }
  if (dt > cfl * h / std::sqrt(3.0) * (1 + 1e-12))
  {
    fail(ErrorCode::CflViolation, "grid: dt=" + std::to_string(dt) + " exceeds cfl*h/sqrt(3)=" +
                                      std::to_string(cfl * h / std::sqrt(3.0)));
  }
  for (int a = 0; a < 3; ++a)
  {
    if (!(box.hi[a] > box.lo[a]))
    {
      fail(ErrorCode::InvalidArgument, "grid: empty box");
    }
  }
}

GridSpec make_grid(const Box &box, double h, double T, double cfl)
{
  if (!(h > 0) || !(T > 0))
  {
    fail(ErrorCode::InvalidArgument, "make_grid: h and T must be positive");
  }
  GridSpec g;
  g.h = h;
  g.cfl = cfl;
  // Lattice anchored at the origin so that results do not depend on box rounding.
  for (int a = 0; a < 3; ++a)
  {
    g.box.lo[a] = std::floor(box.lo[a] / h) * h;
    g.box.hi[a] = std::ceil(box.hi[a] / h) * h;
  }
  const double dt_max = cfl * h / std::sqrt(3.0);
  g.n_steps = static_cast<int>(std::ceil(T / dt_max - 1e-9));
  g.dt = T / g.n_steps;
  g.validate();
  return g;
}

Box causal_box(const Scene &scene, const std::vector<Probe> &probes, double T, double margin,
               bool pad_obstacles)
{
  if (T < 0 || margin < 0)
  {
    fail(ErrorCode::InvalidArgument, "causal_box: T and margin must be nonnegative");
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  const double pad = 0.5 * T + margin;
  for (const auto &p : probes)
  {
    lo = lo.cwiseMin(p.center - Vec3::Constant(p.radius + pad));
    hi = hi.cwiseMax(p.center + Vec3::Constant(p.radius + pad));
  }
  const auto ob = scene.bounds();
  if (ob && (pad_obstacles || probes.empty() || T == 0))
  {
    const double opad = pad_obstacles ? pad : margin;
    lo = lo.cwiseMin(ob->first - Vec3::Constant(opad));
    hi = hi.cwiseMax(ob->second + Vec3::Constant(opad));
  }
  if (!lo.allFinite())
  {
    fail(ErrorCode::InvalidArgument, "causal_box: nothing to enclose");
  }
  return {lo, hi};
}

SimulationResult simulate(const Scene &scene, const SourceSpec &source,
                          const std::vector<Probe> &receivers, const GridSpec &grid,
                          const SimulationOptions &options)
{
  grid.validate();
  scene.validate();
  check_resolvable(scene, grid.h);
  const auto shape = grid.shape();
  const Lattice g{grid.box.lo, grid.h, shape[0], shape[1], shape[2]};
  if (g.nx < 3 || g.ny < 3 || g.nz < 3)
  {
    fail(ErrorCode::InvalidArgument, "simulate: grid needs at least 3 nodes per axis");
  }
  const std::size_t n = grid.node_count();

  if (!scene.is_empty())
  {
    if (scene.signed_distance(source.ball.center) <= source.ball.radius)
    {
      fail(ErrorCode::DomainError, "simulate: source ball touches an obstacle");
    }
    for (const auto &r : receivers)
    {
      if (scene.signed_distance(r.center) <= r.radius)
      {
        fail(ErrorCode::DomainError, "simulate: receiver ball touches an obstacle");
      }
    }
  }

  // Classify nodes: fluid (updated), inside (obstacle), outer layer (held at zero).
  std::vector<std::uint8_t> inside(n, 0), fluid(n, 0);
  for (int k = 0; k < g.nz; ++k)
  {
    for (int j = 0; j < g.ny; ++j)
    {
      for (int i = 0; i < g.nx; ++i)
      {
        const std::size_t id = g.index(i, j, k);
        inside[id] = !scene.is_empty() && scene.contains(g.position(i, j, k));
        const bool outer =
            i == 0 || j == 0 || k == 0 || i == g.nx - 1 || j == g.ny - 1 || k == g.nz - 1;
        fluid[id] = !inside[id] && !outer;
      }
    }
  }

  const double dt = grid.dt;
  const double ell = kImageOffset * std::sqrt(3.0) * grid.h;
  std::vector<Ghost> ghosts;
  for (int k = 1; k < g.nz - 1; ++k)
  {
    for (int j = 1; j < g.ny - 1; ++j)
    {
      for (int i = 1; i < g.nx - 1; ++i)
      {
        const std::size_t id = g.index(i, j, k);
        if (!inside[id])
        {
          continue;
        }
        const std::size_t sx = 1, sy = g.nx, sz = static_cast<std::size_t>(g.nx) * g.ny;
        if (!(fluid[id + sx] || fluid[id - sx] || fluid[id + sy] || fluid[id - sy] ||
              fluid[id + sz] || fluid[id - sz]))
        {
          continue;
        }
        const auto foot = scene.closest_point(g.position(i, j, k));
        const double depth = -foot.distance;
        const auto &surface = scene.surface_of(foot.obstacle);
        Ghost gh;
        gh.node = id;
        gh.dirichlet = surface.dirichlet;
        gh.damping = surface.damping;
        gh.stiffness = surface.stiffness;
        const Vec3 x_near = foot.point + ell * foot.normal;
        const Vec3 x_far = foot.point + 2.0 * ell * foot.normal;
        gh.near = make_stencil(g, x_near);
        gh.far = make_stencil(g, x_far);
        gh.active = gh.near.ok && gh.far.ok;
        if (gh.active)
        {
          for (const auto *st : {&gh.near, &gh.far})
          {
            for (int m = 0; m < 8; ++m)
            {
              if (inside[st->index[m]])
              {
                fail(ErrorCode::Unresolvable,
                     "fdtd: obstacle too thin or too curved for the grid near node (" +
                         std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
                         ")");
              }
            }
          }
        }
        const double d = depth, l = ell;
        if (gh.dirichlet)
        {
          // Linear through the zero boundary value.
          gh.c_near = -d / l;
        }
        else
        {
          // Quadratic through ghost (-d), near (l) and far (2l), with the time derivative
          // at the boundary by second-order backward difference at the new level.
          const double L0 = 2 * l * l / ((d + l) * (d + 2 * l));
          const double L1 = 2 * d / (l + d);
          const double L2 = -d / (2 * l + d);
          const double D0 = -3 * l / ((d + l) * (d + 2 * l));
          const double D1 = (d - 2 * l) / (-(l + d) * l);
          const double D2 = (d - l) / ((2 * l + d) * l);
          const double a = 3 * gh.damping / (2 * dt) + gh.stiffness;
          const double denom = D0 - a * L0;
          gh.c_near = -(D1 - a * L1) / denom;
          gh.c_far = -(D2 - a * L2) / denom;
          gh.c_hist = 1.0 / denom;
          gh.b_ghost = L0;
          gh.b_near = L1;
          gh.b_far = L2;
        }
        ghosts.push_back(gh);
      }
    }
  }

  // Source: fractional volume of the ball in each cell, restricted to fluid nodes.
  std::vector<double> u0(n, 0.0), u1(n, 0.0), u2(n, 0.0);
  {
    const auto &b = source.ball;
    const Vec3 lo = (b.center - Vec3::Constant(b.radius + grid.h) - g.lo) / g.h;
    const Vec3 hi = (b.center + Vec3::Constant(b.radius + grid.h) - g.lo) / g.h;
    for (int k = std::max(1, static_cast<int>(std::floor(lo.z())));
         k <= std::min(g.nz - 2, static_cast<int>(std::ceil(hi.z()))); ++k)
    {
      for (int j = std::max(1, static_cast<int>(std::floor(lo.y())));
           j <= std::min(g.ny - 2, static_cast<int>(std::ceil(hi.y()))); ++j)
      {
        for (int i = std::max(1, static_cast<int>(std::floor(lo.x())));
             i <= std::min(g.nx - 2, static_cast<int>(std::ceil(hi.x()))); ++i)
        {
          const std::size_t id = g.index(i, j, k);
          if (fluid[id])
          {
            u1[id] = dt * ball_fraction(g.position(i, j, k), b, grid.h);
          }
        }
      }
    }
  }

  SimulationResult result;
  result.ghost_count = ghosts.size();
  result.fluid_count = static_cast<std::size_t>(std::count(fluid.begin(), fluid.end(), 1));

  std::vector<std::vector<Stencil>> receiver_stencils;
  std::vector<Stencil> center_stencils;
  for (const auto &r : receivers)
  {
    WaveRecord rec;
    rec.probe = r;
    rec.quadrature = ball_quadrature(r.center, r.radius, options.radial_points,
                                     options.sphere_points);
    rec.dt = dt;
    rec.values = Eigen::MatrixXd::Zero(grid.n_steps + 1, rec.quadrature.size());
    std::vector<Stencil> sts;
    for (const auto &x : rec.quadrature.nodes)
    {
      sts.push_back(make_stencil(g, x));
      if (!sts.back().ok)
      {
        fail(ErrorCode::InvalidArgument, "simulate: receiver node outside the grid");
      }
    }
    receiver_stencils.push_back(std::move(sts));
    center_stencils.push_back(make_stencil(g, r.center));
    result.records.push_back(std::move(rec));
    result.center_traces.emplace_back(grid.n_steps + 1, 0.0);
  }

  auto apply_ghosts = [&](std::vector<double> &u)
  {
    const double *pu = u.data();
    for (auto &gh : ghosts)
    {
      if (!gh.active)
      {
        u[gh.node] = 0.0;
        continue;
      }
      const double un = gh.near.apply(pu);
      if (gh.dirichlet)
      {
        u[gh.node] = gh.c_near * un;
        continue;
      }
      const double uf = gh.far.apply(pu);
      const double hist = -gh.damping * (4 * gh.boundary_now - gh.boundary_prev) / (2 * dt);
      const double ug = gh.c_near * un + gh.c_far * uf + gh.c_hist * hist;
      u[gh.node] = ug;
      gh.boundary_prev = gh.boundary_now;
      gh.boundary_now = gh.b_ghost * ug + gh.b_near * un + gh.b_far * uf;
    }
  };

  auto record = [&](int step, const std::vector<double> &u)
  {
    for (std::size_t r = 0; r < receivers.size(); ++r)
    {
      auto &vals = result.records[r].values;
      const auto &sts = receiver_stencils[r];
      for (std::size_t m = 0; m < sts.size(); ++m)
      {
        vals(step, static_cast<Eigen::Index>(m)) = sts[m].apply(u.data());
      }
      if (center_stencils[r].ok)
      {
        result.center_traces[r][step] = center_stencils[r].apply(u.data());
      }
    }
  };

  const std::size_t sx = 1, sy = g.nx, sz = static_cast<std::size_t>(g.nx) * g.ny;
  const double h3 = grid.h * grid.h * grid.h;
  // Staggered energy at level n + 1/2; conserved by leapfrog away from the boundary.
  auto energy = [&](const std::vector<double> &a, const std::vector<double> &b)
  {
    double kinetic = 0.0, strain = 0.0;
    for (std::size_t id = 0; id < n; ++id)
    {
      if (!fluid[id])
      {
        continue;
      }
      const double v = (b[id] - a[id]) / dt;
      kinetic += v * v;
      for (const std::size_t s : {sx, sy, sz})
      {
        const std::size_t nb = id + s;
        strain += (b[nb] - b[id]) * (a[nb] - a[id]);
        if (!fluid[id - s])
        {
          strain += (b[id] - b[id - s]) * (a[id] - a[id - s]);
        }
      }
    }
    double surface = 0.0;
    for (const auto &gh : ghosts)
    {
      surface += gh.stiffness * gh.boundary_now * gh.boundary_now;
    }
    return 0.5 * h3 * kinetic + 0.5 * grid.h * strain + 0.5 * grid.h * grid.h * surface;
  };

  apply_ghosts(u1);
  record(0, u0);
  record(1, u1);
  const double c2 = (dt / grid.h) * (dt / grid.h);
  for (int step = 1; step < grid.n_steps; ++step)
  {
    const double *a = u0.data();
    const double *b = u1.data();
    double *c = u2.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int k = 1; k < g.nz - 1; ++k)
    {
      for (int j = 1; j < g.ny - 1; ++j)
      {
        const std::size_t row = g.index(0, j, k);
        for (int i = 1; i < g.nx - 1; ++i)
        {
          const std::size_t id = row + i;
          const double lap = b[id + sx] + b[id - sx] + b[id + sy] + b[id - sy] + b[id + sz] +
                             b[id - sz] - 6.0 * b[id];
          c[id] = fluid[id] ? 2.0 * b[id] - a[id] + c2 * lap : 0.0;
        }
      }
    }
    apply_ghosts(u2);
    record(step + 1, u2);
    if (options.energy_every > 0 && step % options.energy_every == 0)
    {
      result.energy_times.push_back((step + 0.5) * dt);
      result.energy.push_back(energy(u1, u2));
    }
    std::swap(u0, u1);
    std::swap(u1, u2);
  }
  return result;
}

double max_energy_rise(const std::vector<double> &energy)
{
  double peak = 0.0, rise = 0.0;
  for (std::size_t i = 0; i < energy.size(); ++i)
  {
    if (i > 0 && peak > 0)
    {
      rise = std::max(rise, (energy[i] - energy[i - 1]) / peak);
    }
    peak = std::max(peak, energy[i]);
  }
  return rise;
}

namespace
{

void put(std::ofstream &out, double v)
{
  if constexpr (std::endian::native == std::endian::big)
  {
    auto bits = std::bit_cast<std::uint64_t>(v);
    bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

double get(std::ifstream &in)
{
  double v = 0.0;
  in.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!in)
  {
    fail(ErrorCode::IoError, "read_trace: truncated file");
  }
  if constexpr (std::endian::native == std::endian::big)
  {
    auto bits = std::bit_cast<std::uint64_t>(v);
    v = std::bit_cast<double>(__builtin_bswap64(bits));
  }
  return v;
}

}  // namespace

void write_trace(const std::string &path, const WaveRecord &record)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    fail(ErrorCode::IoError, "write_trace: cannot open " + path);
  }
  const auto &q = record.quadrature;
  put(out, static_cast<double>(q.size()));
  put(out, static_cast<double>(record.values.rows() - 1));
  put(out, record.dt);
  for (int a = 0; a < 3; ++a)
  {
    put(out, record.probe.center[a]);
  }
  put(out, record.probe.radius);
  for (const auto &x : q.nodes)
  {
    for (int a = 0; a < 3; ++a)
    {
      put(out, x[a]);
    }
  }
  for (double w : q.weights)
  {
    put(out, w);
  }
  for (Eigen::Index t = 0; t < record.values.rows(); ++t)
  {
    for (Eigen::Index m = 0; m < record.values.cols(); ++m)
    {
      put(out, record.values(t, m));
    }
  }
  if (!out)
  {
    fail(ErrorCode::IoError, "write_trace: write failed for " + path);
  }
}

WaveRecord read_trace(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    fail(ErrorCode::IoError, "read_trace: cannot open " + path);
  }
  WaveRecord r;
  const double nodes = get(in);
  const double steps = get(in);
  if (!(nodes >= 1 && steps >= 0 && nodes < 1e8 && steps < 1e9))
  {
    fail(ErrorCode::IoError, "read_trace: bad header in " + path);
  }
  const auto nn = static_cast<std::size_t>(nodes);
  const auto ns = static_cast<Eigen::Index>(steps);
  r.dt = get(in);
  for (int a = 0; a < 3; ++a)
  {
    r.probe.center[a] = get(in);
  }
  r.probe.radius = get(in);
  r.quadrature.center = r.probe.center;
  r.quadrature.radius = r.probe.radius;
  r.quadrature.nodes.resize(nn);
  r.quadrature.weights.resize(nn);
  for (auto &x : r.quadrature.nodes)
  {
    for (int a = 0; a < 3; ++a)
    {
      x[a] = get(in);
    }
  }
  for (auto &w : r.quadrature.weights)
  {
    w = get(in);
  }
  r.values.resize(ns + 1, static_cast<Eigen::Index>(nn));
  for (Eigen::Index t = 0; t <= ns; ++t)
  {
    for (Eigen::Index m = 0; m < r.values.cols(); ++m)
    {
      r.values(t, m) = get(in);
    }
  }
  return r;
}

SlabReflection slab_reflection(const SurfaceCoefficients &surface, double h)
{
  if (!(h > 0 && h < 0.05))
  {
    fail(ErrorCode::InvalidArgument, "slab_reflection: h must lie in (0, 0.05)");
  }
  // Unit-speed half line [0, 4] with dt = h, which makes the interior scheme exact.
  const double length = 4.0, width = 0.1, start = 2.0, probe = 1.0;
  const int nodes = static_cast<int>(std::llround(length / h)) + 1;
  const double dt = h;
  auto pulse = [&](double x) { return std::exp(-0.5 * (x - start) * (x - start) / (width * width)); };
  std::vector<double> prev(nodes), now(nodes), next(nodes, 0.0);
  // Left-moving pulse G(x + t - start).
  for (int j = 0; j < nodes; ++j)
  {
    now[j] = pulse(j * h);
    prev[j] = pulse(j * h - dt);
  }
  const int probe_node = static_cast<int>(std::llround(probe / h));
  const int steps = static_cast<int>(std::ceil(3.6 / dt));
  double incident = 0.0, reflected = 0.0;
  const double c2 = 1.0;
  for (int s = 1; s <= steps; ++s)
  {
    for (int j = 1; j < nodes - 1; ++j)
    {
      next[j] = 2 * now[j] - prev[j] + c2 * (now[j + 1] + now[j - 1] - 2 * now[j]);
    }
    next[nodes - 1] = 0.0;
    if (surface.dirichlet)
    {
      next[0] = 0.0;
    }
    else
    {
      // Centered ghost u_{-1} eliminated through u_x = damping u_t + stiffness u.
      const double g = surface.damping, b = surface.stiffness;
      next[0] = (2 * now[0] - prev[0] + c2 * (2 * now[1] - 2 * now[0] - 2 * h * b * now[0]) +
                 c2 * h * g / dt * prev[0]) /
                (1 + c2 * h * g / dt);
    }
    const double t = s * dt;
    const double v = next[probe_node];
    if (t < 2.0 && std::abs(v) > std::abs(incident))
    {
      incident = v;
    }
    if (t > 2.0 && std::abs(v) > std::abs(reflected))
    {
      reflected = v;
    }
    std::swap(prev, now);
    std::swap(now, next);
  }
  SlabReflection out;
  out.measured = reflected / incident;
  out.expected = surface.dirichlet ? -1.0
                                   : (1.0 - surface.damping) / (1.0 + surface.damping);
  return out;
}

}  // namespace tde
