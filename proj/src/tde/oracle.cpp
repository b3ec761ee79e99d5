// SPDX-License-Identifier: Apache-2.0
#include "tde/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tde/error.hpp"
#include "tde/quadrature.hpp"
#include "tde/specfun.hpp"

namespace tde
{

namespace
{

constexpr double kRelativeStop = 1e-14;
constexpr int kStopRun = 5;
constexpr int kMaxOrder = 40000;
// Beyond this the double-precision sum carries more than about 1% relative error.
constexpr double kMaxCancellation = 1e14;

struct SeriesSum
{
  LogValue value;
  int terms = 0;
  double cancellation = 1.0;
};

// Sums terms(N) adaptively: stop once kStopRun consecutive terms fall below kRelativeStop
// of the running sum, doubling N until that happens.
template <class Terms>
SeriesSum adaptive_sum(int start_order, int fixed_order, Terms &&terms_upto)
{
  int order = fixed_order >= 0 ? fixed_order : start_order;
  while (true)
  {
    const std::vector<LogValue> t = terms_upto(order);
    int used = order;
    bool converged = fixed_order >= 0;
    if (!converged)
    {
      LogValue partial;
      int run = 0;
      for (int n = 0; n <= order; ++n)
      {
        partial = partial + t[n];
        const bool small = t[n].is_zero() ||
                           (!partial.is_zero() && t[n].log_abs < partial.log_abs + std::log(kRelativeStop));
        run = small ? run + 1 : 0;
        if (run >= kStopRun)
        {
          used = n;
          converged = true;
          break;
        }
      }
    }
    if (converged)
    {
      SeriesSum s;
      s.value = log_sum(std::span<const LogValue>(t.data(), used + 1));
      s.terms = used + 1;
      double top = -std::numeric_limits<double>::infinity();
      for (int n = 0; n <= used; ++n)
      {
        if (!t[n].is_zero())
        {
          top = std::max(top, t[n].log_abs);
        }
      }
      double mass = 0.0;
      for (int n = 0; n <= used; ++n)
      {
        if (!t[n].is_zero())
        {
          mass += std::exp(t[n].log_abs - top);
        }
      }
      s.cancellation = s.value.is_zero() ? std::numeric_limits<double>::infinity()
                                         : mass * std::exp(top - s.value.log_abs);
      return s;
    }
    order *= 2;
    if (order > kMaxOrder)
    {
      fail(ErrorCode::PrecisionLoss, "mode series did not converge");
    }
  }
}

double log_abs_legendre(double p) { return std::log(std::abs(p)); }
int sign_of(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

double cos_angle(const Vec3 &a, const Vec3 &b)
{
  return std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
}

}  // namespace

LogValue incident_potential(const Probe &probe, const Vec3 &x, double rate)
{
  if (!(rate > 0))
  {
    fail(ErrorCode::DomainError, "incident_potential: rate must be positive");
  }
  const double eta = probe.radius;
  const double r = (x - probe.center).norm();
  if (r >= eta)
  {
    return LogValue::from_log(1, log_ball_source_strength(rate * eta) - 3.0 * std::log(rate) -
                                     rate * r - std::log(r));
  }
  // (1/rate^2) [1 - (1 + rate eta) exp(-rate eta) sinh(rate r) / (rate r)]
  const double tr = rate * r;
  double sinhc_damped;
  if (tr > 1e-4)
  {
    sinhc_damped = (std::exp(rate * (r - eta)) - std::exp(-rate * (r + eta))) / (2.0 * tr);
  }
  else
  {
    sinhc_damped = std::exp(-rate * eta) * (1.0 + tr * tr / 6.0 + tr * tr * tr * tr / 120.0);
  }
  const double bracket = 1.0 - (1.0 + rate * eta) * sinhc_damped;
  return LogValue::from_double(bracket / (rate * rate));
}

SphereScatterModel::SphereScatterModel(SphereObstacle sphere, double rate)
  : sphere_(std::move(sphere)), rate_(rate)
{
  if (!(rate_ > 0))
  {
    fail(ErrorCode::DomainError, "sphere model: rate must be positive");
  }
  if (!(sphere_.radius > 0))
  {
    fail(ErrorCode::InvalidArgument, "sphere model: radius must be positive");
  }
}

std::vector<LogValue> SphereScatterModel::solve_modes(int max_order) const
{
  const LogBesselTable t = mod_sph_bessel_log_table(max_order, rate_ * sphere_.radius);
  const SurfaceCoefficients &bc = sphere_.surface;
  const double c = bc.damping * rate_ + bc.stiffness;
  std::vector<LogValue> a(max_order + 1);
  for (int n = 0; n <= max_order; ++n)
  {
    const double base = t.log_i[n] - t.log_k[n];
    if (bc.dirichlet)
    {
      a[n] = LogValue::from_log(-1, base);
      continue;
    }
    const double num = rate_ * t.i_ratio[n] - c;
    const double den = rate_ * t.k_ratio[n] - c;
    if (den == 0.0)
    {
      fail(ErrorCode::Singular, "sphere model: resonant mode denominator");
    }
    a[n] = num == 0.0 ? LogValue::zero()
                      : LogValue::from_log(-sign_of(num) * sign_of(den),
                                           base + std::log(std::abs(num)) - std::log(std::abs(den)));
  }
  return a;
}

SphereScatterModel::Response SphereScatterModel::point_response(const Vec3 &source,
                                                                const Vec3 &target,
                                                                bool radial_derivative,
                                                                int fixed_order) const
{
  const Vec3 zs = source - sphere_.center, zt = target - sphere_.center;
  const double rs = zs.norm(), rt = zt.norm();
  if (rs <= sphere_.radius || rt < sphere_.radius * (1.0 - 1e-12))
  {
    fail(ErrorCode::DomainError, "sphere model: point inside the sphere");
  }
  const double c = cos_angle(zs, zt);
  const int start = 64 + static_cast<int>(std::ceil(rate_ * std::max(rs, rt)));
  auto terms_upto = [&](int order)
  {
    const std::vector<LogValue> a = solve_modes(order);
    const LogBesselTable ks = mod_sph_bessel_log_table(order, rate_ * rs);
    const LogBesselTable kt = mod_sph_bessel_log_table(order, rate_ * rt);
    const std::vector<double> p = legendre_table(order, c);
    std::vector<LogValue> out(order + 1);
    for (int n = 0; n <= order; ++n)
    {
      if (p[n] == 0.0 || a[n].is_zero())
      {
        continue;
      }
      double log_abs = std::log(2.0 * n + 1.0) + a[n].log_abs + ks.log_k[n] + kt.log_k[n] +
                       log_abs_legendre(p[n]);
      int sign = a[n].sign * sign_of(p[n]);
      if (radial_derivative)
      {
        const double d = rate_ * kt.k_ratio[n];
        log_abs += std::log(std::abs(d));
        sign *= sign_of(d);
      }
      out[n] = LogValue::from_log(sign, log_abs);
    }
    return out;
  };
  const SeriesSum s = adaptive_sum(start, fixed_order, terms_upto);
  Response r;
  r.terms = s.terms;
  r.cancellation = s.cancellation;
  r.value = s.value.times_exp(std::log(2.0 * rate_ / std::numbers::pi) +
                              rate_ * (2.0 * sphere_.radius - rs - rt));
  return r;
}

namespace
{

void require_outside(const SphereScatterModel &model, const Probe &probe)
{
  if (!(probe.radius > 0))
  {
    fail(ErrorCode::InvalidArgument, "probe radius must be positive");
  }
  const auto &s = model.sphere();
  if ((probe.center - s.center).norm() - s.radius <= probe.radius)
  {
    fail(ErrorCode::DomainError, "probe ball intersects the sphere");
  }
}

void require_precision(const SphereScatterModel::Response &r)
{
  if (!(r.cancellation < kMaxCancellation))
  {
    fail(ErrorCode::PrecisionLoss,
         "mode series cancels beyond double precision (ratio " + std::to_string(r.cancellation) + ")");
  }
}

}  // namespace

LogValue indicator_oracle(const SphereScatterModel &model, const Probe &probe)
{
  require_outside(model, probe);
  const double rate = model.rate();
  const auto r = model.point_response(probe.center, probe.center);
  require_precision(r);
  const double prefactor = std::log(4.0 * std::numbers::pi) +
                           2.0 * log_ball_source_strength(rate * probe.radius) - 6.0 * std::log(rate);
  return r.value.times_exp(prefactor);
}

LogValue bistatic_indicator_oracle(const SphereScatterModel &model, const Probe &emitter,
                                   const Probe &receiver)
{
  require_outside(model, emitter);
  require_outside(model, receiver);
  const bool same = emitter.center == receiver.center && emitter.radius == receiver.radius;
  if (!same && (emitter.center - receiver.center).norm() < emitter.radius + receiver.radius)
  {
    fail(ErrorCode::DomainError, "bistatic indicator: emitter and receiver balls overlap");
  }
  const double rate = model.rate();
  const auto r = model.point_response(emitter.center, receiver.center);
  require_precision(r);
  const double prefactor = std::log(4.0 * std::numbers::pi) +
                           log_ball_source_strength(rate * emitter.radius) +
                           log_ball_source_strength(rate * receiver.radius) - 6.0 * std::log(rate);
  return (-r.value).times_exp(prefactor);
}

double addition_theorem_residual(double rate, const Vec3 &x, const Vec3 &y)
{
  const double rx = x.norm(), ry = y.norm();
  const double inner = std::min(rx, ry), outer = std::max(rx, ry);
  if (!(inner > 0) || inner == outer)
  {
    fail(ErrorCode::InvalidArgument, "addition theorem check needs distinct nonzero radii");
  }
  const double c = cos_angle(x, y);
  auto terms_upto = [&](int order)
  {
    const LogBesselTable ti = mod_sph_bessel_log_table(order, rate * inner);
    const LogBesselTable tk = mod_sph_bessel_log_table(order, rate * outer);
    const std::vector<double> p = legendre_table(order, c);
    std::vector<LogValue> out(order + 1);
    for (int n = 0; n <= order; ++n)
    {
      if (p[n] != 0.0)
      {
        out[n] = LogValue::from_log(sign_of(p[n]), std::log(2.0 * n + 1.0) + ti.log_i[n] +
                                                        tk.log_k[n] + log_abs_legendre(p[n]));
      }
    }
    return out;
  };
  const SeriesSum s = adaptive_sum(64, -1, terms_upto);
  // (2 rate / pi) exp(rate (inner - outer)) * sum  versus  exp(-rate R) / R
  const double dist = (x - y).norm();
  const LogValue series =
      s.value.times_exp(std::log(2.0 * rate / std::numbers::pi) + rate * (inner - outer));
  const LogValue exact = LogValue::from_log(1, -rate * dist - std::log(dist));
  return std::abs((series / exact).to_double() - 1.0);
}

double mean_value_residual(double rate, const Probe &probe, const Vec3 &z)
{
  const double rho = (probe.center - z).norm();
  if (rho <= probe.radius)
  {
    fail(ErrorCode::InvalidArgument, "mean value check needs the pole outside the ball");
  }
  const BallQuadrature q = ball_quadrature_dense(probe.center, probe.radius, 48, 48, 96);
  // Integrand scaled by exp(rate rho) to stay in range.
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
  {
    const double d = (q.nodes[i] - z).norm();
    sum += q.weights[i] * std::exp(-rate * (d - rho)) / d;
  }
  const double exact = 4.0 * std::numbers::pi * ball_source_strength_scaled(rate * probe.radius) *
                       std::exp(rate * probe.radius) / (rate * rate * rate) / rho;
  return std::abs(sum / exact - 1.0);
}

double reciprocity_residual(double rate, const Probe &a, const Probe &b)
{
  const double sep = (a.center - b.center).norm();
  if (sep <= a.radius + b.radius)
  {
    fail(ErrorCode::InvalidArgument, "reciprocity check needs disjoint balls");
  }
  auto integral = [&](const Probe &over, const Probe &source)
  {
    const BallQuadrature q = ball_quadrature_dense(over.center, over.radius, 48, 48, 96);
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
    {
      sum += q.weights[i] * incident_potential(source, q.nodes[i], rate).times_exp(rate * sep).to_double();
    }
    return sum;
  };
  const double ab = integral(a, b), ba = integral(b, a);
  return std::abs(ab / ba - 1.0);
}

double boundary_residual(const SphereScatterModel &model, const Probe &probe,
                         const std::vector<Vec3> &surface_points)
{
  require_outside(model, probe);
  const auto &s = model.sphere();
  const double rate = model.rate();
  const double c = s.surface.damping * rate + s.surface.stiffness;
  double worst = 0.0;
  for (const auto &x : surface_points)
  {
    const Vec3 nu = (x - s.center).normalized();
    const Vec3 d = x - probe.center;
    const double rho = d.norm();
    // Incident point-source field and its normal derivative, common factors dropped.
    const LogValue v = LogValue::from_log(1, -rate * rho - std::log(rho));
    const LogValue dv = v.scaled((-rate - 1.0 / rho) * d.dot(nu) / rho);
    const auto r = model.point_response(probe.center, x);
    const auto dr = model.point_response(probe.center, x, true);
    double res, scale;
    if (s.surface.dirichlet)
    {
      res = std::abs((v + r.value).to_double());
      scale = std::abs(v.to_double()) + std::abs(r.value.to_double());
    }
    else
    {
      const LogValue w = v + r.value, dw = dv + dr.value;
      res = std::abs((dw - w.scaled(c)).to_double());
      scale = std::abs(dv.to_double()) + std::abs(dr.value.to_double()) +
              c * (std::abs(v.to_double()) + std::abs(r.value.to_double()));
    }
    if (scale > 0)
    {
      worst = std::max(worst, res / scale);
    }
  }
  return worst;
}

OracleSelfCheck run_oracle_self_check(unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_direction = [&]
  {
    Vec3 v;
    do
    {
      v = Vec3(unit(rng), unit(rng), unit(rng));
    } while (v.norm() < 0.1 || v.norm() > 1.0);
    return Vec3(v.normalized());
  };
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  OracleSelfCheck out;

  for (int k = 0; k < 20; ++k)
  {
    // Moderate rate * radius keeps the alternating sum well conditioned in double precision.
    const double rate = 0.5 + 1.5 * uniform(rng);
    const double outer = 1.0 + uniform(rng);
    const double inner = outer * (0.2 + 0.4 * uniform(rng));
    out.addition_theorem = std::max(
        out.addition_theorem,
        addition_theorem_residual(rate, inner * random_direction(), outer * random_direction()));
  }
  for (int k = 0; k < 5; ++k)
  {
    const double rate = 0.5 + 4.0 * uniform(rng);
    const Probe b{random_direction() * uniform(rng), 0.2 + 0.3 * uniform(rng)};
    const Vec3 z = b.center + (b.radius * (1.5 + 2.0 * uniform(rng))) * random_direction();
    out.mean_value = std::max(out.mean_value, mean_value_residual(rate, b, z));
    const Probe b2{b.center + (b.radius + 0.4 + uniform(rng)) * random_direction(),
                   0.1 + 0.3 * uniform(rng)};
    out.reciprocity = std::max(out.reciprocity, reciprocity_residual(rate, b, b2));
  }
  const SurfaceCoefficients kinds[] = {{0.0, 0.0, true}, {0.0, 0.0, false}, {0.5, 0.3, false},
                                       {2.0, 0.0, false}};
  for (const auto &bc : kinds)
  {
    for (double rate : {1.0, 3.0, 5.0})
    {
      const SphereScatterModel model(SphereObstacle{Vec3::Zero(), 1.0, bc}, rate);
      const Probe probe{Vec3(2.5, 0.3, -0.2), 0.2};
      std::vector<Vec3> pts;
      for (int k = 0; k < 16; ++k)
      {
        Vec3 d = random_direction();
        // Keep to the illuminated cap, where the fields are not exponentially small.
        if (d.dot(probe.center.normalized()) < 0.3)
        {
          d = (d + 2.0 * probe.center.normalized()).normalized();
        }
        pts.push_back(d);
      }
      out.boundary = std::max(out.boundary, boundary_residual(model, probe, pts));
    }
  }
  for (double x : {0.5, 5.0, 50.0})
  {
    const ScaledBesselTable t = mod_sph_bessel_table(20, x);
    const double expected = -std::numbers::pi / (2.0 * x * x);
    for (int n = 0; n <= 20; ++n)
    {
      const double w = t.i[n] * t.dk[n] - t.di[n] * t.k[n];
      out.wronskian = std::max(out.wronskian, std::abs(w / expected - 1.0));
    }
  }
  return out;
}

}  // namespace tde
