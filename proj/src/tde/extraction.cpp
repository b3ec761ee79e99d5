// SPDX-License-Identifier: Apache-2.0
#include "tde/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tde/error.hpp"

namespace tde
{

namespace
{

constexpr double kPi = std::numbers::pi;

// Index after the last sign change; samples from there on share the final sign.
std::size_t consistent_tail(const IndicatorSamples &s)
{
  const int last = s.values.back().sign;
  std::size_t first = s.size() - 1;
  while (first > 0 && s.values[first - 1].sign == last)
  {
    --first;
  }
  return first;
}

void require_nonzero(const IndicatorSamples &s)
{
  for (std::size_t i = 0; i < s.size(); ++i)
  {
    if (s.values[i].is_zero() || !std::isfinite(s.values[i].log_abs))
    {
      fail(ErrorCode::DomainError, "indicator sample at tau=" + std::to_string(s.taus[i]) +
                                       " is zero or not finite (underflow)");
    }
  }
}

std::vector<BasisFunction> rate_basis(DistanceModel m)
{
  std::vector<BasisFunction> b{[](double) { return 1.0; }, [](double t) { return t; }};
  if (m == DistanceModel::Normalized)
  {
    b.push_back([](double t) { return 1.0 / t; });
    b.push_back([](double t) { return 1.0 / (t * t); });
  }
  else if (m == DistanceModel::PowerLaw)
  {
    b.push_back([](double t) { return std::log(t); });
  }
  return b;
}

double probe_radii(const IndicatorSamples &s)
{
  return s.probe.radius + (s.receiver ? s.receiver->radius : s.probe.radius);
}

}  // namespace

std::string to_string(SignClass s)
{
  switch (s)
  {
  case SignClass::Positive:
    return "positive";
  case SignClass::Negative:
    return "negative";
  case SignClass::Mixed:
    return "mixed";
  }
  return "mixed";
}

std::string to_string(DistanceModel m)
{
  switch (m)
  {
  case DistanceModel::Normalized:
    return "normalized";
  case DistanceModel::PowerLaw:
    return "power-law";
  case DistanceModel::Linear:
    return "linear";
  }
  return "normalized";
}

std::string to_string(SurfaceClass c)
{
  switch (c)
  {
  case SurfaceClass::GammaBelowOne:
    return "gamma_below_1";
  case SurfaceClass::GammaAboveOne:
    return "gamma_above_1";
  case SurfaceClass::Inconclusive:
    return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Membership m)
{
  return m == Membership::OnBoundary ? "on_boundary" : "off_boundary";
}

std::string to_string(AFitMethod m)
{
  return m == AFitMethod::Normalized ? "normalized" : "literal";
}

DistanceFit extract_distance(const IndicatorSamples &samples, DistanceModel model)
{
  samples.validate();
  const std::size_t n = samples.size();
  if (n < 6)
  {
    fail(ErrorCode::InvalidArgument,
         "extract_distance: need at least 6 samples, got " + std::to_string(n));
  }
  require_nonzero(samples);
  const std::size_t earliest = consistent_tail(samples);
  if (n - earliest < (n + 1) / 2)
  {
    fail(ErrorCode::MixedSign, "extract_distance: indicator changes sign at tau=" +
                                   std::to_string(samples.taus[earliest]) +
                                   " inside the fit window");
  }

  std::vector<double> y(n);
  if (model == DistanceModel::Normalized)
  {
    const auto g = normalize(samples);
    for (std::size_t i = 0; i < n; ++i)
    {
      y[i] = g.green[i].log_abs;
    }
  }
  else
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      y[i] = samples.values[i].log_abs;
    }
  }
  const auto basis = rate_basis(model);
  // Recorded data only reach moderate tau and carry a smooth discretization error; a short
  // trailing window would amplify it, so those fits use every sample of consistent sign.
  const LinearFit fit = samples.provenance == Provenance::Fdtd
                            ? least_squares(samples.taus, y, basis, earliest, n - 1)
                            : trailing_window_fit(samples.taus, y, basis, earliest);
  const double slope = fit.coefficients[1];

  DistanceFit out;
  out.model = model;
  out.bistatic = samples.bistatic();
  const double radii = probe_radii(samples);
  if (model == DistanceModel::Normalized)
  {
    out.center_length = -slope;
    out.distance = out.bistatic ? out.center_length - radii : 0.5 * (out.center_length - radii);
  }
  else
  {
    out.distance = out.bistatic ? -slope : -0.5 * slope;
    out.center_length = out.bistatic ? out.distance + radii : 2.0 * out.distance + radii;
  }
  out.tau_lo = samples.taus[fit.first];
  out.tau_hi = samples.taus[fit.last];
  out.points = fit.points();
  out.residual = fit.residual;
  out.sign = samples.values.back().sign > 0 ? SignClass::Positive : SignClass::Negative;
  for (std::size_t i = 0; i < n; ++i)
  {
    out.slope_sequence.push_back(samples.values[i].log_abs / samples.taus[i]);
  }
  return out;
}

Classification classify_surface(const IndicatorSamples &samples)
{
  samples.validate();
  Classification c;
  const std::size_t n = samples.size();
  if (n < 3)
  {
    c.reason = "fewer than 3 samples";
    return c;
  }
  const std::size_t window = std::max<std::size_t>(3, (n + 1) / 2);
  const std::size_t first = n - window;
  c.points = window;
  const int sign = samples.values.back().sign;
  for (std::size_t i = first; i < n; ++i)
  {
    if (samples.values[i].sign != sign || sign == 0)
    {
      c.reason = "sign changes within the trailing samples";
      return c;
    }
  }
  if (window >= 8)
  {
    // The leading term of the asymptotics carries (1 - damping); when it cancels, the
    // normalized samples pick up an extra 1/tau, visible as a log-tau coefficient near -1.
    const auto g = normalize(samples);
    std::vector<double> y;
    for (const auto &v : g.green)
    {
      y.push_back(v.log_abs);
    }
    const std::vector<BasisFunction> basis{[](double) { return 1.0; }, [](double t) { return t; },
                                           [](double t) { return std::log(t); },
                                           [](double t) { return 1.0 / t; }};
    const auto fit = least_squares(samples.taus, y, basis, first, n - 1);
    if (fit.coefficients[2] < -0.5)
    {
      c.reason = "leading asymptotic term absent (log-tau coefficient " +
                 std::to_string(fit.coefficients[2]) + ")";
      return c;
    }
  }
  c.surface = sign > 0 ? SurfaceClass::GammaBelowOne : SurfaceClass::GammaAboveOne;
  c.reason = sign > 0 ? "indicator positive for large tau" : "indicator negative for large tau";
  return c;
}

MembershipTest probe_direction(ForwardModel &forward, const Probe &probe, double d_p,
                               const Vec3 &omega, double s, const std::vector<double> &taus,
                               double tolerance)
{
  if (!(s > 0 && s < d_p))
  {
    fail(ErrorCode::InvalidArgument, "probe_direction: need 0 < s < d_p");
  }
  if (s + probe.radius >= d_p)
  {
    fail(ErrorCode::InvalidArgument,
         "probe_direction: moved ball must lie inside the enclosing ball of radius d_p");
  }
  const Vec3 dir = omega.normalized();
  const Probe moved{probe.center + s * dir, probe.radius};
  MembershipTest out;
  out.fit = extract_distance(forward.monostatic(moved, taus));
  out.measured = out.fit.surface_distance();
  const double tol = tolerance < 0 ? 0.02 * d_p : tolerance;
  out.threshold = d_p - s + tol;
  out.decision = out.measured <= out.threshold ? Membership::OnBoundary : Membership::OffBoundary;
  return out;
}

AFit extract_A(const IndicatorSamples &samples, double dist, AFitMethod method)
{
  samples.validate();
  if (samples.bistatic())
  {
    fail(ErrorCode::InvalidArgument, "extract_A: monostatic samples required");
  }
  require_nonzero(samples);
  const std::size_t n = samples.size();
  if (n < 4)
  {
    fail(ErrorCode::InvalidArgument, "extract_A: need at least 4 samples");
  }
  const double eta = samples.probe.radius;
  const double d = dist + eta;
  AFit out;
  out.method = method;
  out.eta = eta;
  out.surface_distance = d;
  out.tau_lo = samples.taus.front();
  out.tau_hi = samples.taus.back();
  std::vector<double> y(n);
  if (method == AFitMethod::Normalized)
  {
    const auto g = normalize(samples);
    for (std::size_t i = 0; i < n; ++i)
    {
      y[i] = g.green[i].times_exp(2.0 * samples.taus[i] * d).to_double();
    }
    const auto fit = least_squares(samples.taus, y, polynomial_in_inverse(3), 0, n - 1);
    const double g0 = fit.coefficients[0], g1 = fit.coefficients[1];
    out.A = 2.0 * d * d * g0;
    out.c4 = kPi * eta * eta * g0;
    out.c5 = kPi * eta * eta * g1 - 2.0 * kPi * eta * g0;
    out.residual = fit.residual / std::abs(g0);
  }
  else
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      y[i] = samples.values[i].times_exp(2.0 * samples.taus[i] * dist).to_double();
    }
    const auto fit = least_squares(samples.taus, y, inverse_powers(4, 2), 0, n - 1);
    out.c4 = fit.coefficients[0];
    out.c5 = fit.coefficients[1];
    out.A = 2.0 / kPi * (d / eta) * (d / eta) * out.c4;
    const double scale = std::abs(out.c4) * std::pow(samples.taus.back(), -4);
    out.residual = fit.residual / scale;
  }
  out.negative = out.c4 < 0;
  return out;
}

CurvaturePair curvature_system(double lambda1, double lambda2, double Q1, double Q2)
{
  const double gap = lambda1 - lambda2;
  if (!(std::abs(gap) > 1e-14 * std::max(std::abs(lambda1), std::abs(lambda2))))
  {
    fail(ErrorCode::Singular, "curvature_system: lambda1 equals lambda2");
  }
  const double r1 = Q1 - lambda1 * lambda1;
  const double r2 = Q2 - lambda2 * lambda2;
  CurvaturePair out;
  out.H = (r2 - r1) / (2.0 * gap);
  out.K = r1 + 2.0 * lambda1 * out.H;
  Mat2 m;
  m << -2.0 * lambda1, 1.0, -2.0 * lambda2, 1.0;
  const Eigen::JacobiSVD<Mat2> svd(m);
  out.condition = svd.singularValues()[0] / svd.singularValues()[1];
  return out;
}

CurvatureReport extract_curvatures(ForwardModel &forward, const Vec3 &q, const Vec3 &normal,
                                   double d, double eta, double s1, double s2,
                                   const std::vector<double> &taus)
{
  if (!(s1 > 0 && s1 < s2 && s2 < d))
  {
    fail(ErrorCode::InvalidArgument, "extract_curvatures: need 0 < s1 < s2 < d");
  }
  if (d - s2 <= eta)
  {
    fail(ErrorCode::InvalidArgument, "extract_curvatures: closer probe would touch the surface");
  }
  CurvatureReport report;
  report.q = q;
  report.normal = normal.normalized();
  report.d = d;
  report.offsets = {s1, s2};
  for (const double s : report.offsets)
  {
    const Probe probe{q + (d - s) * report.normal, eta};
    if (const Scene *scene = forward.scene())
    {
      const auto lam = first_reflector(*scene, probe.center);
      if (!lam.finite || lam.points.size() != 1 || (lam.points.front() - q).norm() > 1e-6 * d)
      {
        fail(ErrorCode::NonFiniteReflector,
             "extract_curvatures: q is not the only first reflector of the moved probe");
      }
    }
    const auto samples = forward.monostatic(probe, taus);
    const auto dfit = extract_distance(samples);
    const auto afit = extract_A(samples, dfit.distance);
    if (afit.negative)
    {
      report.warnings.push_back("negative leading constant at offset " + std::to_string(s));
    }
    report.distance_fits.push_back(dfit);
    report.a_fits.push_back(afit);
    report.lambdas.push_back(1.0 / (d - s));
    report.Q.push_back(1.0 / (afit.A * afit.A));
  }
  const auto hk = curvature_system(report.lambdas[0], report.lambdas[1], report.Q[0], report.Q[1]);
  report.H = hk.H;
  report.K = hk.K;
  report.condition = hk.condition;
  if (hk.condition > 100.0)
  {
    report.warnings.push_back("curvature system poorly conditioned (condition number " +
                              std::to_string(hk.condition) +
                              "): probes are far from the surface relative to their spacing");
  }
  if (report.H * report.H < report.K * (1.0 - 1e-2))
  {
    report.warnings.push_back("recovered H^2 < K: principal curvatures not real within fit error");
  }
  return report;
}

SphereCount count_spheres(const IndicatorSamples &samples, double dist, double epsilon)
{
  if (!(epsilon > 0))
  {
    fail(ErrorCode::InvalidArgument, "count_spheres: radius must be positive");
  }
  SphereCount out;
  out.a_fit = extract_A(samples, dist);
  const double d = dist + samples.probe.radius;
  const double eta = samples.probe.radius;
  out.raw = (1.0 / d + 1.0 / epsilon) * (2.0 / kPi) * (d / eta) * (d / eta) * out.a_fit.c4;
  out.count = static_cast<int>(std::lround(out.raw));
  out.residual = std::abs(out.raw - out.count);
  out.ambiguous = out.residual > 0.3 || out.count < 1;
  return out;
}

double evaluate_C_geometric(const HJet &jet, double d, double H)
{
  const Mat2 m = Mat2::Identity() / d - jet.hessian;
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-14 / (d * d)))
  {
    fail(ErrorCode::Singular, "evaluate_C_geometric: (1/d) I - hessian is singular");
  }
  const Mat2 b = -m.inverse();
  double cubic = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int qq = 0; qq < 2; ++qq)
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
          for (int t = 0; t < 2; ++t)
            for (int u = 0; u < 2; ++u)
            {
              cubic += jet.h3(p, qq, r) * jet.h3(s, t, u) *
                       (0.25 * b(p, s) * b(qq, r) * b(t, u) + b(p, s) * b(qq, t) * b(r, u) / 6.0);
            }
  double quartic = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int qq = 0; qq < 2; ++qq)
      for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
        {
          quartic += jet.h4(p, qq, r, s) * b(p, r) * b(qq, s);
        }
  const double d2 = d * d;
  return -1.0 / (d2 * d) + (11.0 - 12.0 * d * H) / (8.0 * d2 * d2 * d * det) -
         cubic / (4.0 * d2) + quartic / (16.0 * d2);
}

BetaEstimate extract_beta(const AFit &fit, const HJet &jet)
{
  const double d = fit.surface_distance;
  const double eta = fit.eta;
  BetaEstimate out;
  // c5 = -(pi eta / d^2) A + (pi / 2) eta^2 B
  out.B = (fit.c5 + kPi * eta / (d * d) * fit.A) * 2.0 / (kPi * eta * eta);
  out.determinant = (Mat2::Identity() / d - jet.hessian).determinant();
  if (!(out.determinant > 0))
  {
    fail(ErrorCode::Singular, "extract_beta: reflector determinant is not positive");
  }
  out.C = out.B * std::sqrt(out.determinant);
  const double H = 0.5 * jet.hessian.trace();
  out.C_geometric = evaluate_C_geometric(jet, d, H);
  out.beta = d * d * (out.C_geometric - out.C);
  return out;
}

BistaticDistance bistatic_distance(const IndicatorSamples &samples, DistanceModel model)
{
  if (!samples.bistatic())
  {
    fail(ErrorCode::InvalidArgument, "bistatic_distance: bistatic samples required");
  }
  BistaticDistance out;
  out.fit = extract_distance(samples, model);
  out.min_path = out.fit.center_length;
  return out;
}

MembershipTest spheroid_membership(ForwardModel &forward, const Probe &emitter,
                                   const Probe &receiver, double c, const Vec3 &omega, double s,
                                   const std::vector<double> &taus, double tolerance)
{
  if (!(s > 0 && s < receiver.radius))
  {
    fail(ErrorCode::InvalidArgument, "spheroid_membership: need 0 < s < receiver radius");
  }
  if (s < 0.05 * receiver.radius)
  {
    fail(ErrorCode::InvalidArgument,
         "spheroid_membership: offset too small to separate from the fit tolerance");
  }
  if (!(c > (emitter.center - receiver.center).norm()))
  {
    fail(ErrorCode::InvalidArgument, "spheroid_membership: level must exceed the focal distance");
  }
  const Probe sub{receiver.center + s * omega.normalized(), receiver.radius - s};
  MembershipTest out;
  const auto bd = bistatic_distance(forward.bistatic(emitter, sub, taus));
  out.fit = bd.fit;
  out.measured = bd.min_path;
  const double tol = tolerance < 0 ? 0.02 * s : tolerance;
  out.threshold = c - s + tol;
  out.decision = out.measured <= out.threshold ? Membership::OnBoundary : Membership::OffBoundary;
  return out;
}

BistaticDeterminant bistatic_determinant(const IndicatorSamples &samples, double min_path,
                                         double r, double r2)
{
  if (!samples.bistatic())
  {
    fail(ErrorCode::InvalidArgument, "bistatic_determinant: bistatic samples required");
  }
  require_nonzero(samples);
  const auto g = normalize(samples);
  std::vector<double> y;
  for (std::size_t i = 0; i < samples.size(); ++i)
  {
    y.push_back(g.green[i].times_exp(samples.taus[i] * min_path).to_double());
  }
  const auto fit =
      least_squares(samples.taus, y, polynomial_in_inverse(3), 0, samples.size() - 1);
  BistaticDeterminant out;
  out.g0 = fit.coefficients[0];
  out.residual = fit.residual / std::abs(out.g0);
  // Leading constant (pi/2)(eta/r)(eta'/r2)/sqrt(det) equals pi eta eta' |g0|.
  const double root = 1.0 / (2.0 * r * r2 * std::abs(out.g0));
  out.determinant = root * root;
  return out;
}

RotationSweep rotation_sweep(ForwardModel &forward, const RotationSweepInput &in,
                             const std::vector<double> &taus)
{
  if (in.angles < 6)
  {
    fail(ErrorCode::InvalidArgument, "rotation_sweep: need at least 6 angles");
  }
  const double psi = in.half_angle;
  if (!(psi > 0.05 && psi < 0.5 * kPi - 0.05))
  {
    fail(ErrorCode::InvalidArgument,
         "rotation_sweep: probe directions are parallel or antipodal (A_q(p) x A_q(p') ~ 0)");
  }
  if (!(in.sub_offset > 0 && in.sub_offset < in.eta2))
  {
    fail(ErrorCode::InvalidArgument, "rotation_sweep: need 0 < sub_offset < eta'");
  }
  const Vec3 nu = in.normal.normalized();
  const Vec3 e1 = (in.reference - in.reference.dot(nu) * nu).normalized();
  const Vec3 e2 = nu.cross(e1);
  const double r = in.distance;
  const double r_inner = r - in.sub_offset;
  const double cos2 = std::cos(psi) * std::cos(psi);
  const double sin2 = 1.0 - cos2;
  // Spheroid curvature across the plane of incidence; the in-plane one is cos^2 psi times it.
  const double m_outer = (1.0 / r + 1.0 / r) / (2.0 * std::cos(psi));
  const double m_inner = (1.0 / r + 1.0 / r_inner) / (2.0 * std::cos(psi));

  RotationSweep out;
  out.cos_between = std::cos(2.0 * psi);
  std::vector<Vec3> vdirs;
  for (int k = 0; k < in.angles; ++k)
  {
    const double theta = 2.0 * kPi * k / in.angles;
    const Vec3 u = std::cos(theta) * e1 + std::sin(theta) * e2;
    const Vec3 p = in.q + r * (std::cos(psi) * nu + std::sin(psi) * u);
    const Vec3 p2 = in.q + r * (std::cos(psi) * nu - std::sin(psi) * u);
    const Vec3 toward = (in.q - p2).normalized();
    const Probe emitter{p, in.eta};
    const Probe outer{p2, in.eta2};
    const Probe inner{p2 + in.sub_offset * toward, in.eta2 - in.sub_offset};
    const auto data = forward.bistatic(emitter, std::vector<Probe>{outer, inner}, taus);
    const auto fo = bistatic_distance(data[0]);
    const auto fi = bistatic_distance(data[1]);
    const double det_o = bistatic_determinant(data[0], fo.min_path, r, r).determinant;
    const double det_i = bistatic_determinant(data[1], fi.min_path, r, r_inner).determinant;
    // det(M - S) = cos^2(psi) m^2 - 2 m H~ + K, solved in the form of the monostatic system.
    const auto hk = curvature_system(m_outer, m_inner,
                                     det_o - cos2 * m_outer * m_outer + m_outer * m_outer,
                                     det_i - cos2 * m_inner * m_inner + m_inner * m_inner);
    const Vec3 a = (in.q - p).normalized();
    vdirs.push_back(a.cross(toward).normalized());
    out.thetas.push_back(theta);
    out.det_outer.push_back(det_o);
    out.det_inner.push_back(det_i);
    out.h_tilde_raw.push_back(hk.H);
    out.k_raw.push_back(hk.K);
  }
  // K does not depend on the rotation, so pool it and use the better-conditioned outer
  // equation alone for the angular profile.
  double ksum = 0.0;
  for (double k : out.k_raw)
  {
    ksum += k;
  }
  out.K = ksum / in.angles;
  for (std::size_t k = 0; k < out.thetas.size(); ++k)
  {
    out.h_tilde.push_back((cos2 * m_outer * m_outer + out.K - out.det_outer[k]) / (2.0 * m_outer));
  }

  // 2-theta harmonic of the profile.
  Eigen::MatrixXd m(in.angles, 3);
  Eigen::VectorXd y(in.angles);
  for (int k = 0; k < in.angles; ++k)
  {
    m(k, 0) = 1.0;
    m(k, 1) = std::cos(2.0 * out.thetas[k]);
    m(k, 2) = std::sin(2.0 * out.thetas[k]);
    y[k] = out.h_tilde[k];
  }
  const Eigen::Vector3d coef = m.colPivHouseholderQr().solve(y);
  out.amplitude = std::hypot(coef[1], coef[2]);
  out.noise = std::sqrt((m * coef - y).squaredNorm() / std::max(1, in.angles - 3));
  out.umbilic = out.amplitude <= std::max(out.noise, 0.02 * std::abs(coef[0]));
  // The fitted harmonic's mean is the mean of its extrema.
  out.H = coef[0] / (1.0 - 0.5 * sin2);
  if (out.umbilic)
  {
    out.theta1 = out.theta2 = 0.0;
    out.direction1 = out.direction2 = vdirs.front();
    return out;
  }
  // Extrema of the fitted profile rather than of the raw samples: one sample per angle is
  // too noisy for a local parabola.
  out.theta1 = 0.5 * std::atan2(coef[2], coef[1]);
  if (out.theta1 < 0.0)
  {
    out.theta1 += kPi;
  }
  out.theta2 = out.theta1 + 0.5 * kPi;
  // Larger H~ means smaller S(V).V, the first (more negative) principal curvature.
  auto direction = [&](double theta)
  {
    const Vec3 u = std::cos(theta) * e1 + std::sin(theta) * e2;
    return Vec3(nu.cross(u).normalized());
  };
  out.direction1 = direction(out.theta1);
  out.direction2 = direction(out.theta2);
  return out;
}

}  // namespace tde
