// SPDX-License-Identifier: Apache-2.0
#include "tde/indicator.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "tde/error.hpp"
#include "tde/oracle.hpp"

namespace tde
{

double simpson(std::span<const double> f, double dt)
{
  const std::size_t n = f.size();
  if (n < 5)
  {
    fail(ErrorCode::InvalidArgument, "simpson: need at least 5 time samples, got " +
                                         std::to_string(n));
  }
  const std::size_t intervals = n - 1;
  // Simpson on an even number of leading intervals, 3/8 on the last three if needed.
  const std::size_t even = intervals % 2 == 0 ? intervals : intervals - 3;
  double s = f[0] + f[even];
  for (std::size_t i = 1; i < even; ++i)
  {
    s += (i % 2 ? 4.0 : 2.0) * f[i];
  }
  double total = s * dt / 3.0;
  if (even != intervals)
  {
    total += 3.0 * dt / 8.0 * (f[even] + 3 * f[even + 1] + 3 * f[even + 2] + f[even + 3]);
  }
  return total;
}

LaplaceTransform laplace_transform(const WaveRecord &record, double rate)
{
  if (!(rate > 0))
  {
    fail(ErrorCode::DomainError, "laplace_transform: rate must be positive");
  }
  const Eigen::Index nt = record.values.rows();
  if (nt < 5)
  {
    fail(ErrorCode::InvalidArgument, "laplace_transform: need at least 5 time samples");
  }
  std::vector<double> kernel(nt);
  for (Eigen::Index t = 0; t < nt; ++t)
  {
    kernel[t] = std::exp(-rate * record.dt * t);
  }
  LaplaceTransform out;
  out.values.resize(record.values.cols());
  // The halved-step comparison runs over the longest even-interval prefix.
  const Eigen::Index span = (nt - 1) % 2 == 0 ? nt : nt - 1;
  std::vector<double> f(nt), coarse((span + 1) / 2);
  const bool can_refine = coarse.size() >= 5;
  for (Eigen::Index m = 0; m < record.values.cols(); ++m)
  {
    double scale = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t)
    {
      f[t] = kernel[t] * record.values(t, m);
      scale = std::max(scale, std::abs(f[t]));
    }
    const double fine = simpson(f, record.dt);
    out.values[m] = fine;
    if (can_refine && scale > 0)
    {
      for (std::size_t t = 0; t < coarse.size(); ++t)
      {
        coarse[t] = f[2 * t];
      }
      const double c = simpson(coarse, 2 * record.dt);
      const double fine_span =
          span == nt ? fine : simpson(std::span<const double>(f.data(), span), record.dt);
      const double ref = std::max(std::abs(fine), scale * record.duration() * 1e-12);
      out.refinement_change = std::max(out.refinement_change, std::abs(c - fine_span) / ref);
    }
  }
  return out;
}

double ball_integral(const Eigen::VectorXd &values, const BallQuadrature &q)
{
  if (static_cast<std::size_t>(values.size()) != q.size())
  {
    fail(ErrorCode::InvalidArgument, "ball_integral: value count does not match the nodes");
  }
  const double volume = 4.0 / 3.0 * std::numbers::pi * std::pow(q.radius, 3);
  double wsum = 0.0;
  for (double w : q.weights)
  {
    wsum += w;
  }
  if (std::abs(wsum - volume) > 1e-10 * volume)
  {
    fail(ErrorCode::InvalidArgument, "ball_integral: weights do not sum to the ball volume");
  }
  // Kahan summation; the integrand is already a small difference.
  double s = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
  {
    const double y = q.weights[i] * values[static_cast<Eigen::Index>(i)] - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  return s;
}

std::string to_string(Provenance p)
{
  switch (p)
  {
  case Provenance::Fdtd:
    return "fdtd";
  case Provenance::Oracle:
    return "oracle";
  case Provenance::Synthetic:
    return "synthetic";
  }
  return "unknown";
}

void IndicatorSamples::validate() const
{
  if (taus.size() != values.size())
  {
    fail(ErrorCode::InvalidArgument, "indicator samples: tau and value counts differ");
  }
  for (std::size_t i = 1; i < taus.size(); ++i)
  {
    if (!(taus[i] > taus[i - 1]))
    {
      fail(ErrorCode::InvalidArgument, "indicator samples: taus must ascend strictly");
    }
  }
}

IndicatorSamples IndicatorSamples::window(double lo, double hi) const
{
  IndicatorSamples out = *this;
  out.taus.clear();
  out.values.clear();
  for (std::size_t i = 0; i < taus.size(); ++i)
  {
    if (taus[i] >= lo - 1e-12 && taus[i] <= hi + 1e-12)
    {
      out.taus.push_back(taus[i]);
      out.values.push_back(values[i]);
    }
  }
  return out;
}

namespace
{

IndicatorSamples assemble(const WaveRecord &record, const Probe &emitter,
                          const std::vector<double> &taus, const WaveRecord *free_field,
                          double sign)
{
  if (free_field && (free_field->values.rows() != record.values.rows() ||
                     free_field->values.cols() != record.values.cols()))
  {
    fail(ErrorCode::InvalidArgument, "indicator: free-field record does not match");
  }
  IndicatorSamples out;
  out.provenance = Provenance::Fdtd;
  out.duration = record.duration();
  out.probe = emitter;
  for (double tau : taus)
  {
    auto w = laplace_transform(record, tau);
    out.refinement_change = std::max(out.refinement_change, w.refinement_change);
    if (free_field)
    {
      auto w0 = laplace_transform(*free_field, tau);
      w.values -= w0.values;
    }
    else
    {
      for (std::size_t m = 0; m < record.quadrature.size(); ++m)
      {
        w.values[static_cast<Eigen::Index>(m)] -=
            incident_potential(emitter, record.quadrature.nodes[m], tau).to_double();
      }
    }
    out.taus.push_back(tau);
    out.values.push_back(LogValue::from_double(sign * ball_integral(w.values, record.quadrature)));
  }
  out.validate();
  return out;
}

}  // namespace

IndicatorSamples assemble_monostatic(const WaveRecord &record, const std::vector<double> &taus,
                                     const WaveRecord *free_field)
{
  return assemble(record, record.probe, taus, free_field, 1.0);
}

IndicatorSamples assemble_bistatic(const WaveRecord &record, const Probe &emitter,
                                   const std::vector<double> &taus,
                                   const WaveRecord *free_field)
{
  const double gap = (record.probe.center - emitter.center).norm();
  const bool same = gap == 0.0 && record.probe.radius == emitter.radius;
  if (!same && gap < record.probe.radius + emitter.radius)
  {
    fail(ErrorCode::InvalidArgument, "assemble_bistatic: emitter and receiver balls overlap");
  }
  auto out = assemble(record, emitter, taus, free_field, -1.0);
  out.receiver = record.probe;
  return out;
}

void write_samples_csv(const std::string &path, const IndicatorSamples &s,
                       const std::string &metadata_json)
{
  s.validate();
  nlohmann::json meta = nlohmann::json::parse(metadata_json);
  meta["provenance"] = to_string(s.provenance);
  meta["probe"] = {{"center", {s.probe.center.x(), s.probe.center.y(), s.probe.center.z()}},
                   {"radius", s.probe.radius}};
  if (s.receiver)
  {
    meta["receiver"] = {
        {"center", {s.receiver->center.x(), s.receiver->center.y(), s.receiver->center.z()}},
        {"radius", s.receiver->radius}};
  }
  meta["T"] = std::isfinite(s.duration) ? nlohmann::json(s.duration) : nlohmann::json("inf");
  meta["refinement_change"] = s.refinement_change;
  std::ofstream out(path);
  if (!out)
  {
    fail(ErrorCode::IoError, "cannot write " + path);
  }
  out << "# " << meta.dump() << "\n";
  out << "tau,sign,log_abs_I\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i)
  {
    out << s.taus[i] << "," << s.values[i].sign << ",";
    if (s.values[i].is_zero())
    {
      out << "-inf";
    }
    else
    {
      out << s.values[i].log_abs;
    }
    out << "\n";
  }
  if (!out)
  {
    fail(ErrorCode::IoError, "write failed for " + path);
  }
}

IndicatorSamples read_samples_csv(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    fail(ErrorCode::IoError, "cannot open " + path);
  }
  IndicatorSamples s;
  std::string line;
  auto vec = [](const nlohmann::json &j) { return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()); };
  while (std::getline(in, line))
  {
    if (line.empty())
    {
      continue;
    }
    if (line[0] == '#')
    {
      const auto meta = nlohmann::json::parse(line.substr(1));
      const std::string prov = meta.value("provenance", "synthetic");
      s.provenance = prov == "fdtd" ? Provenance::Fdtd
                     : prov == "oracle" ? Provenance::Oracle
                                        : Provenance::Synthetic;
      if (meta.contains("probe"))
      {
        s.probe.center = vec(meta["probe"]["center"]);
        s.probe.radius = meta["probe"]["radius"].get<double>();
      }
      if (meta.contains("receiver"))
      {
        s.receiver = Probe{vec(meta["receiver"]["center"]), meta["receiver"]["radius"].get<double>()};
      }
      if (meta.contains("T") && meta["T"].is_number())
      {
        s.duration = meta["T"].get<double>();
      }
      s.refinement_change = meta.value("refinement_change", 0.0);
      continue;
    }
    if (line.rfind("tau", 0) == 0)
    {
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    const int sign = std::stoi(b);
    s.taus.push_back(std::stod(a));
    s.values.push_back(sign == 0 ? LogValue::zero() : LogValue::from_log(sign, std::stod(c)));
  }
  s.validate();
  return s;
}

std::vector<double> tau_grid(double lo, double hi, double step)
{
  if (!(lo > 0) || !(hi >= lo) || !(step > 0))
  {
    fail(ErrorCode::InvalidArgument, "tau_grid: need 0 < lo <= hi and step > 0");
  }
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i)
  {
    out.push_back(lo + i * step);
  }
  return out;
}

}  // namespace tde
