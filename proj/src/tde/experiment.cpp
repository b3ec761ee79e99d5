// SPDX-License-Identifier: Apache-2.0
#include "tde/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Geometry>

#include "tde/error.hpp"
#include "tde/oracle.hpp"

namespace tde
{

using nlohmann::json;

namespace
{

constexpr double kDeg = std::numbers::pi / 180.0;

struct KindName
{
  ExperimentKind kind;
  const char *name;
};
constexpr KindName kKinds[] = {
    {ExperimentKind::Distance, "distance"},
    {ExperimentKind::Classify, "classify"},
    {ExperimentKind::ProbeDirection, "probe-direction"},
    {ExperimentKind::Curvature, "curvature"},
    {ExperimentKind::Count, "count"},
    {ExperimentKind::Beta, "beta"},
    {ExperimentKind::BistaticDistance, "bistatic-distance"},
    {ExperimentKind::SpheroidProbe, "spheroid-probe"},
    {ExperimentKind::RotationSweep, "rotation-sweep"},
    {ExperimentKind::OracleValidate, "oracle-validate"},
};

[[noreturn]] void config_error(const std::string &path, const std::string &message)
{
  fail(ErrorCode::ConfigError, "config field " + path + ": " + message);
}

// Typed access to one JSON object with the pointer prefix kept for error messages.
class Section
{
public:
  Section(const json &j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
    {
      config_error(path_.empty() ? "/" : path_, "expected an object");
    }
  }

  bool has(const char *key) const { return j_.contains(key); }
  std::string at(const char *key) const { return path_ + "/" + key; }

  double number(const char *key) const
  {
    if (!has(key))
    {
      config_error(at(key), "required");
    }
    const json &v = j_.at(key);
    if (!v.is_number())
    {
      config_error(at(key), "expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x))
    {
      config_error(at(key), "must be finite");
    }
    return x;
  }
  double number(const char *key, double fallback) const { return has(key) ? number(key) : fallback; }
  double positive(const char *key) const
  {
    const double x = number(key);
    if (!(x > 0))
    {
      config_error(at(key), "must be positive, got " + std::to_string(x));
    }
    return x;
  }
  double positive(const char *key, double fallback) const
  {
    return has(key) ? positive(key) : fallback;
  }
  int integer(const char *key, int fallback) const
  {
    if (!has(key))
    {
      return fallback;
    }
    if (!j_.at(key).is_number_integer())
    {
      config_error(at(key), "expected an integer");
    }
    return j_.at(key).get<int>();
  }
  bool boolean(const char *key, bool fallback) const
  {
    if (!has(key))
    {
      return fallback;
    }
    if (!j_.at(key).is_boolean())
    {
      config_error(at(key), "expected true or false");
    }
    return j_.at(key).get<bool>();
  }
  std::string string(const char *key, const std::string &fallback = {}) const
  {
    if (!has(key))
    {
      if (fallback.empty())
      {
        config_error(at(key), "required");
      }
      return fallback;
    }
    if (!j_.at(key).is_string())
    {
      config_error(at(key), "expected a string");
    }
    return j_.at(key).get<std::string>();
  }
  Vec3 vec3(const char *key) const
  {
    if (!has(key))
    {
      config_error(at(key), "required");
    }
    const json &v = j_.at(key);
    if (!v.is_array() || v.size() != 3)
    {
      config_error(at(key), "expected an array of 3 numbers");
    }
    Vec3 out;
    for (int i = 0; i < 3; ++i)
    {
      if (!v[i].is_number())
      {
        config_error(at(key) + "/" + std::to_string(i), "expected a number");
      }
      out[i] = v[i].get<double>();
    }
    return out;
  }
  std::optional<Vec3> optional_vec3(const char *key) const
  {
    return has(key) ? std::optional<Vec3>(vec3(key)) : std::nullopt;
  }
  Vec3 direction(const char *key) const
  {
    const Vec3 v = vec3(key);
    if (!(v.norm() > 1e-12))
    {
      config_error(at(key), "direction must be nonzero");
    }
    return v.normalized();
  }
  Section child(const char *key) const
  {
    if (!has(key))
    {
      config_error(at(key), "required");
    }
    return Section(j_.at(key), at(key));
  }
  const json &raw(const char *key) const { return j_.at(key); }
  const std::string &path() const { return path_; }

  // Rejects keys outside the allowed list, so typos do not pass silently.
  void only(std::initializer_list<const char *> keys) const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it)
    {
      if (std::none_of(keys.begin(), keys.end(), [&](const char *k) { return it.key() == k; }))
      {
        config_error(path_ + "/" + it.key(), "unknown field");
      }
    }
  }

private:
  const json &j_;
  std::string path_;
};

SurfaceCoefficients parse_surface(const Section &s)
{
  SurfaceCoefficients c;
  const std::string boundary = s.string("boundary", "impedance");
  if (boundary == "dirichlet")
  {
    c.dirichlet = true;
    if (s.has("damping") || s.has("stiffness"))
    {
      config_error(s.at("boundary"), "dirichlet surfaces take no damping or stiffness");
    }
  }
  else if (boundary == "impedance")
  {
    c.damping = s.number("damping", 0.0);
    c.stiffness = s.number("stiffness", 0.0);
    if (c.damping < 0)
    {
      config_error(s.at("damping"), "must be nonnegative");
    }
  }
  else
  {
    config_error(s.at("boundary"), "expected \"dirichlet\" or \"impedance\"");
  }
  return c;
}

Scene parse_scene(const Section &s)
{
  s.only({"obstacles"});
  if (!s.has("obstacles") || !s.raw("obstacles").is_array() || s.raw("obstacles").empty())
  {
    config_error(s.at("obstacles"), "expected a nonempty array");
  }
  Scene scene;
  const json &list = s.raw("obstacles");
  for (std::size_t i = 0; i < list.size(); ++i)
  {
    const Section o(list[i], s.at("obstacles") + "/" + std::to_string(i));
    const std::string type = o.string("type");
    const SurfaceCoefficients surface = parse_surface(o);
    if (type == "sphere")
    {
      o.only({"type", "center", "radius", "boundary", "damping", "stiffness"});
      scene.spheres.push_back({o.vec3("center"), o.positive("radius"), surface});
      continue;
    }
    if (scene.implicit)
    {
      config_error(o.at("type"), "at most one non-spherical obstacle is supported");
    }
    if (type == "ellipsoid")
    {
      o.only({"type", "center", "semi_axes", "rotation_axis", "rotation_deg", "boundary",
              "damping", "stiffness"});
      const Vec3 axes = o.vec3("semi_axes");
      if (!(axes.minCoeff() > 0))
      {
        config_error(o.at("semi_axes"), "must be positive");
      }
      Mat3 rot = Mat3::Identity();
      if (o.has("rotation_deg"))
      {
        const Vec3 axis = o.has("rotation_axis") ? o.direction("rotation_axis") : Vec3::UnitZ();
        rot = Eigen::AngleAxisd(o.number("rotation_deg") * kDeg, axis).toRotationMatrix();
      }
      scene.implicit = ImplicitObstacle::ellipsoid(o.vec3("center"), axes, rot, surface);
    }
    else if (type == "half_space")
    {
      o.only({"type", "point", "normal", "boundary", "damping", "stiffness"});
      scene.implicit = ImplicitObstacle::half_space(o.vec3("point"), o.direction("normal"), surface);
    }
    else
    {
      config_error(o.at("type"), "expected sphere, ellipsoid or half_space");
    }
  }
  try
  {
    scene.validate();
  }
  catch (const Error &e)
  {
    config_error(s.at("obstacles"), e.what());
  }
  return scene;
}

Probe parse_probe(const Section &s)
{
  s.only({"center", "radius"});
  return Probe{s.vec3("center"), s.positive("radius")};
}

void require_keys(const Section &p, std::initializer_list<const char *> keys)
{
  for (const char *k : keys)
  {
    if (!p.has(k))
    {
      config_error(p.at(k), "required for this kind");
    }
  }
}

void check_params(ExperimentConfig &c, const Section &p)
{
  switch (c.kind)
  {
  case ExperimentKind::Distance:
  case ExperimentKind::Classify:
  case ExperimentKind::OracleValidate:
    p.only({});
    break;
  case ExperimentKind::ProbeDirection:
    p.only({"omega", "s", "d_p", "theta_deg", "tolerance"});
    p.direction("omega");
    p.positive("s");
    p.positive("d_p", 1.0);
    p.number("theta_deg", 0.0);
    p.number("tolerance", -1.0);
    break;
  case ExperimentKind::Curvature:
    p.only({"s1", "s2", "q", "normal", "d"});
    if (!(p.positive("s1") < p.positive("s2")))
    {
      config_error(p.at("s2"), "must exceed s1");
    }
    p.optional_vec3("q");
    if (p.has("normal"))
    {
      p.direction("normal");
    }
    p.positive("d", 1.0);
    break;
  case ExperimentKind::Count:
    p.only({"epsilon"});
    p.positive("epsilon");
    break;
  case ExperimentKind::Beta:
    p.only({"q"});
    p.optional_vec3("q");
    break;
  case ExperimentKind::BistaticDistance:
    p.only({"determinant"});
    p.boolean("determinant", false);
    break;
  case ExperimentKind::SpheroidProbe:
    p.only({"omega", "s", "c", "theta_deg", "tolerance"});
    p.direction("omega");
    if (!(p.positive("s") < c.receiver->radius))
    {
      config_error(p.at("s"), "must be smaller than the receiver radius");
    }
    p.positive("c", 1.0);
    p.number("theta_deg", 0.0);
    p.number("tolerance", -1.0);
    break;
  case ExperimentKind::RotationSweep:
  {
    p.only({"q", "normal", "reference", "distance", "half_angle_deg", "eta", "eta2", "sub_offset",
            "angles"});
    require_keys(p, {"q", "normal", "distance"});
    p.vec3("q");
    p.direction("normal");
    if (p.has("reference"))
    {
      p.direction("reference");
    }
    p.positive("distance");
    const double psi = p.positive("half_angle_deg", 45.0);
    if (!(psi > 3 && psi < 87))
    {
      config_error(p.at("half_angle_deg"), "must lie in (3, 87) degrees");
    }
    const double eta2 = p.positive("eta2", 0.25);
    p.positive("eta", 0.25);
    if (!(p.positive("sub_offset", 0.4 * eta2) < eta2))
    {
      config_error(p.at("sub_offset"), "must be smaller than eta2");
    }
    if (p.integer("angles", 12) < 6)
    {
      config_error(p.at("angles"), "need at least 6");
    }
    break;
  }
  }
}

bool needs_probe(ExperimentKind k)
{
  return k != ExperimentKind::RotationSweep && k != ExperimentKind::OracleValidate;
}

bool needs_receiver(ExperimentKind k)
{
  return k == ExperimentKind::BistaticDistance || k == ExperimentKind::SpheroidProbe;
}

json vec(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

// Direction rotated by theta toward a fixed perpendicular.
Vec3 tilt(const Vec3 &omega, double theta_deg)
{
  if (theta_deg == 0.0)
  {
    return omega;
  }
  const Vec3 e1 = tangent_basis(omega).first;
  return std::cos(theta_deg * kDeg) * omega + std::sin(theta_deg * kDeg) * e1;
}

// Forwards to a model and keeps every data set it produced, in call order.
class RecordingForward : public ForwardModel
{
public:
  RecordingForward(ForwardModel &inner, FdtdForward *fdtd, std::filesystem::path trace_dir)
      : inner_(inner), fdtd_(fdtd), trace_dir_(std::move(trace_dir))
  {
  }

  IndicatorSamples monostatic(const Probe &probe, const std::vector<double> &taus) override
  {
    auto s = inner_.monostatic(probe, taus);
    keep({s});
    return s;
  }
  std::vector<IndicatorSamples> bistatic(const Probe &emitter, const std::vector<Probe> &receivers,
                                         const std::vector<double> &taus) override
  {
    auto s = inner_.bistatic(emitter, receivers, taus);
    keep(s);
    return s;
  }
  using ForwardModel::bistatic;
  const Scene *scene() const override { return inner_.scene(); }

  const std::vector<IndicatorSamples> &samples() const { return samples_; }
  const std::vector<std::string> &trace_files() const { return traces_; }

private:
  void keep(const std::vector<IndicatorSamples> &s)
  {
    if (fdtd_ && !trace_dir_.empty())
    {
      const auto &records = fdtd_->last_records();
      for (std::size_t i = 0; i < records.size(); ++i)
      {
        std::ostringstream name;
        name << "trace_" << std::setw(3) << std::setfill('0') << experiments_ << "_" << i
             << ".bin";
        write_trace((trace_dir_ / name.str()).string(), records[i]);
        traces_.push_back(name.str());
      }
    }
    ++experiments_;
    samples_.insert(samples_.end(), s.begin(), s.end());
  }

  ForwardModel &inner_;
  FdtdForward *fdtd_;
  std::filesystem::path trace_dir_;
  std::vector<IndicatorSamples> samples_;
  std::vector<std::string> traces_;
  int experiments_ = 0;
};

std::string fnv1a(const std::string &text)
{
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text)
  {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

json window_of(const DistanceFit &f)
{
  return {{"tau_lo", f.tau_lo}, {"tau_hi", f.tau_hi}, {"residual", f.residual}};
}

json window_of(const AFit &f)
{
  return {{"tau_lo", f.tau_lo}, {"tau_hi", f.tau_hi}, {"residual", f.residual}};
}

struct PipelineResult
{
  json result = json::object();
  std::vector<std::string> summary;
  bool inconclusive = false;
};

std::string fmt(double x)
{
  std::ostringstream s;
  s << std::setprecision(8) << x;
  return s.str();
}

// Reflection data of the ground-truth scene, or an explanatory error.
const Scene &ground_truth(const ForwardModel &f, const std::string &what)
{
  if (!f.scene())
  {
    fail(ErrorCode::InvalidArgument, what + " requires scene geometry");
  }
  return *f.scene();
}

PipelineResult run_distance(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const auto samples = f.monostatic(c.probe, c.taus());
  const auto fit = extract_distance(samples, c.model);
  r.result["dist_estimate"] = fit.distance;
  r.result["fit"] = to_json(fit);
  r.result["estimates"] = {{"dist_estimate", fit.distance}, {"surface_distance", fit.surface_distance()}};
  r.result["estimates"].update(window_of(fit));
  r.summary.push_back("dist(D, B) = " + fmt(fit.distance) + " over tau in [" + fmt(fit.tau_lo) +
                      ", " + fmt(fit.tau_hi) + "], rms residual " + fmt(fit.residual));
  if (const Scene *scene = f.scene())
  {
    const double truth = boundary_distance(*scene, c.probe.center) - c.probe.radius;
    r.result["ground_truth"] = {{"dist", truth}};
    r.summary.push_back("geometric distance " + fmt(truth));
  }
  return r;
}

PipelineResult run_classify(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const auto samples = f.monostatic(c.probe, c.taus());
  const auto cls = classify_surface(samples);
  r.result["classification"] = to_string(cls.surface);
  r.result["reason"] = cls.reason;
  r.result["points"] = cls.points;
  r.result["tau_lo"] = samples.taus[samples.size() - cls.points];
  r.result["tau_hi"] = samples.taus.back();
  r.summary.push_back("surface class " + to_string(cls.surface) + " (" + cls.reason + ")");
  r.inconclusive = cls.surface == SurfaceClass::Inconclusive;
  return r;
}

PipelineResult run_probe_direction(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  double d_p = 0.0;
  if (p.has("d_p"))
  {
    d_p = p.number("d_p");
  }
  else
  {
    const auto fit = extract_distance(f.monostatic(c.probe, c.taus()), c.model);
    d_p = fit.surface_distance();
    r.result["enclosing_fit"] = to_json(fit);
  }
  const Vec3 omega = tilt(p.direction("omega"), p.number("theta_deg", 0.0));
  const auto m = probe_direction(f, c.probe, d_p, omega, p.number("s"), c.taus(),
                                 p.number("tolerance", -1.0));
  r.result["d_p"] = d_p;
  r.result["omega"] = vec(omega);
  r.result["membership"] = to_json(m);
  r.result["decision"] = to_string(m.decision);
  r.result["estimates"] = {{"measured", m.measured}, {"threshold", m.threshold},
                           {"on_boundary", m.decision == Membership::OnBoundary ? 1 : 0}};
  r.result["estimates"].update(window_of(m.fit));
  r.summary.push_back("p + d_p omega: " + to_string(m.decision) + " (moved distance " +
                      fmt(m.measured) + ", threshold " + fmt(m.threshold) + ")");
  return r;
}

PipelineResult run_curvature(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  Vec3 q, normal;
  double d = 0.0;
  if (p.has("q"))
  {
    q = p.vec3("q");
    normal = p.has("normal") ? p.direction("normal") : Vec3((c.probe.center - q).normalized());
    d = p.has("d") ? p.number("d") : (c.probe.center - q).norm();
  }
  else
  {
    const auto lam = first_reflector(ground_truth(f, "curvature without params.q"), c.probe.center);
    if (!lam.finite || lam.points.size() != 1)
    {
      fail(ErrorCode::NonFiniteReflector, "curvature: the probe has no single first reflector");
    }
    q = lam.points.front();
    normal = (c.probe.center - q).normalized();
    d = (c.probe.center - q).norm();
  }
  const auto report = extract_curvatures(f, q, normal, d, c.probe.radius, p.number("s1"),
                                         p.number("s2"), c.taus());
  r.result["report"] = to_json(report);
  r.result["estimates"] = {{"H", report.H}, {"K", report.K}, {"condition", report.condition}};
  for (std::size_t j = 0; j < report.a_fits.size(); ++j)
  {
    r.result["estimates"]["A" + std::to_string(j + 1)] = report.a_fits[j].A;
    r.result["estimates"]["A" + std::to_string(j + 1) + "_residual"] = report.a_fits[j].residual;
  }
  r.summary.push_back("H = " + fmt(report.H) + ", K = " + fmt(report.K) + " (condition " +
                      fmt(report.condition) + ")");
  if (const Scene *scene = f.scene())
  {
    const auto so = shape_operator(*scene, q);
    r.result["ground_truth"] = {{"H", so.mean()}, {"K", so.gauss()}};
    r.summary.push_back("geometric H = " + fmt(so.mean()) + ", K = " + fmt(so.gauss()));
  }
  for (const auto &w : report.warnings)
  {
    r.summary.push_back("warning: " + w);
  }
  return r;
}

PipelineResult run_count(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  const auto samples = f.monostatic(c.probe, c.taus());
  const auto fit = extract_distance(samples, c.model);
  const auto n = count_spheres(samples, fit.distance, p.number("epsilon"));
  r.result["count"] = n.count;
  r.result["raw"] = n.raw;
  r.result["rounding_residual"] = n.residual;
  r.result["ambiguous"] = n.ambiguous;
  r.result["distance_fit"] = to_json(fit);
  r.result["a_fit"] = to_json(n.a_fit);
  r.result["estimates"] = {{"count", n.count}, {"raw", n.raw}, {"rounding_residual", n.residual}};
  r.result["estimates"].update(window_of(n.a_fit));
  r.summary.push_back("sphere count " + std::to_string(n.count) + " (raw " + fmt(n.raw) + ")");
  r.inconclusive = n.ambiguous;
  return r;
}

PipelineResult run_beta(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  const Scene &scene = ground_truth(f, "beta (surface jet)");
  Vec3 q;
  if (p.has("q"))
  {
    q = p.vec3("q");
  }
  else
  {
    const auto lam = first_reflector(scene, c.probe.center);
    if (!lam.finite || lam.points.size() != 1)
    {
      fail(ErrorCode::NonFiniteReflector, "beta: the probe has no single first reflector");
    }
    q = lam.points.front();
  }
  const auto samples = f.monostatic(c.probe, c.taus());
  const auto fit = extract_distance(samples, c.model);
  const auto a = extract_A(samples, fit.distance);
  const auto b = extract_beta(a, graph_jet(scene, q));
  r.result["beta"] = b.beta;
  r.result["B"] = b.B;
  r.result["C"] = b.C;
  r.result["C_geometric"] = b.C_geometric;
  r.result["determinant"] = b.determinant;
  r.result["a_fit"] = to_json(a);
  r.result["graph_orientation"] = "outward normal, toward the probe";
  r.result["estimates"] = {{"beta", b.beta}, {"A", a.A}};
  r.result["estimates"].update(window_of(a));
  r.summary.push_back("beta = " + fmt(b.beta) + " (B = " + fmt(b.B) + ")");
  return r;
}

PipelineResult run_bistatic_distance(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  const auto samples = f.bistatic(c.probe, *c.receiver, c.taus());
  const auto bd = bistatic_distance(samples, c.model);
  r.result["min_path"] = bd.min_path;
  r.result["fit"] = to_json(bd.fit);
  r.result["estimates"] = {{"min_path", bd.min_path}, {"dist_estimate", bd.fit.distance}};
  r.result["estimates"].update(window_of(bd.fit));
  r.summary.push_back("min |p - x| + |x - p'| = " + fmt(bd.min_path));
  if (const Scene *scene = f.scene())
  {
    const auto g = bistatic_reflector(*scene, c.probe.center, c.receiver->center);
    r.result["ground_truth"] = {{"min_path", g.min_path}};
    r.summary.push_back("geometric minimum " + fmt(g.min_path));
    if (p.boolean("determinant", false) && g.points.finite && g.points.points.size() == 1)
    {
      const Vec3 x = g.points.points.front();
      const auto det = bistatic_determinant(samples, bd.min_path, (x - c.probe.center).norm(),
                                            (x - c.receiver->center).norm());
      r.result["determinant"] = {{"value", det.determinant}, {"residual", det.residual}};
      r.result["estimates"]["determinant"] = det.determinant;
    }
  }
  return r;
}

PipelineResult run_spheroid_probe(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  double level = 0.0;
  if (p.has("c"))
  {
    level = p.number("c");
  }
  else
  {
    const auto bd = bistatic_distance(f.bistatic(c.probe, *c.receiver, c.taus()), c.model);
    level = bd.min_path;
    r.result["level_fit"] = to_json(bd.fit);
  }
  const Vec3 omega = tilt(p.direction("omega"), p.number("theta_deg", 0.0));
  const auto m = spheroid_membership(f, c.probe, *c.receiver, level, omega, p.number("s"),
                                     c.taus(), p.number("tolerance", -1.0));
  r.result["c"] = level;
  r.result["omega"] = vec(omega);
  r.result["membership"] = to_json(m);
  r.result["decision"] = to_string(m.decision);
  r.result["estimates"] = {{"measured", m.measured}, {"threshold", m.threshold},
                           {"on_boundary", m.decision == Membership::OnBoundary ? 1 : 0}};
  r.result["estimates"].update(window_of(m.fit));
  r.summary.push_back("spheroid point: " + to_string(m.decision) + " (path " + fmt(m.measured) +
                      ", threshold " + fmt(m.threshold) + ")");
  return r;
}

PipelineResult run_rotation_sweep(const ExperimentConfig &c, ForwardModel &f)
{
  PipelineResult r;
  const Section p(c.params, "/params");
  RotationSweepInput in;
  in.q = p.vec3("q");
  in.normal = p.direction("normal");
  if (p.has("reference"))
  {
    in.reference = p.direction("reference");
  }
  else
  {
    in.reference = tangent_basis(in.normal).first;
  }
  in.distance = p.number("distance");
  in.half_angle = p.number("half_angle_deg", 45.0) * kDeg;
  in.eta = p.number("eta", 0.25);
  in.eta2 = p.number("eta2", 0.25);
  in.sub_offset = p.number("sub_offset", 0.4 * in.eta2);
  in.angles = p.integer("angles", 12);
  const auto sweep = rotation_sweep(f, in, c.taus());
  r.result["sweep"] = to_json(sweep);
  r.result["estimates"] = {{"H", sweep.H}, {"K", sweep.K}, {"amplitude", sweep.amplitude},
                           {"noise", sweep.noise}, {"umbilic", sweep.umbilic ? 1 : 0}};
  r.summary.push_back("H = " + fmt(sweep.H) + ", K = " + fmt(sweep.K) +
                      (sweep.umbilic ? ", umbilic" : ", principal directions resolved"));
  if (const Scene *scene = f.scene())
  {
    const auto so = shape_operator(*scene, in.q);
    json truth = {{"H", so.mean()},
                  {"K", so.gauss()},
                  {"k1", so.k1},
                  {"k2", so.k2},
                  {"direction1", vec(so.direction1)},
                  {"direction2", vec(so.direction2)}};
    if (!sweep.umbilic)
    {
      const double a1 = std::acos(std::min(1.0, std::abs(sweep.direction1.dot(so.direction1))));
      const double a2 = std::acos(std::min(1.0, std::abs(sweep.direction2.dot(so.direction2))));
      truth["angle_error_deg"] = std::max(a1, a2) / kDeg;
      r.result["estimates"]["angle_error_deg"] = std::max(a1, a2) / kDeg;
      r.summary.push_back("principal direction error " + fmt(std::max(a1, a2) / kDeg) + " deg");
    }
    r.result["ground_truth"] = truth;
  }
  return r;
}

PipelineResult dispatch(const ExperimentConfig &c, ForwardModel &f)
{
  switch (c.kind)
  {
  case ExperimentKind::Distance:
    return run_distance(c, f);
  case ExperimentKind::Classify:
    return run_classify(c, f);
  case ExperimentKind::ProbeDirection:
    return run_probe_direction(c, f);
  case ExperimentKind::Curvature:
    return run_curvature(c, f);
  case ExperimentKind::Count:
    return run_count(c, f);
  case ExperimentKind::Beta:
    return run_beta(c, f);
  case ExperimentKind::BistaticDistance:
    return run_bistatic_distance(c, f);
  case ExperimentKind::SpheroidProbe:
    return run_spheroid_probe(c, f);
  case ExperimentKind::RotationSweep:
    return run_rotation_sweep(c, f);
  case ExperimentKind::OracleValidate:
    break;
  }
  fail(ErrorCode::InvalidArgument, "dispatch: unsupported kind");
}

void write_text(const std::filesystem::path &path, const std::string &text)
{
  std::ofstream out(path);
  if (!out)
  {
    fail(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << text;
}

}  // namespace

std::string to_string(ExperimentKind k)
{
  for (const auto &e : kKinds)
  {
    if (e.kind == k)
    {
      return e.name;
    }
  }
  return "unknown";
}

std::string to_string(DataSource s) { return s == DataSource::Fdtd ? "fdtd" : "oracle"; }

ExperimentConfig parse_config(const json &document)
{
  const Section root(document, "");
  root.only({"name", "kind", "source", "scene", "probe", "receiver", "tau", "fit", "fdtd", "params",
             "output", "seed"});
  ExperimentConfig c;
  c.document = document;
  c.name = root.has("name") ? root.string("name") : "experiment";
  const std::string kind = root.string("kind");
  const auto *found = std::find_if(std::begin(kKinds), std::end(kKinds),
                                   [&](const KindName &k) { return kind == k.name; });
  if (found == std::end(kKinds))
  {
    config_error("/kind", "unknown experiment kind \"" + kind + "\"");
  }
  c.kind = found->kind;
  if (root.has("seed"))
  {
    const int seed = root.integer("seed", 7);
    if (seed < 0)
    {
      config_error("/seed", "must be nonnegative");
    }
    c.seed = static_cast<unsigned>(seed);
  }
  if (c.kind == ExperimentKind::OracleValidate)
  {
    return c;
  }

  const std::string source = root.string("source", "oracle");
  if (source == "fdtd")
  {
    c.source = DataSource::Fdtd;
  }
  else if (source != "oracle")
  {
    config_error("/source", "expected \"fdtd\" or \"oracle\"");
  }
  c.scene = parse_scene(root.child("scene"));
  if (c.source == DataSource::Oracle && (c.scene.spheres.size() != 1 || c.scene.implicit))
  {
    config_error("/source", "the oracle handles exactly one sphere; use \"fdtd\" for this scene");
  }
  if (needs_probe(c.kind))
  {
    c.probe = parse_probe(root.child("probe"));
  }
  else if (root.has("probe"))
  {
    c.probe = parse_probe(root.child("probe"));
  }
  if (needs_receiver(c.kind))
  {
    c.receiver = parse_probe(root.child("receiver"));
  }
  else if (root.has("receiver"))
  {
    config_error("/receiver", "only bistatic kinds take a receiver");
  }
  if (needs_probe(c.kind) && c.scene.signed_distance(c.probe.center) <= c.probe.radius)
  {
    config_error("/probe", "ball must stay outside the obstacle");
  }
  if (c.receiver && c.scene.signed_distance(c.receiver->center) <= c.receiver->radius)
  {
    config_error("/receiver", "ball must stay outside the obstacle");
  }

  if (root.has("tau"))
  {
    const Section t = root.child("tau");
    t.only({"min", "max", "step"});
    c.tau_min = t.positive("min", c.tau_min);
    c.tau_max = t.positive("max", c.tau_max);
    c.tau_step = t.positive("step", c.tau_step);
    if (!(c.tau_min < c.tau_max))
    {
      config_error("/tau/max", "must exceed /tau/min");
    }
    if (c.taus().size() < 6)
    {
      config_error("/tau/step", "the grid needs at least 6 values");
    }
  }
  if (root.has("fit"))
  {
    const Section ft = root.child("fit");
    ft.only({"model"});
    const std::string m = ft.string("model", "normalized");
    if (m == "normalized")
    {
      c.model = DistanceModel::Normalized;
    }
    else if (m == "power-law")
    {
      c.model = DistanceModel::PowerLaw;
    }
    else if (m == "linear")
    {
      c.model = DistanceModel::Linear;
    }
    else
    {
      config_error("/fit/model", "expected normalized, power-law or linear");
    }
  }
  if (c.source == DataSource::Fdtd)
  {
    const Section fd = root.child("fdtd");
    fd.only({"h", "T", "cfl", "margin", "free_field_run", "radial_points", "sphere_points"});
    c.fdtd.T = fd.positive("T");
    c.fdtd.h = fd.positive("h", 0.25 * c.probe.radius);
    c.fdtd.cfl = fd.positive("cfl", 0.9);
    if (c.fdtd.cfl > 1.0)
    {
      config_error("/fdtd/cfl", "must not exceed 1");
    }
    c.fdtd.margin = fd.number("margin", -1.0);
    c.fdtd.free_field_run = fd.boolean("free_field_run", true);
    c.fdtd.simulation.radial_points = fd.integer("radial_points", 6);
    c.fdtd.simulation.sphere_points = fd.integer("sphere_points", 26);
    if (c.fdtd.simulation.radial_points < 2)
    {
      config_error("/fdtd/radial_points", "need at least 2");
    }
  }
  else if (root.has("fdtd"))
  {
    config_error("/fdtd", "only used with source \"fdtd\"");
  }
  if (root.has("output"))
  {
    const Section o = root.child("output");
    o.only({"trace"});
    c.write_trace = o.boolean("trace", false);
  }
  if (root.has("params"))
  {
    c.params = document.at("params");
  }
  check_params(c, Section(c.params, "/params"));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    fail(ErrorCode::IoError, "cannot read config " + path.string());
  }
  json doc;
  try
  {
    doc = json::parse(in, nullptr, true, true);
  }
  catch (const json::parse_error &e)
  {
    fail(ErrorCode::ConfigError, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::vector<std::string> config_warnings(const ExperimentConfig &c)
{
  std::vector<std::string> w;
  if (c.source != DataSource::Fdtd || c.kind == ExperimentKind::RotationSweep)
  {
    return w;
  }
  const double T = c.fdtd.T;
  const double dist = boundary_distance(c.scene, c.probe.center) - c.probe.radius;
  double needed = 2.0 * dist;
  if (c.receiver)
  {
    needed = dist + boundary_distance(c.scene, c.receiver->center) - c.receiver->radius;
  }
  const std::string what = c.receiver ? "dist(D, B) + dist(D, B')" : "2 dist(D, B)";
  if (!(T > needed))
  {
    w.push_back("hypothesis T > " + what + " violated: T = " + fmt(T) + ", " + what + " = " +
                fmt(needed) + "; the indicator asymptotics do not apply");
  }
  else if (c.tau_min * (T - needed) < 5.0)
  {
    w.push_back("tau (T - " + what + ") = " + fmt(c.tau_min * (T - needed)) +
                " < 5 at the smallest tau; truncation of the time integral is not negligible");
  }
  return w;
}

std::string scene_hash(const ExperimentConfig &c)
{
  const json scene = c.document.contains("scene") ? c.document.at("scene") : json();
  return fnv1a(scene.dump());
}

RunOutcome run_experiment(const ExperimentConfig &c, const std::filesystem::path &out_dir)
{
  if (!out_dir.empty())
  {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
    {
      fail(ErrorCode::IoError, "cannot create output directory " + out_dir.string());
    }
  }
  RunOutcome out;
  out.result = {{"name", c.name}, {"kind", to_string(c.kind)}};
  if (c.kind == ExperimentKind::OracleValidate)
  {
    out.result["checks"] = oracle_validation(c.seed);
    bool ok = true;
    for (const auto &[k, v] : out.result["checks"].items())
    {
      ok = ok && v["pass"].get<bool>();
      out.summary += k + ": max residual " + fmt(v["residual"].get<double>()) + " (tolerance " +
                     fmt(v["tolerance"].get<double>()) + ")\n";
    }
    out.exit_code = ok ? kExitSuccess : kExitError;
  }
  else
  {
    out.warnings = config_warnings(c);
    std::unique_ptr<ForwardModel> inner;
    FdtdForward *fdtd = nullptr;
    if (c.source == DataSource::Oracle)
    {
      inner = std::make_unique<OracleForward>(c.scene.spheres.front());
    }
    else
    {
      auto model = std::make_unique<FdtdForward>(c.scene, c.fdtd);
      fdtd = model.get();
      inner = std::move(model);
    }
    RecordingForward forward(*inner, fdtd, c.write_trace ? out_dir : std::filesystem::path());
    PipelineResult r;
    try
    {
      r = dispatch(c, forward);
    }
    catch (const Error &e)
    {
      const auto code = e.code();
      if (code != ErrorCode::MixedSign && code != ErrorCode::Inconclusive &&
          code != ErrorCode::Unresolvable)
      {
        throw;
      }
      r.inconclusive = true;
      r.result["status"] = "inconclusive";
      r.result["reason"] = e.what();
      r.summary.push_back(std::string("inconclusive: ") + e.what());
    }
    out.result.update(r.result);
    out.result["status"] = r.inconclusive ? "inconclusive" : "ok";
    out.exit_code = r.inconclusive ? kExitInconclusive : kExitSuccess;
    out.result["provenance"] = {{"source", to_string(c.source)},
                                {"scene_hash", scene_hash(c)},
                                {"tau_grid", {c.tau_min, c.tau_max, c.tau_step}},
                                {"fit_model", to_string(c.model)}};
    if (c.source == DataSource::Fdtd)
    {
      out.result["provenance"]["fdtd"] = {{"h", c.fdtd.h}, {"T", c.fdtd.T}, {"cfl", c.fdtd.cfl}};
    }
    out.result["warnings"] = out.warnings;
    json files = json::array();
    const auto &samples = forward.samples();
    for (std::size_t i = 0; i < samples.size() && !out_dir.empty(); ++i)
    {
      std::ostringstream name;
      name << "indicator";
      if (samples.size() > 1)
      {
        name << "_" << std::setw(3) << std::setfill('0') << i;
      }
      name << ".csv";
      const json meta = {{"experiment", c.name},
                         {"kind", to_string(c.kind)},
                         {"scene_hash", scene_hash(c)}};
      write_samples_csv((out_dir / name.str()).string(), samples[i], meta.dump());
      files.push_back(name.str());
    }
    out.result["indicator_files"] = files;
    out.result["trace_files"] = forward.trace_files();
    for (const auto &w : out.warnings)
    {
      out.summary += "warning: " + w + "\n";
    }
    for (const auto &line : r.summary)
    {
      out.summary += line + "\n";
    }
  }
  out.result["exit_code"] = out.exit_code;
  if (!out_dir.empty())
  {
    write_text(out_dir / "result.json", out.result.dump(2) + "\n");
    write_text(out_dir / "summary.txt", out.summary);
  }
  return out;
}

ExperimentConfig with_parameter(const ExperimentConfig &c, const std::string &parameter,
                                double value)
{
  std::string pointer = parameter;
  if (parameter == "tau_max")
  {
    pointer = "/tau/max";
  }
  else if (parameter == "tau_min")
  {
    pointer = "/tau/min";
  }
  else if (parameter == "h")
  {
    pointer = "/fdtd/h";
  }
  else if (parameter == "T")
  {
    pointer = "/fdtd/T";
  }
  else if (parameter == "eta")
  {
    pointer = "/probe/radius";
  }
  else if (parameter == "theta")
  {
    pointer = c.kind == ExperimentKind::RotationSweep ? "/params/half_angle_deg" : "/params/theta_deg";
  }
  else if (parameter == "s")
  {
    pointer = c.kind == ExperimentKind::Curvature       ? "/params/s1"
              : c.kind == ExperimentKind::RotationSweep ? "/params/sub_offset"
                                                        : "/params/s";
  }
  else if (parameter.empty() || parameter.front() != '/')
  {
    fail(ErrorCode::ConfigError,
         "sweep parameter \"" + parameter +
             "\" is not one of tau_max, tau_min, h, T, eta, s, theta or a JSON pointer");
  }
  json doc = c.document;
  try
  {
    doc[json::json_pointer(pointer)] = value;
  }
  catch (const json::exception &e)
  {
    fail(ErrorCode::ConfigError, "sweep parameter " + pointer + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig &c, const std::string &parameter,
                                const std::vector<double> &values, int workers,
                                const std::filesystem::path &out_dir)
{
  if (values.empty())
  {
    fail(ErrorCode::ConfigError, "sweep: empty range for " + parameter);
  }
  if (workers < 1)
  {
    fail(ErrorCode::InvalidArgument, "sweep: workers must be at least 1");
  }
  std::vector<ExperimentConfig> configs;
  for (double v : values)
  {
    configs.push_back(with_parameter(c, parameter, v));
  }
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]
  {
    for (std::size_t i = next++; i < values.size(); i = next++)
    {
      rows[i].value = values[i];
      std::ostringstream name;
      name << "run_" << std::setw(3) << std::setfill('0') << i;
      try
      {
        const auto r = run_experiment(configs[i], out_dir.empty() ? out_dir : out_dir / name.str());
        rows[i].exit_code = r.exit_code;
        rows[i].result = r.result;
      }
      catch (const std::exception &e)
      {
        rows[i].exit_code = kExitError;
        rows[i].error = e.what();
      }
    }
  };
  const int n = std::min<int>(workers, static_cast<int>(values.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k)
  {
    pool.emplace_back(work);
  }
  work();
  for (auto &t : pool)
  {
    t.join();
  }

  if (!out_dir.empty())
  {
    std::vector<std::string> columns;
    for (const auto &r : rows)
    {
      if (r.result.contains("estimates"))
      {
        for (const auto &[k, v] : r.result["estimates"].items())
        {
          if (std::find(columns.begin(), columns.end(), k) == columns.end())
          {
            columns.push_back(k);
          }
        }
      }
    }
    std::sort(columns.begin(), columns.end());
    std::ostringstream csv;
    csv << std::setprecision(17) << "parameter,value,exit_code";
    for (const auto &k : columns)
    {
      csv << "," << k;
    }
    csv << ",error\n";
    for (const auto &r : rows)
    {
      csv << parameter << "," << r.value << "," << r.exit_code;
      for (const auto &k : columns)
      {
        csv << ",";
        if (r.result.contains("estimates") && r.result["estimates"].contains(k))
        {
          csv << r.result["estimates"][k].get<double>();
        }
      }
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      csv << "," << err << "\n";
    }
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "sweep.csv", csv.str());
  }
  return rows;
}

json oracle_validation(unsigned seed)
{
  const auto r = run_oracle_self_check(seed);
  auto entry = [](double residual, double tolerance)
  { return json{{"residual", residual}, {"tolerance", tolerance}, {"pass", residual <= tolerance}}; };
  return {{"addition_theorem", entry(r.addition_theorem, 1e-12)},
          {"mean_value", entry(r.mean_value, 1e-10)},
          {"reciprocity", entry(r.reciprocity, 1e-10)},
          {"boundary_condition", entry(r.boundary, 1e-10)},
          {"bessel_wronskian", entry(r.wronskian, 1e-10)}};
}

json to_json(const DistanceFit &f)
{
  return {{"distance", f.distance},
          {"center_length", f.center_length},
          {"tau_lo", f.tau_lo},
          {"tau_hi", f.tau_hi},
          {"points", f.points},
          {"residual", f.residual},
          {"sign", to_string(f.sign)},
          {"model", to_string(f.model)},
          {"bistatic", f.bistatic},
          {"slope_sequence", f.slope_sequence}};
}

json to_json(const AFit &f)
{
  return {{"A", f.A},
          {"c4", f.c4},
          {"c5", f.c5},
          {"surface_distance", f.surface_distance},
          {"eta", f.eta},
          {"residual", f.residual},
          {"tau_lo", f.tau_lo},
          {"tau_hi", f.tau_hi},
          {"method", to_string(f.method)},
          {"negative", f.negative}};
}

json to_json(const CurvatureReport &r)
{
  json out = {{"q", vec(r.q)},
              {"normal", vec(r.normal)},
              {"d", r.d},
              {"offsets", r.offsets},
              {"lambdas", r.lambdas},
              {"Q", r.Q},
              {"H", r.H},
              {"K", r.K},
              {"condition", r.condition},
              {"warnings", r.warnings}};
  out["a_fits"] = json::array();
  for (const auto &a : r.a_fits)
  {
    out["a_fits"].push_back(to_json(a));
  }
  out["distance_fits"] = json::array();
  for (const auto &d : r.distance_fits)
  {
    out["distance_fits"].push_back(to_json(d));
  }
  if (r.direction1)
  {
    out["direction1"] = vec(*r.direction1);
  }
  if (r.direction2)
  {
    out["direction2"] = vec(*r.direction2);
  }
  if (r.beta)
  {
    out["beta"] = *r.beta;
  }
  return out;
}

json to_json(const MembershipTest &m)
{
  return {{"decision", to_string(m.decision)},
          {"measured", m.measured},
          {"threshold", m.threshold},
          {"fit", to_json(m.fit)}};
}

json to_json(const RotationSweep &r)
{
  return {{"thetas", r.thetas},
          {"det_outer", r.det_outer},
          {"det_inner", r.det_inner},
          {"h_tilde_raw", r.h_tilde_raw},
          {"k_raw", r.k_raw},
          {"h_tilde", r.h_tilde},
          {"K", r.K},
          {"H", r.H},
          {"cos_between", r.cos_between},
          {"theta1", r.theta1},
          {"theta2", r.theta2},
          {"direction1", vec(r.direction1)},
          {"direction2", vec(r.direction2)},
          {"amplitude", r.amplitude},
          {"noise", r.noise},
          {"umbilic", r.umbilic}};
}

}  // namespace tde
