// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tde/fits.hpp"
#include "tde/forward.hpp"
#include "tde/geometry.hpp"

namespace tde
{

enum class SignClass
{
  Positive,
  Negative,
  Mixed,
};
std::string to_string(SignClass s);

// How the exponential rate is separated from the algebraic prefactor.
enum class DistanceModel
{
  // log|G| of the probe-normalized samples against 1, tau, 1/tau, 1/tau^2.
  Normalized,
  // log|I| against 1, tau, log tau.
  PowerLaw,
  // log|I| against 1, tau.
  Linear,
};
std::string to_string(DistanceModel m);

struct DistanceFit
{
  // Monostatic: dist(D, B). Bistatic: the shortest path from the emitter ball to the surface
  // to the receiver ball.
  double distance = 0.0;
  // Rate L of exp(-tau L) for the ball centers: twice the surface distance of the probe
  // center (monostatic) or min over the surface of |p - x| + |x - p'| (bistatic).
  double center_length = 0.0;
  std::vector<double> slope_sequence;  // (1/tau) log|I| per sample
  double tau_lo = 0.0, tau_hi = 0.0;
  std::size_t points = 0;
  double residual = 0.0;
  SignClass sign = SignClass::Mixed;
  DistanceModel model = DistanceModel::Normalized;
  bool bistatic = false;

  double surface_distance() const { return 0.5 * center_length; }
};

// Distance from the decay rate, fitted over a trailing window of consistent sign (all samples
// of consistent sign for recorded data). Throws MixedSign when the sign flips inside the last
// half of the samples.
DistanceFit extract_distance(const IndicatorSamples &samples,
                             DistanceModel model = DistanceModel::Normalized);

enum class SurfaceClass
{
  GammaBelowOne,
  GammaAboveOne,
  Inconclusive,
};
std::string to_string(SurfaceClass c);

struct Classification
{
  SurfaceClass surface = SurfaceClass::Inconclusive;
  std::string reason;
  std::size_t points = 0;
};

// Sign of the indicator for large tau. Also inconclusive when the leading asymptotic term
// is absent (damping close to 1).
Classification classify_surface(const IndicatorSamples &samples);

enum class Membership
{
  OnBoundary,
  OffBoundary,
};
std::string to_string(Membership m);

struct MembershipTest
{
  Membership decision = Membership::OffBoundary;
  double measured = 0.0;   // recovered distance or path length of the moved probe
  double threshold = 0.0;  // expected value on the boundary plus the tolerance
  DistanceFit fit;
};

// Whether p + d_p omega lies on the surface, from a new experiment with the probe moved by s
// along omega. tolerance < 0 selects 2% of d_p.
MembershipTest probe_direction(ForwardModel &forward, const Probe &probe, double d_p,
                               const Vec3 &omega, double s, const std::vector<double> &taus,
                               double tolerance = -1.0);

enum class AFitMethod
{
  // exp(2 tau d) G against 1, 1/tau, 1/tau^2 with G the probe-normalized samples.
  Normalized,
  // exp(2 tau dist) I against tau^-4, tau^-5.
  Literal,
};
std::string to_string(AFitMethod m);

struct AFit
{
  double A = 0.0;
  // Coefficients of tau^-4 and tau^-5 in tau^4 exp(2 tau dist) I.
  double c4 = 0.0, c5 = 0.0;
  double surface_distance = 0.0;  // d = dist + eta
  double eta = 0.0;
  double residual = 0.0;  // relative rms residual
  double tau_lo = 0.0, tau_hi = 0.0;
  AFitMethod method = AFitMethod::Normalized;
  bool negative = false;  // c4 < 0 contradicts the Neumann asymptotics
};

// Leading constant of the monostatic asymptotics over all given samples.
AFit extract_A(const IndicatorSamples &samples, double dist,
               AFitMethod method = AFitMethod::Normalized);

struct CurvaturePair
{
  double H = 0.0;
  double K = 0.0;
  double condition = 1.0;  // 2-norm condition number of the system matrix
};

// Solves -2 lambda_j H + K = Q_j - lambda_j^2, j = 1, 2.
CurvaturePair curvature_system(double lambda1, double lambda2, double Q1, double Q2);

struct CurvatureReport
{
  Vec3 q = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
  std::vector<double> offsets;
  std::vector<double> lambdas;
  std::vector<AFit> a_fits;
  std::vector<DistanceFit> distance_fits;
  std::vector<double> Q;
  double H = 0.0;
  double K = 0.0;
  double condition = 1.0;
  std::optional<Vec3> direction1, direction2;
  std::optional<double> beta;
  std::vector<std::string> warnings;
};

// Two experiments with the probe moved toward q by s1 < s2 along the normal.
CurvatureReport extract_curvatures(ForwardModel &forward, const Vec3 &q, const Vec3 &normal,
                                   double d, double eta, double s1, double s2,
                                   const std::vector<double> &taus);

struct SphereCount
{
  int count = 0;
  double raw = 0.0;
  double residual = 0.0;
  bool ambiguous = false;
  AFit a_fit;
};

// Number of radius-epsilon spheres nearest to the probe center.
SphereCount count_spheres(const IndicatorSamples &samples, double dist, double epsilon);

// Curvature term of the second-order coefficient without the -beta/d^2 part.
double evaluate_C_geometric(const HJet &jet, double d, double H);

struct BetaEstimate
{
  double beta = 0.0;
  double B = 0.0;            // second-order constant recovered from c5
  double C = 0.0;            // B * sqrt(det)
  double C_geometric = 0.0;
  double determinant = 0.0;  // det((1/d) I - hessian of h)
};

BetaEstimate extract_beta(const AFit &fit, const HJet &jet);

struct BistaticDistance
{
  double min_path = 0.0;  // min over the surface of |p - x| + |x - p'|
  DistanceFit fit;
};

BistaticDistance bistatic_distance(const IndicatorSamples &samples,
                                   DistanceModel model = DistanceModel::Normalized);

// Membership test of the spheroid point in direction omega from the receiver
// center: re-observe on the sub-ball centered p' + s omega of radius eta' - s.
// tolerance < 0 selects 2% of s.
MembershipTest spheroid_membership(ForwardModel &forward, const Probe &emitter,
                                   const Probe &receiver, double c, const Vec3 &omega, double s,
                                   const std::vector<double> &taus, double tolerance = -1.0);

// det(S(E) - S) from the bistatic leading constant, with r and r2 the distances from the
// reflection point to the emitter and receiver centers.
struct BistaticDeterminant
{
  double determinant = 0.0;
  double g0 = 0.0;
  double residual = 0.0;
};
BistaticDeterminant bistatic_determinant(const IndicatorSamples &samples, double min_path,
                                         double r, double r2);

struct RotationSweepInput
{
  Vec3 q = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 reference = Vec3::UnitX();  // tangent direction for theta = 0
  double distance = 1.0;           // |q - p| = |q - p'|
  double half_angle = 0.7853981633974483;  // angle between the normal and each probe
  double eta = 0.25;
  double eta2 = 0.25;
  double sub_offset = 0.1;  // shift of the sub-ball toward q
  int angles = 12;
};

struct RotationSweep
{
  std::vector<double> thetas;
  std::vector<double> det_outer, det_inner;
  std::vector<double> h_tilde_raw, k_raw;  // per-angle two-equation solutions
  std::vector<double> h_tilde;             // with K pooled over all angles
  double K = 0.0;
  double H = 0.0;
  double cos_between = 0.0;  // A_q(p) . A_q(p')
  double theta1 = 0.0, theta2 = 0.0;
  Vec3 direction1 = Vec3::Zero(), direction2 = Vec3::Zero();
  double amplitude = 0.0;  // 2-theta harmonic of h_tilde
  double noise = 0.0;      // rms residual around that harmonic
  bool umbilic = false;
};

// Rotates emitter and receiver about the normal at q and tracks the modified mean curvature.
RotationSweep rotation_sweep(ForwardModel &forward, const RotationSweepInput &input,
                             const std::vector<double> &taus);

}  // namespace tde
