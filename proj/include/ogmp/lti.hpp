#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ogmp/error.hpp"

namespace ogmp::lti {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Planar single-rigid-body parameters (sagittal plane, scalar inertia).
struct SrbParams {
  double mass = 12.0;        // kg
  double inertia = 0.45;     // kg m^2 (I_yy)
  double gravity = 9.81;     // m/s^2
  double leg_length = 0.44;  // m

  void validate() const;
};

/// Discrete-time LTI system x_{k+1} = A x_k + B u_k, y_k = C x_k.
/// For SRB-derived models the state carries a trailing constant-1 coordinate
/// that injects gravity (last row of A is [0..0 1], last row of B is zero).
struct LtiModel {
  Matrix A;
  Matrix B;
  Matrix C;
  double dt = 0.0;
  int state_dim = 0;
  int control_dim = 0;

  void validate() const;
};

/// Fixed point of the discrete algebraic Riccati map plus the implied gain.
struct DareSolution {
  Matrix P;           // symmetric PSD cost-to-go
  Matrix K;           // u = -K x stabilizing gain
  double residual;    // ||riccati(P) - P||_inf at exit
  int iterations;
};

/// Damped fixed-point iteration of the Riccati map with per-step
/// symmetrization. Suited to the small dense systems used here (n <= 13).
DareSolution solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                        const Matrix& R, double tol = 1e-10,
                        int max_iter = 10000);

/// solve_dare on the model's (A, B); gain ready for reference tracking.
DareSolution lqr_closed_loop(const LtiModel& model, const Matrix& Q,
                             const Matrix& R);

/// First-order (Euler) discretization: A = I + Ac dt, B = Bc dt.
std::pair<Matrix, Matrix> discretize_euler(const Matrix& Ac, const Matrix& Bc,
                                           double dt);

/// Planar gravity-augmented SRB model.
/// State  x = [p_x, p_z, theta, v_x, v_z, omega, 1]           (n = 7)
/// Control u = [f1_x, f1_z, tau1, f2_x, f2_z, tau2]           (m = 6)
/// Forces act on the COM scaled by 1/m, moments by 1/I_yy; avg_pitch rotates
/// the contact-force axes (frozen-orientation linearization). Output is the
/// base height p_z.
LtiModel build_srb_lti(const SrbParams& params, double avg_pitch, double dt);

/// Forward simulation; returns N+1 states including x0.
std::vector<Vector> rollout_lti(const LtiModel& model, const Vector& x0,
                                const std::vector<Vector>& controls);

/// Max |eigenvalue| via normed repeated squaring (Gelfand's formula): total
/// for every square matrix, including nilpotent and complex-pair spectra.
double spectral_radius(const Matrix& M, int max_squarings = 64);

/// Index of the state coordinates within the SRB state vector.
enum SrbState { kPx = 0, kPz = 1, kTheta = 2, kVx = 3, kVz = 4, kOmega = 5 };
constexpr int kSrbStateDim = 7;
constexpr int kSrbCoreDim = 6;
constexpr int kSrbControlDim = 6;

/// The dynamic core of a gravity-augmented model: the trailing constant
/// coordinate is dropped (it is uncontrollable with unit eigenvalue, so the
/// Riccati iteration would diverge on it). Used when computing tracking gains;
/// gravity is reintroduced as a feedforward or flight-phase effect.
LtiModel strip_gravity_state(const LtiModel& model);

}  // namespace ogmp::lti
