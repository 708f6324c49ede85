#include "ogmp/lti.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace ogmp::lti {

void SrbParams::validate() const {
  require(mass > 0.0, ErrorCode::InvalidArgument, "SrbParams.mass must be > 0");
  require(inertia > 0.0, ErrorCode::InvalidArgument,
          "SrbParams.inertia must be > 0");
  require(gravity > 0.0, ErrorCode::InvalidArgument,
          "SrbParams.gravity must be > 0");
  require(leg_length > 0.0, ErrorCode::InvalidArgument,
          "SrbParams.leg_length must be > 0");
}

void LtiModel::validate() const {
  require(A.rows() == state_dim && A.cols() == state_dim,
          ErrorCode::DimensionMismatch, "LtiModel.A must be n x n");
  require(B.rows() == state_dim && B.cols() == control_dim,
          ErrorCode::DimensionMismatch, "LtiModel.B must be n x m");
  require(C.cols() == state_dim, ErrorCode::DimensionMismatch,
          "LtiModel.C must have n columns");
  require(A.allFinite() && B.allFinite() && C.allFinite(),
          ErrorCode::InvalidArgument, "LtiModel entries must be finite");
}

DareSolution solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                        const Matrix& R, double tol, int max_iter) {
  const auto n = A.rows();
  const auto m = B.cols();
  require(A.cols() == n, ErrorCode::DimensionMismatch, "A must be square");
  require(B.rows() == n, ErrorCode::DimensionMismatch, "B must be n x m");
  require(Q.rows() == n && Q.cols() == n, ErrorCode::DimensionMismatch,
          "Q must be n x n");
  require(R.rows() == m && R.cols() == m, ErrorCode::DimensionMismatch,
          "R must be m x m");

  Matrix P = Q;
  double damping = 1.0;
  double prev_residual = std::numeric_limits<double>::infinity();
  double residual = prev_residual;
  int iter = 0;
  Matrix gain_inner;  // R + B'PB, reused for K at exit

  for (iter = 1; iter <= max_iter; ++iter) {
    gain_inner = R + B.transpose() * P * B;
    Eigen::LLT<Matrix> llt(gain_inner);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::SingularInnerMatrix,
           "R + B'PB is not positive definite");
    }
    const Matrix BtPA = B.transpose() * P * A;
    Matrix next = Q + A.transpose() * P * A - BtPA.transpose() * llt.solve(BtPA);
    next = 0.5 * (next + next.transpose()).eval();

    residual = (next - P).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || next.cwiseAbs().maxCoeff() > 1e14) {
      fail(ErrorCode::NonConvergence, "Riccati iteration diverged");
    }
    if (residual < tol) {
      P = next;
      break;
    }
    // Damp when the map stops contracting (marginally stable A).
    if (residual > prev_residual * 1.01 && damping > 0.25) damping *= 0.5;
    P = ((1.0 - damping) * P + damping * next).eval();
    prev_residual = residual;
  }
  if (residual >= tol) {
    fail(ErrorCode::NonConvergence, "DARE residual " + std::to_string(residual) +
                                        " > tol after " +
                                        std::to_string(max_iter) + " iters");
  }

  gain_inner = R + B.transpose() * P * B;
  Eigen::LLT<Matrix> llt(gain_inner);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::SingularInnerMatrix, "R + B'PB is not positive definite");
  }
  DareSolution sol;
  sol.P = P;
  sol.K = llt.solve(B.transpose() * P * A);
  sol.residual = residual;
  sol.iterations = iter;
  return sol;
}

DareSolution lqr_closed_loop(const LtiModel& model, const Matrix& Q,
                             const Matrix& R) {
  model.validate();
  require(Q.rows() == model.state_dim && R.rows() == model.control_dim,
          ErrorCode::DimensionMismatch,
          "Q/R dimensions inconsistent with model");
  return solve_dare(model.A, model.B, Q, R);
}

std::pair<Matrix, Matrix> discretize_euler(const Matrix& Ac, const Matrix& Bc,
                                           double dt) {
  require(Ac.rows() == Ac.cols(), ErrorCode::DimensionMismatch,
          "Ac must be square");
  require(Bc.rows() == Ac.rows(), ErrorCode::DimensionMismatch,
          "Bc row count must match Ac");
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be > 0");
  Matrix A = Matrix::Identity(Ac.rows(), Ac.cols()) + Ac * dt;
  Matrix B = Bc * dt;
  return {A, B};
}

LtiModel build_srb_lti(const SrbParams& params, double avg_pitch, double dt) {
  params.validate();
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be > 0");

  const int n = kSrbStateDim;
  const int m = kSrbControlDim;
  Matrix Ac = Matrix::Zero(n, n);
  Ac(kPx, kVx) = 1.0;
  Ac(kPz, kVz) = 1.0;
  Ac(kTheta, kOmega) = 1.0;
  Ac(kVz, 6) = -params.gravity;  // gravity through the constant coordinate

  const double c = std::cos(avg_pitch);
  const double s = std::sin(avg_pitch);
  Matrix Bc = Matrix::Zero(n, m);
  for (int foot = 0; foot < 2; ++foot) {
    const int fx = 3 * foot;
    const int fz = 3 * foot + 1;
    const int tau = 3 * foot + 2;
    Bc(kVx, fx) = c / params.mass;
    Bc(kVx, fz) = -s / params.mass;
    Bc(kVz, fx) = s / params.mass;
    Bc(kVz, fz) = c / params.mass;
    Bc(kOmega, tau) = 1.0 / params.inertia;
  }

  auto [A, B] = discretize_euler(Ac, Bc, dt);

  LtiModel model;
  model.A = A;
  model.B = B;
  model.C = Matrix::Zero(1, n);
  model.C(0, kPz) = 1.0;
  model.dt = dt;
  model.state_dim = n;
  model.control_dim = m;
  return model;
}

std::vector<Vector> rollout_lti(const LtiModel& model, const Vector& x0,
                                const std::vector<Vector>& controls) {
  model.validate();
  require(x0.size() == model.state_dim, ErrorCode::DimensionMismatch,
          "x0 dimension mismatch");
  std::vector<Vector> states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  for (const Vector& u : controls) {
    require(u.size() == model.control_dim, ErrorCode::DimensionMismatch,
            "control dimension mismatch");
    states.push_back(model.A * states.back() + model.B * u);
  }
  return states;
}

double spectral_radius(const Matrix& M, int max_squarings) {
  require(M.rows() == M.cols(), ErrorCode::DimensionMismatch,
          "spectral_radius needs a square matrix");
  if (M.size() == 0) return 0.0;

  // Gelfand: rho = lim ||M^(2^k)||^(1/2^k). Normalize each squaring and
  // accumulate log(norm)/2^k; increments shrink geometrically, so the
  // estimate settles to ~1e-12 well within the squaring budget.
  Matrix Mi = M;
  double log_rho = 0.0;
  double scale = 1.0;  // 1 / 2^k
  for (int k = 0; k < max_squarings; ++k) {
    const double s = Mi.norm();
    if (s == 0.0) return 0.0;  // exactly nilpotent
    log_rho += scale * std::log(s);
    if (scale * std::abs(std::log(s)) < 1e-14 && k > 2) {
      return std::exp(log_rho);
    }
    Mi = ((Mi / s) * (Mi / s)).eval();
    if (!Mi.allFinite()) {
      fail(ErrorCode::NonConvergence, "spectral_radius: non-finite iterate");
    }
    scale *= 0.5;
  }
  return std::exp(log_rho);
}

LtiModel strip_gravity_state(const LtiModel& model) {
  const int n = model.state_dim;
  require(n >= 2, ErrorCode::DimensionMismatch, "model too small to strip");
  LtiModel core;
  core.A = model.A.topLeftCorner(n - 1, n - 1);
  core.B = model.B.topRows(n - 1);
  core.C = model.C.leftCols(n - 1);
  core.dt = model.dt;
  core.state_dim = n - 1;
  core.control_dim = model.control_dim;
  return core;
}

}  // namespace ogmp::lti
