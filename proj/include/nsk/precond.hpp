#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsk/reduced.hpp"

namespace nsk {

enum class CycleType { two_grid, w_cycle };

std::string to_string(CycleType cycle);
/// Accepts "two_grid" and "w_cycle"; throws InvalidArgument otherwise.
CycleType parse_cycle(const std::string& name);

/// Two-grid / W-cycle approximation T of the reduced Hessian at the finest
/// level of a context.
///
/// Level k in [base, fine) carries a Hessian context at u_k = pi(u_{k+1}) with
/// targets projected the same way. At the base level the matrix M_b H_b is
/// formed densely and Cholesky-factorized. If that fails the hierarchy is
/// flagged not positive definite and apply_inverse throws.
struct PreconditionerHierarchy {
  const Multilevel* ml = nullptr;
  int fine_level = 0;
  int base_level = 0;
  CycleType cycle = CycleType::two_grid;
  int inner_steps = 2;
  double beta = 0.0;
  /// contexts[k - base_level] for k in [base, fine); when base == fine the
  /// single entry is the fine context itself.
  std::vector<HessianContext> contexts;
  /// Lower Cholesky factor of the symmetrized M_b H_b (empty if not PD).
  std::shared_ptr<const Eigen::MatrixXd> base_factor;
  double base_asymmetry = 0.0;
  bool not_positive_definite = false;
  std::string message;
  double setup_seconds = 0.0;

  const HessianContext& context(int level) const { return contexts.at(level - base_level); }
};

struct PreconditionerOptions {
  int base_level = 0;
  CycleType cycle = CycleType::two_grid;
  int inner_steps = 2;
  /// Workers for the dense column assembly; 0 means worker_threads().
  int threads = 0;
  NewtonOptions newton;
};

PreconditionerHierarchy build_preconditioner(const HessianContext& fine, const PreconditionerOptions& options);

/// T^{-1} v. For the W-cycle the coarse inverse at every level above the base
/// is replaced by `inner_steps` PCG steps on the coarse Hessian, preconditioned
/// by the next coarser T^{-1}, from a zero initial guess.
Vec apply_inverse(const PreconditionerHierarchy& p, const Vec& v);

/// T v = P H_c(pi v) + beta (v - P pi v). Two-grid with base = fine - 1, or
/// base = fine (then T = H).
Vec apply_forward(const PreconditionerHierarchy& p, const Vec& v);

/// Dense solve with the base factor: returns H_b^{-1} v on the base level.
Vec base_solve(const PreconditionerHierarchy& p, const Vec& v);

struct OperatorDifference {
  double norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration estimate of sup |(H - T) v| / |v| in L2.
OperatorDifference operator_difference_norm(const HessianContext& fine, const PreconditionerHierarchy& p,
                                            int maxit = 30, double tol = 1e-4, std::uint64_t seed = 1);

}  // namespace nsk
