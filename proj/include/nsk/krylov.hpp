#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "nsk/grid.hpp"

namespace nsk {

/// Linear action on coefficient arrays. Self-adjointness is always meant in
/// the inner product (a, b) = a^T M b of the mass matrix passed alongside.
using LinearAction = std::function<Vec(const Vec&)>;

struct KrylovReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  bool breakdown = false;
  std::string message;
};

struct KrylovResult {
  Vec x;
  KrylovReport report;
};

/// Preconditioned conjugate gradients in the mass inner product.
///
/// Stops when |rhs - op x|_M <= tol |rhs|_M, after maxit steps, or on
/// breakdown ((p, op p)_M <= 0 or (r, prec r)_M <= 0). An empty `prec` is the
/// identity. With no initial guess the first residual is rhs itself, so
/// `iterations` counts op applications; with an initial guess one more
/// application is made for the initial residual.
KrylovResult pcg(const LinearAction& op, const LinearAction& prec, const SpMat& mass, const Vec& rhs,
                 double tol, int maxit, const Vec* x0 = nullptr);

/// Seeded start vector with entries uniform in [-1, 1].
Vec random_vector(Eigen::Index size, std::uint64_t seed);

struct SpectralEstimate {
  double value = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
};

/// max |ln lambda| over the extremal Ritz values of H w = lambda T w, from k
/// steps of Lanczos on T^{-1} H in the T inner product with full
/// reorthogonalization.
SpectralEstimate lanczos_spectral_distance(const LinearAction& op_h, const LinearAction& op_tinv,
                                           const SpMat& mass, int k, std::uint64_t seed);

/// Largest |eigenvalue| of an M-self-adjoint operator by power iteration.
/// Stops when the estimate changes by at most tol relative, or after maxit.
SpectralEstimate power_iteration_symmetric(const LinearAction& op_d, const SpMat& mass, int maxit, double tol,
                                           std::uint64_t seed);

}  // namespace nsk
