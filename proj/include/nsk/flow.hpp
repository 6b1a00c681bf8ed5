#pragma once

#include <memory>

#include "nsk/forms.hpp"

namespace nsk {

/// Viscosity, Tikhonov weight and tracking weights of the control problem.
struct ProblemParams {
  double nu = 0.1;
  double beta = 1e-4;
  double gamma_y = 1.0;
  double gamma_p = 0.0;

  /// Throws InvalidArgument unless nu > 0, beta > 0, gammas >= 0 and not both zero.
  void validate() const;
};

/// Discrete Navier-Stokes state: velocity vanishing on the boundary and
/// mean-zero pressure.
struct StateSolution {
  VelocityField y;
  PressureField p;
  int newton_iters = 0;
  int continuation_steps = 0;
  double residual = 0.0;
};

/// Sparse LU factors of the bordered linearized Navier-Stokes matrix
///
///     [ nu A + N1(y) + N2(y)   B^T   0  ]
///     [ B                      0     m^T]
///     [ 0                      m     0  ]
///
/// with boundary velocity rows and columns replaced by the identity. The same
/// factors serve forward solves and transpose (adjoint) solves. Solves are
/// const and may run concurrently.
class SaddleFactorization {
 public:
  SaddleFactorization(const Level& level, const StokesBlocks& unit_blocks, double nu,
                      const VelocityField& y);
  ~SaddleFactorization();
  SaddleFactorization(const SaddleFactorization&) = delete;
  SaddleFactorization& operator=(const SaddleFactorization&) = delete;
  SaddleFactorization(SaddleFactorization&&) noexcept;
  SaddleFactorization& operator=(SaddleFactorization&&) noexcept;

  int level_n() const { return n_; }
  int velocity_size() const { return nv_; }
  int pressure_size() const { return np_; }
  /// Bordered system dimension nv + np + 1.
  int size() const { return nv_ + np_ + 1; }
  const VelocityField& state() const { return y_; }
  const SpMat& matrix() const { return matrix_; }

  /// Solves K x = rhs on the full bordered system.
  Vec solve(const Vec& rhs) const;
  /// Solves K^T x = rhs.
  Vec solve_transpose(const Vec& rhs) const;

 private:
  Vec run(int system, const Vec& rhs) const;

  int n_ = 0;
  int nv_ = 0;
  int np_ = 0;
  VelocityField y_;
  SpMat matrix_;
  void* symbolic_ = nullptr;
  void* numeric_ = nullptr;
};

/// Velocity/pressure pair returned by the linear saddle-point solves.
struct SaddleSolution {
  VelocityField velocity;
  PressureField pressure;
};

SaddleFactorization factorize_linearized(const Multilevel& ml, int level, const ProblemParams& params,
                                         const VelocityField& y);

/// w = L_h g, r = M_h g for momentum functional `momentum` (one entry per
/// vector Q2 dof; boundary entries ignored) and divergence functional
/// `divergence` (one entry per Q1 dof, must sum to zero).
SaddleSolution solve_linearized(const SaddleFactorization& fact, const Vec& momentum,
                                const Vec& divergence);
/// Transpose solve: a(z,phi) + c~(y;phi,z) + c~(phi;y,z) + b(phi,rho) = f(phi),
/// b(z,q) = d(q).
SaddleSolution solve_adjoint(const SaddleFactorization& fact, const Vec& momentum,
                             const Vec& divergence);

/// Options of the nonlinear state solve.
struct NewtonOptions {
  double tolerance = 1e-12;
  int max_iterations = 25;
  int max_continuation_steps = 40;
};

/// Solves the discrete state equation with right-hand side (u, phi).
StateSolution solve_navier_stokes(const Multilevel& ml, int level, const ProblemParams& params,
                                  const ControlField& u, const NewtonOptions& options = {});
/// Same with an arbitrary momentum load functional.
StateSolution solve_navier_stokes_load(const Multilevel& ml, int level, double nu, const Vec& load,
                                       const NewtonOptions& options = {});

/// Infinity norm of the discrete state residual over interior momentum rows
/// and the divergence rows.
double state_residual(const Multilevel& ml, int level, double nu, const Vec& load,
                      const StateSolution& state);

}  // namespace nsk
