#include "nsk/flow.hpp"

#include <cmath>
#include <optional>
#include <string>

#include <umfpack.h>

#include "nsk/error.hpp"

namespace nsk {

void ProblemParams::validate() const {
  if (!(nu > 0.0)) throw InvalidArgument("nu must be positive");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (gamma_y < 0.0 || gamma_p < 0.0) throw InvalidArgument("tracking weights must be nonnegative");
  if (gamma_y == 0.0 && gamma_p == 0.0) {
    throw InvalidArgument("gamma_y and gamma_p must not both be zero");
  }
}

namespace {

std::string umfpack_status(int status) { return "UMFPACK status " + std::to_string(status); }

// The bordered matrix is structurally symmetric with a zero pressure block.
// The symmetric strategy with AMD keeps fill (and time) four times lower than
// the default choice at n=64 and does not need iterative refinement.
void umfpack_control(double* control) {
  umfpack_di_defaults(control);
  control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_SYMMETRIC;
  control[UMFPACK_ORDERING] = UMFPACK_ORDERING_AMD;
  control[UMFPACK_IRSTEP] = 0;
}

SpMat bordered_matrix(const Level& level, const StokesBlocks& blocks, double nu, const VelocityField& y) {
  const int nv = level.velocity_size();
  const int np = level.q1_count();
  const int nq2 = level.q2_count();
  const int size = nv + np + 1;
  // Convection is always assembled so that the sparsity pattern does not
  // depend on whether y vanishes.
  const ConvectionMatrices conv = assemble_convection(level, y);
  const SpMat jac = nu * blocks.viscous.matrix + conv.advection + conv.reaction;
  const auto& bnd = level.boundary_mask();
  auto is_bnd = [&](int i) { return bnd[i % nq2] != 0; };

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(jac.nonZeros() + 2 * blocks.divergence.nonZeros() + 2 * np + nv);
  for (int k = 0; k < jac.outerSize(); ++k) {
    for (SpMat::InnerIterator it(jac, k); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (is_bnd(r) || is_bnd(c)) continue;
      t.emplace_back(r, c, it.value());
    }
  }
  for (int i = 0; i < nv; ++i) {
    if (is_bnd(i)) t.emplace_back(i, i, 1.0);
  }
  const SpMat& b = blocks.divergence;
  for (int k = 0; k < b.outerSize(); ++k) {
    for (SpMat::InnerIterator it(b, k); it; ++it) {
      const int q = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (is_bnd(c)) continue;
      t.emplace_back(nv + q, c, it.value());
      t.emplace_back(c, nv + q, it.value());
    }
  }
  for (int q = 0; q < np; ++q) {
    t.emplace_back(nv + q, nv + np, blocks.mean[q]);
    t.emplace_back(nv + np, nv + q, blocks.mean[q]);
  }
  SpMat k(size, size);
  k.setFromTriplets(t.begin(), t.end());
  k.makeCompressed();
  return k;
}

void check_compatible(const Vec& divergence) {
  const double sum = divergence.sum();
  const double scale = divergence.cwiseAbs().sum();
  if (std::abs(sum) > 1e-8 * scale + 1e-300 && std::abs(sum) > 1e-15) {
    throw IncompatibleData("divergence data has nonzero mean (sum " + std::to_string(sum) + ")");
  }
}

Vec assemble_rhs(const SaddleFactorization& fact, const Level& level, const Vec& momentum,
                 const Vec& divergence) {
  if (momentum.size() != fact.velocity_size() || divergence.size() != fact.pressure_size()) {
    throw LevelMismatch("saddle solve: right-hand side sizes do not match the factorization");
  }
  check_compatible(divergence);
  Vec rhs = Vec::Zero(fact.size());
  rhs.head(fact.velocity_size()) = momentum;
  level.zero_boundary(rhs);
  rhs.segment(fact.velocity_size(), fact.pressure_size()) = divergence;
  return rhs;
}

SaddleSolution split(const SaddleFactorization& fact, const Vec& x) {
  Vec w = x.head(fact.velocity_size());
  Vec r = x.segment(fact.velocity_size(), fact.pressure_size());
  return {{fact.level_n(), std::move(w)}, {fact.level_n(), std::move(r)}};
}

}  // namespace

SaddleFactorization::SaddleFactorization(const Level& level, const StokesBlocks& unit_blocks, double nu,
                                         const VelocityField& y)
    : n_(level.n()), nv_(level.velocity_size()), np_(level.q1_count()), y_(y) {
  if (y.n != level.n() || y.coeffs.size() != nv_) {
    throw LevelMismatch("factorize_linearized: state is not on level n=" + std::to_string(level.n()));
  }
  matrix_ = bordered_matrix(level, unit_blocks, nu, y);
  const int size = nv_ + np_ + 1;
  double control[UMFPACK_CONTROL];
  umfpack_control(control);
  const int* ap = matrix_.outerIndexPtr();
  const int* ai = matrix_.innerIndexPtr();
  const double* ax = matrix_.valuePtr();
  int status = umfpack_di_symbolic(size, size, ap, ai, ax, &symbolic_, control, nullptr);
  if (status != UMFPACK_OK) throw SingularMatrix("symbolic factorization failed: " + umfpack_status(status));
  status = umfpack_di_numeric(ap, ai, ax, symbolic_, &numeric_, control, nullptr);
  if (status != UMFPACK_OK) {
    umfpack_di_free_symbolic(&symbolic_);
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    throw SingularMatrix("linearized saddle-point matrix is singular: " + umfpack_status(status));
  }
}

SaddleFactorization::~SaddleFactorization() {
  if (numeric_) umfpack_di_free_numeric(&numeric_);
  if (symbolic_) umfpack_di_free_symbolic(&symbolic_);
}

SaddleFactorization::SaddleFactorization(SaddleFactorization&& o) noexcept
    : n_(o.n_), nv_(o.nv_), np_(o.np_), y_(std::move(o.y_)), matrix_(std::move(o.matrix_)),
      symbolic_(o.symbolic_), numeric_(o.numeric_) {
  o.symbolic_ = nullptr;
  o.numeric_ = nullptr;
}

SaddleFactorization& SaddleFactorization::operator=(SaddleFactorization&& o) noexcept {
  if (this != &o) {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    if (symbolic_) umfpack_di_free_symbolic(&symbolic_);
    n_ = o.n_;
    nv_ = o.nv_;
    np_ = o.np_;
    y_ = std::move(o.y_);
    matrix_ = std::move(o.matrix_);
    symbolic_ = o.symbolic_;
    numeric_ = o.numeric_;
    o.symbolic_ = nullptr;
    o.numeric_ = nullptr;
  }
  return *this;
}

Vec SaddleFactorization::run(int system, const Vec& rhs) const {
  if (rhs.size() != size()) throw LevelMismatch("saddle solve: right-hand side has wrong size");
  double control[UMFPACK_CONTROL];
  umfpack_control(control);
  Vec x(size());
  std::vector<int> wi(size());
  std::vector<double> w(size());
  const int status = umfpack_di_wsolve(system, matrix_.outerIndexPtr(), matrix_.innerIndexPtr(),
                                       matrix_.valuePtr(), x.data(), rhs.data(), numeric_, control,
                                       nullptr, wi.data(), w.data());
  if (status != UMFPACK_OK) throw SingularMatrix("saddle solve failed: " + umfpack_status(status));
  return x;
}

Vec SaddleFactorization::solve(const Vec& rhs) const { return run(UMFPACK_A, rhs); }

Vec SaddleFactorization::solve_transpose(const Vec& rhs) const { return run(UMFPACK_At, rhs); }

SaddleFactorization factorize_linearized(const Multilevel& ml, int level, const ProblemParams& params,
                                         const VelocityField& y) {
  return SaddleFactorization(ml.level(level), ml.blocks(level), params.nu, y);
}

SaddleSolution solve_linearized(const SaddleFactorization& fact, const Vec& momentum,
                                const Vec& divergence) {
  const Level level(fact.level_n());
  return split(fact, fact.solve(assemble_rhs(fact, level, momentum, divergence)));
}

SaddleSolution solve_adjoint(const SaddleFactorization& fact, const Vec& momentum,
                             const Vec& divergence) {
  const Level level(fact.level_n());
  return split(fact, fact.solve_transpose(assemble_rhs(fact, level, momentum, divergence)));
}

namespace {

// Residual of the bordered nonlinear system at x = (y, p, lambda).
Vec nonlinear_residual(const Level& level, const StokesBlocks& blocks, double nu, const Vec& load,
                       const Vec& x) {
  const int nv = level.velocity_size();
  const int np = level.q1_count();
  const VelocityField y{level.n(), x.head(nv)};
  const auto p = x.segment(np > 0 ? nv : 0, np);
  const double lambda = x[nv + np];
  const ConvectionMatrices conv = assemble_convection(level, y);
  Vec f(nv + np + 1);
  f.head(nv) = nu * (blocks.viscous.matrix * y.coeffs) + conv.advection * y.coeffs +
               blocks.divergence.transpose() * p - load;
  level.zero_boundary(f);
  f.segment(nv, np) = blocks.divergence * y.coeffs + lambda * blocks.mean;
  f[nv + np] = blocks.mean.dot(p);
  return f;
}

struct Attempt {
  Vec x;
  int iterations = 0;
  double residual = 0.0;
};

std::optional<Attempt> newton_attempt(const Level& level, const StokesBlocks& blocks, double nu,
                                      const Vec& load, Vec x, const NewtonOptions& opt, int& total_iters) {
  const int nv = level.velocity_size();
  Vec f = nonlinear_residual(level, blocks, nu, load, x);
  double res = f.lpNorm<Eigen::Infinity>();
  for (int it = 0; it <= opt.max_iterations; ++it) {
    if (res <= opt.tolerance) return Attempt{std::move(x), it, res};
    if (it == opt.max_iterations) break;
    const SaddleFactorization fact(level, blocks, nu, {level.n(), x.head(nv)});
    x -= fact.solve(f);
    ++total_iters;
    Vec f_new = nonlinear_residual(level, blocks, nu, load, x);
    const double res_new = f_new.lpNorm<Eigen::Infinity>();
    if (!(res_new < res)) {
      // Round-off floor: the previous iterate was already as good as it gets.
      if (res_new <= 10.0 * opt.tolerance) return Attempt{std::move(x), it + 1, res_new};
      return std::nullopt;
    }
    f = std::move(f_new);
    res = res_new;
  }
  return std::nullopt;
}

}  // namespace

StateSolution solve_navier_stokes_load(const Multilevel& ml, int level_index, double nu, const Vec& load,
                                       const NewtonOptions& options) {
  const Level& level = ml.level(level_index);
  const StokesBlocks& blocks = ml.blocks(level_index);
  const int nv = level.velocity_size();
  const int np = level.q1_count();
  if (load.size() != nv) throw LevelMismatch("solve_navier_stokes: load has wrong size");

  auto stokes_guess = [&](double visc) {
    const SaddleFactorization fact(level, blocks, visc, {level.n(), Vec::Zero(nv)});
    Vec rhs = Vec::Zero(nv + np + 1);
    rhs.head(nv) = load;
    level.zero_boundary(rhs);
    return fact.solve(rhs);
  };

  StateSolution out;
  int iters = 0;
  auto finish = [&](const Attempt& a, int steps) {
    Vec y = a.x.head(nv);
    level.zero_boundary(y);
    out.y = {level.n(), std::move(y)};
    out.p = {level.n(), a.x.segment(nv, np)};
    out.newton_iters = iters;
    out.continuation_steps = steps;
    out.residual = a.residual;
    return out;
  };

  if (load.lpNorm<Eigen::Infinity>() == 0.0) {
    return finish(Attempt{Vec::Zero(nv + np + 1), 0, 0.0}, 0);
  }

  if (auto a = newton_attempt(level, blocks, nu, load, stokes_guess(nu), options, iters)) return finish(*a, 0);

  // Viscosity continuation: find a larger viscosity where Newton converges
  // from the Stokes guess, then halve the gap to the target until it is reached.
  double nu_ok = nu;
  std::optional<Attempt> anchor;
  int steps = 0;
  while (!anchor) {
    nu_ok *= 2.0;
    if (++steps > options.max_continuation_steps) {
      throw NonlinearDivergence("no viscosity found at which Newton converges from the Stokes guess");
    }
    anchor = newton_attempt(level, blocks, nu_ok, load, stokes_guess(nu_ok), options, iters);
  }
  Vec x = anchor->x;
  double step = nu_ok - nu;
  while (true) {
    if (++steps > options.max_continuation_steps) {
      throw NonlinearDivergence("viscosity continuation stalled at nu=" + std::to_string(nu_ok) +
                                " (target " + std::to_string(nu) + ")");
    }
    const double nu_try = std::max(nu, nu_ok - step);
    auto a = newton_attempt(level, blocks, nu_try, load, x, options, iters);
    if (a) {
      if (nu_try == nu) return finish(*a, steps);
      x = a->x;
      nu_ok = nu_try;
      step *= 2.0;
    } else {
      step *= 0.5;
    }
  }
}

StateSolution solve_navier_stokes(const Multilevel& ml, int level, const ProblemParams& params,
                                  const ControlField& u, const NewtonOptions& options) {
  const Level& lv = ml.level(level);
  if (u.n != lv.n() || u.coeffs.size() != lv.velocity_size()) {
    throw LevelMismatch("solve_navier_stokes: control is not on level n=" + std::to_string(lv.n()));
  }
  const Vec load = ml.blocks(level).vector_mass.matrix * u.coeffs;
  return solve_navier_stokes_load(ml, level, params.nu, load, options);
}

double state_residual(const Multilevel& ml, int level, double nu, const Vec& load,
                      const StateSolution& state) {
  const Level& lv = ml.level(level);
  const int nv = lv.velocity_size();
  const int np = lv.q1_count();
  Vec x = Vec::Zero(nv + np + 1);
  x.head(nv) = state.y.coeffs;
  x.segment(nv, np) = state.p.coeffs;
  Vec f = nonlinear_residual(lv, ml.blocks(level), nu, load, x);
  // The multiplier is not part of the state; it only absorbs round-off.
  return std::max(f.head(nv).lpNorm<Eigen::Infinity>(), f.segment(nv, np).lpNorm<Eigen::Infinity>());
}

}  // namespace nsk
