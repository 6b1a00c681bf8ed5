#include "nsk/precond.hpp"

#include <chrono>
#include <cmath>

#include "nsk/error.hpp"
#include "nsk/krylov.hpp"
#include "nsk/parallel.hpp"

namespace nsk {

std::string to_string(CycleType cycle) { return cycle == CycleType::two_grid ? "two_grid" : "w_cycle"; }

CycleType parse_cycle(const std::string& name) {
  if (name == "two_grid") return CycleType::two_grid;
  if (name == "w_cycle") return CycleType::w_cycle;
  throw InvalidArgument("unknown cycle '" + name + "' (expected two_grid or w_cycle)");
}

namespace {

// Forms M_b H_b column by column; returns false if the Cholesky factorization
// of the symmetrized matrix fails.
bool factor_base(PreconditionerHierarchy& p, const HessianContext& ctx, int threads) {
  const SpMat& mass = p.ml->blocks(ctx.level).vector_mass.matrix;
  const int size = static_cast<int>(mass.rows());
  auto g = std::make_shared<Eigen::MatrixXd>(size, size);
  Eigen::MatrixXd& gm = *g;
  parallel_for(size, threads, [&](int j) {
    Vec e = Vec::Zero(size);
    e[j] = 1.0;
    const HessianParts parts = hessian_parts(ctx, {ctx.n(), e});
    gm.col(j) = mass * (ctx.params.beta * e + parts.zeta.coeffs);
  });

  double asym = 0.0;
  const double scale = gm.cwiseAbs().maxCoeff();
  for (int j = 0; j < size; ++j) {
    for (int i = j + 1; i < size; ++i) {
      asym = std::max(asym, std::abs(gm(i, j) - gm(j, i)));
      gm(i, j) = 0.5 * (gm(i, j) + gm(j, i));
    }
  }
  p.base_asymmetry = scale > 0.0 ? asym / scale : 0.0;
  if (p.base_asymmetry > 1e-9) {
    throw Error("base Hessian is not symmetric (relative asymmetry " + std::to_string(p.base_asymmetry) + ")");
  }

  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(gm);
  if (llt.info() != Eigen::Success) return false;
  gm.triangularView<Eigen::StrictlyUpper>().setZero();
  p.base_factor = std::move(g);
  return true;
}

Vec inverse_at(const PreconditionerHierarchy& p, int level, const Vec& v);

Vec coarse_inverse(const PreconditionerHierarchy& p, int coarse, const Vec& c) {
  if (coarse == p.base_level || p.cycle == CycleType::two_grid) return inverse_at(p, coarse, c);
  const HessianContext& ctx = p.context(coarse);
  const SpMat& mass = p.ml->blocks(coarse).vector_mass.matrix;
  const int n = ctx.n();
  const LinearAction op = [&](const Vec& x) { return hessian_apply(ctx, {n, x}).coeffs; };
  const LinearAction prec = [&](const Vec& x) { return inverse_at(p, coarse, x); };
  KrylovResult res = pcg(op, prec, mass, c, 0.0, p.inner_steps);
  if (res.report.breakdown) {
    throw NotPositiveDefinite("W-cycle inner iteration on n=" + std::to_string(n) + ": " + res.report.message);
  }
  return res.x;
}

Vec inverse_at(const PreconditionerHierarchy& p, int level, const Vec& v) {
  if (level == p.base_level) return base_solve(p, v);
  const Transfer& t = p.ml->transfer(level);
  const Vec c = t.project(v);
  const Vec y = coarse_inverse(p, level - 1, c);
  return t.prolong(y) + (v - t.prolong(c)) / p.beta;
}

}  // namespace

PreconditionerHierarchy build_preconditioner(const HessianContext& fine, const PreconditionerOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (options.base_level < 0 || options.base_level > fine.level) {
    throw InvalidArgument("base level " + std::to_string(options.base_level) + " is not at or below level " +
                          std::to_string(fine.level));
  }
  if (options.inner_steps < 1) throw InvalidArgument("W-cycle needs at least one inner step");
  PreconditionerHierarchy p;
  p.ml = fine.ml;
  p.fine_level = fine.level;
  p.base_level = options.base_level;
  p.cycle = options.cycle;
  p.inner_steps = options.inner_steps;
  p.beta = fine.params.beta;

  if (p.base_level == p.fine_level) {
    p.contexts.push_back(fine);
  } else {
    std::vector<HessianContext> down;
    ControlField u = fine.u;
    TargetData targets = fine.targets;
    for (int k = fine.level - 1; k >= p.base_level; --k) {
      u = project_control(fine.ml->transfer(k + 1), u);
      targets = project_targets(*fine.ml, k + 1, targets);
      down.push_back(make_context(*fine.ml, k, fine.params, u, targets, options.newton));
    }
    p.contexts.assign(std::make_move_iterator(down.rbegin()), std::make_move_iterator(down.rend()));
  }

  const int threads = options.threads > 0 ? options.threads : worker_threads();
  if (!factor_base(p, p.contexts.front(), threads)) {
    p.not_positive_definite = true;
    p.message = "base Hessian at n=" + std::to_string(p.contexts.front().n()) + " is not positive definite";
  }
  p.setup_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

Vec base_solve(const PreconditionerHierarchy& p, const Vec& v) {
  if (p.not_positive_definite || !p.base_factor) throw NotPositiveDefinite(p.message);
  const Eigen::MatrixXd& l = *p.base_factor;
  if (v.size() != l.rows()) throw LevelMismatch("base_solve: vector is not on the base level");
  Vec x = p.ml->blocks(p.base_level).vector_mass.matrix * v;
  l.triangularView<Eigen::Lower>().solveInPlace(x);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Vec apply_inverse(const PreconditionerHierarchy& p, const Vec& v) {
  if (v.size() != p.ml->level(p.fine_level).velocity_size()) {
    throw LevelMismatch("apply_inverse: vector is not on the fine level");
  }
  return inverse_at(p, p.fine_level, v);
}

Vec apply_forward(const PreconditionerHierarchy& p, const Vec& v) {
  if (v.size() != p.ml->level(p.fine_level).velocity_size()) {
    throw LevelMismatch("apply_forward: vector is not on the fine level");
  }
  if (p.base_level == p.fine_level) return hessian_apply(p.contexts.front(), {p.contexts.front().n(), v}).coeffs;
  if (p.cycle != CycleType::two_grid || p.base_level != p.fine_level - 1) {
    throw InvalidArgument("apply_forward needs a two-grid hierarchy with base = fine - 1");
  }
  const Transfer& t = p.ml->transfer(p.fine_level);
  const HessianContext& coarse = p.contexts.front();
  const Vec c = t.project(v);
  const Vec pc = t.prolong(c);
  return t.prolong(hessian_apply(coarse, {coarse.n(), c}).coeffs) + p.beta * (v - pc);
}

OperatorDifference operator_difference_norm(const HessianContext& fine, const PreconditionerHierarchy& p, int maxit,
                                            double tol, std::uint64_t seed) {
  if (fine.level != p.fine_level) throw LevelMismatch("operator_difference_norm: hierarchy built for another level");
  const int n = fine.n();
  const LinearAction d = [&](const Vec& v) { return Vec(hessian_apply(fine, {n, v}).coeffs - apply_forward(p, v)); };
  const SpectralEstimate est =
      power_iteration_symmetric(d, p.ml->blocks(fine.level).vector_mass.matrix, maxit, tol, seed);
  return {est.value, est.iterations, est.converged};
}

}  // namespace nsk
