#include "nsk/reduced.hpp"

#include <string>

#include "nsk/error.hpp"

namespace nsk {

namespace {

void check_on_level(const Multilevel& ml, int level, const VectorField& f, const char* what) {
  const Level& lv = ml.level(level);
  if (f.n != lv.n() || f.coeffs.size() != lv.velocity_size()) {
    throw LevelMismatch(std::string(what) + " is not on level n=" + std::to_string(lv.n()));
  }
}

}  // namespace

TargetData zero_targets(const Multilevel& ml, int level) {
  const Level& lv = ml.level(level);
  return {{lv.n(), Vec::Zero(lv.velocity_size())}, {lv.n(), Vec::Zero(lv.q1_count())}};
}

TargetData project_targets(const Multilevel& ml, int level, const TargetData& fine) {
  if (level < 1) throw InvalidArgument("project_targets: no coarser level below level 0");
  check_on_level(ml, level, fine.y_d, "target velocity");
  const Transfer& t = ml.transfer(level);
  return {{t.coarse_n(), t.project(fine.y_d.coeffs)}, {t.coarse_n(), t.project_pressure(fine.p_d.coeffs)}};
}

HessianContext make_context(const Multilevel& ml, int level, const ProblemParams& params,
                            const ControlField& u, const TargetData& targets, const NewtonOptions& newton) {
  params.validate();
  check_on_level(ml, level, u, "control");
  check_on_level(ml, level, targets.y_d, "target velocity");
  const Level& lv = ml.level(level);
  if (targets.p_d.n != lv.n() || targets.p_d.coeffs.size() != lv.q1_count()) {
    throw LevelMismatch("target pressure is not on level n=" + std::to_string(lv.n()));
  }
  const StokesBlocks& blocks = ml.blocks(level);

  HessianContext ctx;
  ctx.ml = &ml;
  ctx.level = level;
  ctx.params = params;
  ctx.u = u;
  ctx.targets = targets;
  ctx.state = solve_navier_stokes(ml, level, params, u, newton);
  ctx.fact = std::make_shared<const SaddleFactorization>(lv, blocks, params.nu, ctx.state.y);

  const Vec momentum = params.gamma_y * (blocks.vector_mass.matrix * (ctx.state.y.coeffs - targets.y_d.coeffs));
  Vec divergence = params.gamma_p * (blocks.q1_mass.matrix * (ctx.state.p.coeffs - targets.p_d.coeffs));
  // Both pressures have zero mean; remove the round-off so the data is compatible.
  divergence.array() -= divergence.mean();
  SaddleSolution adj = solve_adjoint(*ctx.fact, momentum, divergence);
  ctx.zbar = std::move(adj.velocity);
  ctx.rho = std::move(adj.pressure);

  const SpMat reaction = assemble_convection(lv, ctx.zbar).reaction;
  const SpMat reaction_t = reaction.transpose();
  ctx.adjoint_coupling = params.gamma_y * blocks.vector_mass.matrix + reaction + reaction_t;
  return ctx;
}

double eval_cost(const HessianContext& ctx) {
  const StokesBlocks& blocks = ctx.ml->blocks(ctx.level);
  const Vec dy = ctx.state.y.coeffs - ctx.targets.y_d.coeffs;
  const Vec dp = ctx.state.p.coeffs - ctx.targets.p_d.coeffs;
  const SpMat& m = blocks.vector_mass.matrix;
  return 0.5 * ctx.params.gamma_y * dy.dot(m * dy) + 0.5 * ctx.params.gamma_p * dp.dot(blocks.q1_mass.matrix * dp) +
         0.5 * ctx.params.beta * ctx.u.coeffs.dot(m * ctx.u.coeffs);
}

ControlField eval_gradient(const HessianContext& ctx) {
  return {ctx.u.n, ctx.params.beta * ctx.u.coeffs + ctx.zbar.coeffs};
}

HessianParts hessian_parts(const HessianContext& ctx, const ControlField& v) {
  check_on_level(*ctx.ml, ctx.level, v, "Hessian direction");
  const StokesBlocks& blocks = ctx.ml->blocks(ctx.level);
  const int np = ctx.fact->pressure_size();
  SaddleSolution lin = solve_linearized(*ctx.fact, blocks.vector_mass.matrix * v.coeffs, Vec::Zero(np));
  Vec divergence = ctx.params.gamma_p * (blocks.q1_mass.matrix * lin.pressure.coeffs);
  divergence.array() -= divergence.mean();
  SaddleSolution adj = solve_adjoint(*ctx.fact, ctx.adjoint_coupling * lin.velocity.coeffs, divergence);
  return {std::move(lin.velocity), std::move(lin.pressure), std::move(adj.velocity)};
}

ControlField hessian_apply(const HessianContext& ctx, const ControlField& v) {
  HessianParts parts = hessian_parts(ctx, v);
  return {v.n, ctx.params.beta * v.coeffs + parts.zeta.coeffs};
}

}  // namespace nsk
