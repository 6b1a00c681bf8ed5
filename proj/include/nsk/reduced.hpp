#pragma once

#include <memory>

#include "nsk/flow.hpp"

namespace nsk {

/// Tracking data y_d (vector Q2) and p_d (Q1, zero mean) on one level.
struct TargetData {
  VelocityField y_d;
  PressureField p_d;
};

/// Zero targets on level l.
TargetData zero_targets(const Multilevel& ml, int level);

/// L2 projection of targets from level l to level l-1.
TargetData project_targets(const Multilevel& ml, int level, const TargetData& fine);

/// Everything needed to evaluate cost, gradient and reduced Hessian at u.
///
/// zbar solves the transposed linearized system with momentum data
/// gamma_y M (y - y_d) and divergence data gamma_p M_q (p - p_d).
struct HessianContext {
  const Multilevel* ml = nullptr;
  int level = 0;
  ProblemParams params;
  ControlField u;
  StateSolution state;
  TargetData targets;
  VelocityField zbar;
  PressureField rho;
  std::shared_ptr<const SaddleFactorization> fact;
  /// gamma_y M + N2(zbar) + N2(zbar)^T: maps w to the momentum data of the
  /// second adjoint solve in a Hessian product.
  SpMat adjoint_coupling;

  int n() const { return ml->level(level).n(); }
};

HessianContext make_context(const Multilevel& ml, int level, const ProblemParams& params,
                            const ControlField& u, const TargetData& targets,
                            const NewtonOptions& newton = {});

/// (gamma_y/2)|y - y_d|^2 + (gamma_p/2)|p - p_d|^2 + (beta/2)|u|^2.
double eval_cost(const HessianContext& ctx);

/// L2 Riesz representative beta u + zbar of the derivative.
ControlField eval_gradient(const HessianContext& ctx);

/// H v = beta v + zeta. Two saddle solves with the stored factors.
ControlField hessian_apply(const HessianContext& ctx, const ControlField& v);

/// The pieces of one Hessian product, exposed for the polarization checks:
/// w = L v, r = M v (pressure sensitivity) and zeta.
struct HessianParts {
  VelocityField w;
  PressureField r;
  VelocityField zeta;
};
HessianParts hessian_parts(const HessianContext& ctx, const ControlField& v);

}  // namespace nsk
