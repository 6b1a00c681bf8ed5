#include "nsk/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "nsk/error.hpp"

namespace nsk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

ControlField target_control_field(const Level& level) {
  const VectorFunction f = [](double, double y) -> std::array<double, 2> {
    const double d = y - 0.9;
    return {1e3 * (sign(d) + 1.0) * d * d, 0.0};
  };
  return {level.n(), interpolate(level, f)};
}

TargetData generate_target_data(const Multilevel& ml, int level, const ProblemParams& params,
                                const ControlField& u_target, const NewtonOptions& newton) {
  StateSolution s = solve_navier_stokes(ml, level, params, u_target, newton);
  return {std::move(s.y), std::move(s.p)};
}

std::string to_string(LinearMethod method) { return method == LinearMethod::cg ? "cg" : "mgcg"; }

LinearMethod parse_method(const std::string& name) {
  if (name == "cg") return LinearMethod::cg;
  if (name == "mgcg") return LinearMethod::mgcg;
  throw InvalidArgument("unknown linear method '" + name + "' (expected cg or mgcg)");
}

NewtonResult newton_solve(const Multilevel& ml, int level, const ProblemParams& params, const TargetData& targets,
                          const LinearConfig& linear, const ControlField& u0, const OuterOptions& outer) {
  const auto run_start = Clock::now();
  NewtonResult out;
  NewtonReport& rep = out.report;
  rep.level_n = ml.level(level).n();
  rep.method = linear.method;
  rep.base_n = linear.method == LinearMethod::mgcg ? linear.base_n : 0;
  int base_level = -1;
  if (linear.method == LinearMethod::mgcg) {
    base_level = ml.index_of(linear.base_n);
    if (base_level > level) throw InvalidArgument("MGCG base grid is finer than the solve level");
  }
  const SpMat& mass = ml.blocks(level).vector_mass.matrix;
  ControlField u = u0;

  for (int it = 0;; ++it) {
    const auto step_start = Clock::now();
    NewtonStep step;
    step.iteration = it;
    try {
      const HessianContext ctx = make_context(ml, level, params, u, targets, outer.state);
      const ControlField grad = eval_gradient(ctx);
      step.grad_inf = grad.coeffs.lpNorm<Eigen::Infinity>();
      rep.final_grad_inf = step.grad_inf;
      if (step.grad_inf <= outer.grad_tol) {
        rep.converged = true;
        step.status = "converged";
        step.total_time = seconds_since(step_start);
        rep.steps.push_back(step);
        break;
      }
      if (it == outer.max_newton) {
        step.status = "maxit";
        step.total_time = seconds_since(step_start);
        rep.steps.push_back(step);
        rep.message = "no convergence within " + std::to_string(outer.max_newton) + " Newton iterations";
        break;
      }

      const int n = ctx.n();
      const LinearAction op = [&](const Vec& v) { return hessian_apply(ctx, {n, v}).coeffs; };
      std::optional<PreconditionerHierarchy> hierarchy;
      LinearAction prec;
      if (linear.method == LinearMethod::mgcg) {
        PreconditionerOptions po;
        po.base_level = base_level;
        po.cycle = linear.cycle;
        po.inner_steps = linear.inner_steps;
        po.threads = linear.threads;
        po.newton = outer.state;
        hierarchy.emplace(build_preconditioner(ctx, po));
        step.setup_time = hierarchy->setup_seconds;
        const PreconditionerHierarchy& h = *hierarchy;
        prec = [&h](const Vec& v) { return apply_inverse(h, v); };
      }

      const Vec rhs = -grad.coeffs;
      const auto lin_start = Clock::now();
      KrylovResult sol;
      bool nc = false;
      std::string nc_message;
      if (hierarchy && hierarchy->not_positive_definite) {
        nc = true;
        nc_message = hierarchy->message;
      } else {
        try {
          sol = pcg(op, prec, mass, rhs, linear.tol, linear.maxit);
        } catch (const NotPositiveDefinite& e) {
          nc = true;
          nc_message = e.what();
        }
        if (!nc && sol.report.breakdown && linear.method == LinearMethod::mgcg) {
          nc = true;
          nc_message = sol.report.message;
        }
      }
      step.lin_time = seconds_since(lin_start);
      step.lin_iters = sol.report.iterations;
      rep.lin_time += step.lin_time;
      if (nc) {
        step.status = "nc";
        step.total_time = seconds_since(step_start);
        rep.steps.push_back(step);
        rep.nc = true;
        rep.message = nc_message;
        break;
      }
      if (sol.report.breakdown) {
        step.status = "breakdown";
        rep.message = "CG breakdown at Newton step " + std::to_string(it) + ": " + sol.report.message;
        if (sol.report.iterations == 0) {
          step.total_time = seconds_since(step_start);
          rep.steps.push_back(step);
          break;
        }
      } else {
        step.status = sol.report.converged ? "ok" : "linear_maxit";
      }
      u.coeffs += sol.x;
      ++rep.newton_iters;
      step.total_time = seconds_since(step_start);
      rep.steps.push_back(step);
    } catch (const Error& e) {
      // State or saddle solve failures at this iterate end the run.
      step.status = "error";
      step.total_time = seconds_since(step_start);
      rep.steps.push_back(step);
      rep.message = e.what();
      break;
    }
  }
  rep.total_time = seconds_since(run_start);
  out.u = std::move(u);
  return out;
}

ContinuationResult continuation_solve(const Multilevel& ml, const ProblemParams& params,
                                      const std::vector<TargetData>& targets_per_level, const LinearConfig& linear,
                                      int first, int last, const OuterOptions& outer) {
  if (first < 0 || last >= ml.size() || first > last) throw InvalidArgument("continuation: bad level range");
  if (static_cast<int>(targets_per_level.size()) <= last) {
    throw InvalidArgument("continuation: targets missing for some levels");
  }
  ContinuationResult out;
  ControlField u{ml.level(first).n(), Vec::Zero(ml.level(first).velocity_size())};
  for (int l = first; l <= last; ++l) {
    if (l > first) u = prolong_control(ml.transfer(l), u);
    LinearConfig cfg = linear;
    if (cfg.method == LinearMethod::mgcg && ml.level(l).n() <= cfg.base_n) cfg.method = LinearMethod::cg;
    NewtonResult r = newton_solve(ml, l, params, targets_per_level[l], cfg, u, outer);
    u = std::move(r.u);
    const bool stop = r.report.nc || !r.report.converged;
    out.reports.push_back(std::move(r.report));
    if (stop) break;
  }
  out.u = std::move(u);
  return out;
}

double efficiency_ratio(const NewtonReport& cg, const NewtonReport& mgcg) {
  if (mgcg.nc || !cg.converged || !mgcg.converged || mgcg.lin_time <= 0.0) return kNaN;
  return cg.lin_time / mgcg.lin_time;
}

std::vector<BenchRecord> run_benchmark(const BenchConfig& config) {
  std::vector<BenchRecord> records;
  if (config.nus.empty() || config.betas.empty() || config.gamma_ps.empty()) return records;
  const Multilevel ml(config.n0, config.levels);
  const int last = config.levels - 1;
  for (double nu : config.nus) {
    std::vector<TargetData> targets;
    std::string data_error;
    try {
      ProblemParams base;
      base.nu = nu;
      for (int l = 0; l <= last; ++l) {
        targets.push_back(generate_target_data(ml, l, base, target_control_field(ml.level(l)), config.outer.state));
      }
    } catch (const Error& e) {
      data_error = e.what();
    }
    for (double beta : config.betas) {
      for (double gamma_p : config.gamma_ps) {
        BenchRecord rec;
        rec.params = {nu, beta, config.gamma_y, gamma_p};
        rec.linear = config.linear;
        rec.efficiency = kNaN;
        if (!data_error.empty()) {
          rec.error = data_error;
          records.push_back(std::move(rec));
          continue;
        }
        try {
          rec.params.validate();
          if (config.run_cg) {
            LinearConfig cg = config.linear;
            cg.method = LinearMethod::cg;
            rec.cg = continuation_solve(ml, rec.params, targets, cg, config.first_level, last, config.outer).reports;
          }
          if (config.run_mgcg) {
            LinearConfig mg = config.linear;
            mg.method = LinearMethod::mgcg;
            rec.mgcg =
                continuation_solve(ml, rec.params, targets, mg, config.first_level, last, config.outer).reports;
          }
          if (!rec.cg.empty() && !rec.mgcg.empty() && rec.cg.back().level_n == rec.mgcg.back().level_n) {
            rec.efficiency = efficiency_ratio(rec.cg.back(), rec.mgcg.back());
          }
        } catch (const Error& e) {
          rec.error = e.what();
        }
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

std::vector<OrderRow> run_order_study(const OrderStudyConfig& config) {
  const Multilevel ml(config.n0, config.levels);
  std::vector<OrderRow> rows;
  int top = 0;
  for (int l : config.study_levels) {
    if (l < 1 || l >= ml.size()) throw InvalidArgument("order study level " + std::to_string(l) + " out of range");
    top = std::max(top, l);
  }
  std::vector<TargetData> targets;
  std::vector<ControlField> controls;
  for (int l = 0; l <= top; ++l) {
    const ControlField ut = target_control_field(ml.level(l));
    targets.push_back(generate_target_data(ml, l, config.params, ut, config.outer.state));
    controls.push_back(ut);
  }
  if (config.frozen == FrozenControl::minimizer) {
    LinearConfig cg = config.linear;
    cg.method = LinearMethod::cg;
    ControlField u{ml.level(0).n(), Vec::Zero(ml.level(0).velocity_size())};
    for (int l = 0; l <= top; ++l) {
      if (l > 0) u = prolong_control(ml.transfer(l), u);
      NewtonResult r = newton_solve(ml, l, config.params, targets[l], cg, u, config.outer);
      if (!r.report.converged) throw Error("order study: minimizer did not converge at n=" +
                                           std::to_string(ml.level(l).n()));
      u = std::move(r.u);
      controls[l] = u;
    }
  }

  for (int l : config.study_levels) {
    OrderRow row;
    row.n = ml.level(l).n();
    const HessianContext ctx = make_context(ml, l, config.params, controls[l], targets[l], config.outer.state);
    PreconditionerOptions po;
    po.base_level = l - 1;
    po.cycle = CycleType::two_grid;
    po.threads = config.linear.threads;
    po.newton = config.outer.state;
    const PreconditionerHierarchy p = build_preconditioner(ctx, po);
    row.not_positive_definite = p.not_positive_definite;
    row.difference_norm = operator_difference_norm(ctx, p, config.power_maxit, config.power_tol, config.seed).norm;
    row.spectral_distance = kNaN;
    if (config.spectral && !p.not_positive_definite) {
      const int n = ctx.n();
      const LinearAction op_h = [&](const Vec& v) { return hessian_apply(ctx, {n, v}).coeffs; };
      const LinearAction op_t = [&](const Vec& v) { return apply_inverse(p, v); };
      const SpectralEstimate est =
          lanczos_spectral_distance(op_h, op_t, ml.blocks(l).vector_mass.matrix, config.lanczos_k, config.seed);
      row.spectral_distance = est.breakdown ? kNaN : est.value;
      if (est.breakdown) row.not_positive_definite = true;
    }
    row.difference_ratio = rows.empty() ? kNaN : row.difference_norm / rows.back().difference_norm;
    row.distance_ratio = rows.empty() ? kNaN : row.spectral_distance / rows.back().spectral_distance;
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Stream function psi = a x^2 (1-x)^2 y^2 (1-y)^2 factored as a X(x) Y(y).
struct Poly {
  double v, d1, d2, d3;
};

Poly quartic(double t) {
  const double s = 1.0 - t;
  return {t * t * s * s, 2.0 * t * s * (1.0 - 2.0 * t), 2.0 * (1.0 - 6.0 * t + 6.0 * t * t), 24.0 * t - 12.0};
}

}  // namespace

std::vector<MmsRow> run_mms(const MmsConfig& config) {
  const double a = config.amplitude;
  const double pa = config.pressure_amplitude;
  const double nu = config.nu;
  const VectorFunction exact = [a](double x, double y) -> std::array<double, 2> {
    const Poly X = quartic(x);
    const Poly Y = quartic(y);
    return {a * X.v * Y.d1, -a * X.d1 * Y.v};
  };
  const auto grad = [a](double x, double y) -> std::array<double, 4> {
    const Poly X = quartic(x);
    const Poly Y = quartic(y);
    return {a * X.d1 * Y.d1, a * X.v * Y.d2, -a * X.d2 * Y.v, -a * X.d1 * Y.d1};
  };
  // Not in Q1, so the pressure error shows its own rate; mean zero on the square.
  const double pi = std::acos(-1.0);
  const ScalarFunction pressure = [pa, pi](double x, double y) { return pa * std::cos(pi * x) * std::cos(pi * y); };
  const VectorFunction forcing = [a, pa, nu, pi](double x, double y) -> std::array<double, 2> {
    const Poly X = quartic(x);
    const Poly Y = quartic(y);
    const double y1 = a * X.v * Y.d1;
    const double y2 = -a * X.d1 * Y.v;
    const double lap1 = a * (X.d2 * Y.d1 + X.v * Y.d3);
    const double lap2 = -a * (X.d3 * Y.v + X.d1 * Y.d2);
    const double conv1 = y1 * (a * X.d1 * Y.d1) + y2 * (a * X.v * Y.d2);
    const double conv2 = y1 * (-a * X.d2 * Y.v) + y2 * (-a * X.d1 * Y.d1);
    const double px = -pa * pi * std::sin(pi * x) * std::cos(pi * y);
    const double py = -pa * pi * std::cos(pi * x) * std::sin(pi * y);
    return {-nu * lap1 + conv1 + px, -nu * lap2 + conv2 + py};
  };

  std::vector<MmsRow> rows;
  for (int n : config.ns) {
    const Multilevel ml(n, 1);
    const Level& lv = ml.level(0);
    const Vec load = load_vector(lv, forcing);
    const StateSolution s = solve_navier_stokes_load(ml, 0, nu, load);
    MmsRow row;
    row.n = n;
    const VelocityErrors ve = velocity_errors(lv, s.y.coeffs, exact, grad);
    row.velocity_l2 = ve.l2;
    row.velocity_h1 = ve.h1;
    row.pressure_l2 = pressure_l2_error(lv, s.p.coeffs, pressure);
    if (rows.empty()) {
      row.velocity_l2_order = row.velocity_h1_order = row.pressure_l2_order = kNaN;
    } else {
      const MmsRow& prev = rows.back();
      const double lr = std::log(static_cast<double>(n) / prev.n);
      row.velocity_l2_order = std::log(prev.velocity_l2 / row.velocity_l2) / lr;
      row.velocity_h1_order = std::log(prev.velocity_h1 / row.velocity_h1) / lr;
      row.pressure_l2_order = std::log(prev.pressure_l2 / row.pressure_l2) / lr;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nsk
