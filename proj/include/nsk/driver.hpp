#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsk/krylov.hpp"
#include "nsk/precond.hpp"

namespace nsk {

/// Nodal interpolant of u(x, y) = (10^3 (sign(y - 0.9) + 1) (y - 0.9)^2, 0).
ControlField target_control_field(const Level& level);

/// y_d = Y_h(u), p_d = P_h(u): the discrete state of the target control.
TargetData generate_target_data(const Multilevel& ml, int level, const ProblemParams& params,
                                const ControlField& u_target, const NewtonOptions& newton = {});

enum class LinearMethod { cg, mgcg };

std::string to_string(LinearMethod method);
LinearMethod parse_method(const std::string& name);

struct LinearConfig {
  LinearMethod method = LinearMethod::cg;
  double tol = 1e-8;
  /// Cells per side of the preconditioner base grid.
  int base_n = 32;
  CycleType cycle = CycleType::two_grid;
  int maxit = 1000;
  int inner_steps = 2;
  int threads = 0;
};

struct OuterOptions {
  double grad_tol = 1e-10;
  int max_newton = 10;
  NewtonOptions state;
};

/// One outer Newton iteration. grad_inf is measured at the iterate the step
/// starts from; the final entry of a converged run has lin_iters = 0.
struct NewtonStep {
  int iteration = 0;
  double grad_inf = 0.0;
  int lin_iters = 0;
  double lin_time = 0.0;
  double setup_time = 0.0;
  double total_time = 0.0;
  std::string status;
};

struct NewtonReport {
  int level_n = 0;
  LinearMethod method = LinearMethod::cg;
  int base_n = 0;
  std::vector<NewtonStep> steps;
  int newton_iters = 0;
  double lin_time = 0.0;
  double total_time = 0.0;
  double final_grad_inf = 0.0;
  bool converged = false;
  bool nc = false;
  std::string message;
};

struct NewtonResult {
  ControlField u;
  NewtonReport report;
};

/// Newton on the reduced problem at one level. Each step solves H du = -grad
/// by CG or MGCG; the preconditioner is rebuilt at every iterate. A preconditioner
/// that is not positive definite ends the run with nc = true.
NewtonResult newton_solve(const Multilevel& ml, int level, const ProblemParams& params, const TargetData& targets,
                          const LinearConfig& linear, const ControlField& u0, const OuterOptions& outer = {});

/// Grid continuation over levels [first, last]: zero start on `first`, then the
/// prolonged solution of the previous level. For MGCG, levels at or below the
/// base grid are solved with plain CG and reported as such.
struct ContinuationResult {
  ControlField u;
  std::vector<NewtonReport> reports;
};
ContinuationResult continuation_solve(const Multilevel& ml, const ProblemParams& params,
                                      const std::vector<TargetData>& targets_per_level, const LinearConfig& linear,
                                      int first, int last, const OuterOptions& outer = {});

/// One parameter tuple of a benchmark: CG and MGCG arms over the same levels.
struct BenchRecord {
  ProblemParams params;
  LinearConfig linear;
  std::vector<NewtonReport> cg;
  std::vector<NewtonReport> mgcg;
  /// t_cg / t_mg at the finest level (linear-solve time), or NaN.
  double efficiency = 0.0;
  std::string error;
};

struct BenchConfig {
  int n0 = 16;
  int levels = 3;
  int first_level = 1;
  std::vector<double> nus{0.1};
  std::vector<double> betas{1e-4};
  std::vector<double> gamma_ps{0.0};
  double gamma_y = 1.0;
  LinearConfig linear;
  OuterOptions outer;
  bool run_cg = true;
  bool run_mgcg = true;
};

double efficiency_ratio(const NewtonReport& cg, const NewtonReport& mgcg);

std::vector<BenchRecord> run_benchmark(const BenchConfig& config);

enum class FrozenControl { target, minimizer };

struct OrderStudyConfig {
  int n0 = 8;
  int levels = 4;
  /// Fine levels studied; each uses a two-grid hierarchy with base = level - 1.
  std::vector<int> study_levels{1, 2, 3};
  ProblemParams params;
  FrozenControl frozen = FrozenControl::target;
  int power_maxit = 30;
  double power_tol = 1e-4;
  int lanczos_k = 40;
  bool spectral = true;
  std::uint64_t seed = 1;
  LinearConfig linear;
  OuterOptions outer;
};

struct OrderRow {
  int n = 0;
  double difference_norm = 0.0;
  double spectral_distance = 0.0;
  double difference_ratio = 0.0;  ///< relative to the previous row, NaN for the first
  double distance_ratio = 0.0;
  bool not_positive_definite = false;
};

std::vector<OrderRow> run_order_study(const OrderStudyConfig& config);

/// Manufactured solution: y = curl of a x^2 (1-x)^2 y^2 (1-y)^2, p = pa cos(pi x) cos(pi y),
/// forcing -nu lap y + (y.grad) y + grad p.
struct MmsConfig {
  std::vector<int> ns{8, 16, 32};
  double nu = 1.0;
  double amplitude = 1.0;
  double pressure_amplitude = 1.0;
};

struct MmsRow {
  int n = 0;
  double velocity_l2 = 0.0;
  double velocity_h1 = 0.0;
  double pressure_l2 = 0.0;
  double velocity_l2_order = 0.0;  ///< NaN for the first row
  double velocity_h1_order = 0.0;
  double pressure_l2_order = 0.0;
};

std::vector<MmsRow> run_mms(const MmsConfig& config);

}  // namespace nsk
