#include <doctest.h>

#include <cmath>

#include "nsk/driver.hpp"
#include "nsk/error.hpp"

using namespace nsk;

TEST_CASE("target control values at nodes") {
  const Level lv(10);
  const ControlField u = target_control_field(lv);
  double top = 0.0;
  for (int i = 0; i < lv.q2_count(); ++i) {
    const auto x = lv.q2_node(i);
    const double expected = x[1] > 0.9 ? 2e3 * (x[1] - 0.9) * (x[1] - 0.9) : 0.0;
    CHECK(u.coeffs[i] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(u.coeffs[lv.q2_count() + i] == 0.0);
    top = std::max(top, u.coeffs[i]);
  }
  CHECK(top == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("method names") {
  CHECK(parse_method("mgcg") == LinearMethod::mgcg);
  CHECK(to_string(LinearMethod::cg) == "cg");
  CHECK_THROWS_AS(parse_method("gmres"), InvalidArgument);
}

TEST_CASE("Newton converges and reports per step") {
  const Multilevel ml(8, 1);
  ProblemParams p;
  const TargetData td = generate_target_data(ml, 0, p, target_control_field(ml.level(0)));
  const NewtonResult r = newton_solve(ml, 0, p, td, {}, {8, Vec::Zero(ml.level(0).velocity_size())});
  CHECK(r.report.converged);
  CHECK_FALSE(r.report.nc);
  CHECK(r.report.newton_iters <= 4);
  CHECK(r.report.final_grad_inf <= 1e-10);
  REQUIRE(r.report.steps.size() == static_cast<std::size_t>(r.report.newton_iters + 1));
  CHECK(r.report.steps.back().status == "converged");
  CHECK(r.report.steps.back().lin_iters == 0);
  double lin = 0.0;
  for (const NewtonStep& s : r.report.steps) lin += s.lin_time;
  CHECK(lin == r.report.lin_time);
  // gradient decreases monotonically near the solution
  for (std::size_t k = 1; k < r.report.steps.size(); ++k) {
    CHECK(r.report.steps[k].grad_inf < r.report.steps[k - 1].grad_inf);
  }
}

TEST_CASE("zero Newton budget reports maxit without a linear solve") {
  const Multilevel ml(4, 1);
  ProblemParams p;
  const TargetData td = generate_target_data(ml, 0, p, target_control_field(ml.level(0)));
  OuterOptions o;
  o.max_newton = 0;
  const NewtonResult r = newton_solve(ml, 0, p, td, {}, {4, Vec::Zero(ml.level(0).velocity_size())}, o);
  CHECK_FALSE(r.report.converged);
  REQUIRE(r.report.steps.size() == 1);
  CHECK(r.report.steps[0].status == "maxit");
}

TEST_CASE("grid continuation: MGCG levels at or below the base use CG") {
  const Multilevel ml(4, 3);
  ProblemParams p;
  std::vector<TargetData> targets;
  for (int l = 0; l < 3; ++l) targets.push_back(generate_target_data(ml, l, p, target_control_field(ml.level(l))));
  LinearConfig lc;
  lc.method = LinearMethod::mgcg;
  lc.base_n = 8;
  const ContinuationResult r = continuation_solve(ml, p, targets, lc, 0, 2);
  REQUIRE(r.reports.size() == 3);
  CHECK(r.reports[0].method == LinearMethod::cg);
  CHECK(r.reports[1].method == LinearMethod::cg);
  CHECK(r.reports[2].method == LinearMethod::mgcg);
  CHECK(r.reports[2].base_n == 8);
  CHECK(r.reports[2].converged);
  CHECK(r.u.n == 16);
  // the warm start needs fewer Newton steps than the cold one
  CHECK(r.reports[2].newton_iters <= r.reports[0].newton_iters);
}

TEST_CASE("efficiency ratio") {
  NewtonReport cg, mg;
  cg.converged = mg.converged = true;
  cg.lin_time = 3.0;
  mg.lin_time = 1.5;
  CHECK(efficiency_ratio(cg, mg) == 2.0);
  mg.nc = true;
  CHECK(std::isnan(efficiency_ratio(cg, mg)));
  mg.nc = false;
  cg.converged = false;
  CHECK(std::isnan(efficiency_ratio(cg, mg)));
}

TEST_CASE("benchmark over an empty grid returns no records") {
  BenchConfig c;
  c.n0 = 4;
  c.levels = 1;
  c.betas.clear();
  CHECK(run_benchmark(c).empty());
}

TEST_CASE("manufactured solution with zero amplitude is reproduced exactly") {
  MmsConfig c;
  c.ns = {4, 8};
  c.amplitude = 0.0;
  c.pressure_amplitude = 0.0;
  const std::vector<MmsRow> rows = run_mms(c);
  REQUIRE(rows.size() == 2);
  for (const MmsRow& r : rows) {
    CHECK(r.velocity_l2 == 0.0);
    CHECK(r.pressure_l2 == 0.0);
  }
}

TEST_CASE("manufactured Stokes-like solution: errors decrease") {
  MmsConfig c;
  c.ns = {4, 8};
  const std::vector<MmsRow> rows = run_mms(c);
  CHECK(std::isnan(rows[0].velocity_l2_order));
  CHECK(rows[1].velocity_l2 < rows[0].velocity_l2 / 4.0);
  CHECK(rows[1].velocity_h1 < rows[0].velocity_h1 / 2.0);
}
