#include <doctest.h>

#include <cmath>

#include "nsk/error.hpp"
#include "nsk/forms.hpp"
#include "nsk/krylov.hpp"

using namespace nsk;

TEST_CASE("level counts and node layout") {
  const Level lv(4);
  CHECK(lv.q2_side() == 9);
  CHECK(lv.q2_count() == 81);
  CHECK(lv.q1_count() == 25);
  CHECK(lv.velocity_size() == 162);
  CHECK(lv.q2_interior_count() == 49);

  int boundary = 0;
  for (int i = 0; i < lv.q2_count(); ++i) boundary += lv.on_boundary(i) ? 1 : 0;
  CHECK(boundary == lv.q2_count() - lv.q2_interior_count());

  // x runs fastest
  const auto a = lv.q2_node(lv.q2_index(3, 5));
  CHECK(a[0] == doctest::Approx(3.0 / 8.0));
  CHECK(a[1] == doctest::Approx(5.0 / 8.0));
  const auto b = lv.q1_node(lv.q1_index(1, 4));
  CHECK(b[0] == doctest::Approx(0.25));
  CHECK(b[1] == doctest::Approx(1.0));

  // cell (1,2): lower-left corner node is (2,4) on the Q2 lattice
  const auto cell = lv.cell_q2(1, 2);
  CHECK(cell[0] == lv.q2_index(2, 4));
  CHECK(cell[8] == lv.q2_index(4, 6));
  CHECK(lv.cell_q1(1, 2)[3] == lv.q1_index(2, 3));
}

TEST_CASE("hierarchy validation") {
  CHECK_THROWS_AS(build_hierarchy(1, 2), InvalidArgument);
  CHECK_THROWS_AS(build_hierarchy(4, 0), InvalidArgument);
  const MeshHierarchy h = build_hierarchy(2, 4);
  CHECK(h.size() == 4);
  CHECK(h.level(3).n() == 16);
  CHECK(h.index_of(8) == 2);
  CHECK_THROWS_AS(h.index_of(6), InvalidArgument);
  CHECK_THROWS(q2_prolongation(Level(4), Level(12)));
}

TEST_CASE("prolongation reproduces coarse biquadratics exactly") {
  const Level c(4), f(8);
  const SpMat p = q2_prolongation(c, f);
  auto poly = [](double x, double y) { return 1.0 + 2.0 * x - y + 3.0 * x * x * y * y - x * y * y; };
  Vec vc(c.q2_count()), vf(f.q2_count());
  for (int i = 0; i < c.q2_count(); ++i) vc[i] = poly(c.q2_node(i)[0], c.q2_node(i)[1]);
  for (int i = 0; i < f.q2_count(); ++i) vf[i] = poly(f.q2_node(i)[0], f.q2_node(i)[1]);
  CHECK((p * vc - vf).lpNorm<Eigen::Infinity>() < 1e-13);

  // partition of unity
  const Vec ones = p * Vec::Ones(c.q2_count());
  CHECK((ones - Vec::Ones(f.q2_count())).lpNorm<Eigen::Infinity>() < 1e-14);

  const SpMat p1 = q1_prolongation(c, f);
  auto bilin = [](double x, double y) { return 0.5 - x + 4.0 * x * y; };
  Vec qc(c.q1_count()), qf(f.q1_count());
  for (int i = 0; i < c.q1_count(); ++i) qc[i] = bilin(c.q1_node(i)[0], c.q1_node(i)[1]);
  for (int i = 0; i < f.q1_count(); ++i) qf[i] = bilin(f.q1_node(i)[0], f.q1_node(i)[1]);
  CHECK((p1 * qc - qf).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("Galerkin identity for the mass matrix") {
  const Multilevel ml(4, 2);
  const SpMat& p = ml.transfer(1).scalar_prolongation();
  const SpMat& mf = ml.blocks(1).scalar_mass.matrix;
  const SpMat& mc = ml.blocks(0).scalar_mass.matrix;
  const Eigen::MatrixXd diff = Eigen::MatrixXd(SpMat(p.transpose() * mf * p)) - Eigen::MatrixXd(mc);
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("L2 projection properties") {
  const Multilevel ml(4, 2);
  const Transfer& t = ml.transfer(1);
  const SpMat& mf = ml.blocks(1).vector_mass.matrix;
  const int nf = ml.level(1).velocity_size();

  const Vec v = random_vector(nf, 3);
  const Vec w = random_vector(nf, 4);
  const Vec pv = t.prolong(t.project(v));
  const Vec pw = t.prolong(t.project(w));

  // P pi is idempotent
  CHECK((t.prolong(t.project(pv)) - pv).norm() < 1e-12 * pv.norm());
  // and self-adjoint in L2
  CHECK(std::abs(pv.dot(mf * w) - v.dot(mf * pw)) < 1e-13 * std::sqrt(v.dot(mf * v) * w.dot(mf * w)));
  // pi P = I on coarse vectors
  const Vec c = random_vector(ml.level(0).velocity_size(), 5);
  CHECK((t.project(t.prolong(c)) - c).norm() < 1e-12 * c.norm());
  // the residual v - P pi v is L2-orthogonal to the coarse space
  const Vec r = v - pv;
  CHECK(std::abs(t.prolong(c).dot(mf * r)) < 1e-13 * std::sqrt(r.dot(mf * r) * c.dot(mf * c)) + 1e-16);

  // pressure variant
  const Vec q = random_vector(ml.level(1).q1_count(), 6);
  const Vec pq = t.prolong_pressure(t.project_pressure(q));
  CHECK((t.prolong_pressure(t.project_pressure(pq)) - pq).norm() < 1e-12 * pq.norm());

  CHECK_THROWS_AS(t.project(c), LevelMismatch);
  CHECK_THROWS_AS(prolong_control(t, {8, c}), LevelMismatch);
}

TEST_CASE("zero_boundary touches only boundary coefficients") {
  const Level lv(3);
  Vec v = Vec::Ones(lv.velocity_size());
  lv.zero_boundary(v);
  for (int i = 0; i < lv.q2_count(); ++i) {
    CHECK(v[i] == (lv.on_boundary(i) ? 0.0 : 1.0));
    CHECK(v[lv.q2_count() + i] == v[i]);
  }
}
