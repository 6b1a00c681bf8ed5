#include "nsk/grid.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "nsk/error.hpp"

namespace nsk {

namespace {

// Lagrange basis on [0,1] with nodes 0, 1/2, 1.
double q2_basis(int i, double t) {
  switch (i) {
    case 0:
      return 2.0 * (t - 0.5) * (t - 1.0);
    case 1:
      return -4.0 * t * (t - 1.0);
    default:
      return 2.0 * t * (t - 0.5);
  }
}

// 1D interpolation of a piecewise quadratic on n_c cells onto 2 n_c cells.
SpMat q2_prolongation_1d(int n_coarse) {
  const int coarse_nodes = 2 * n_coarse + 1;
  const int fine_nodes = 4 * n_coarse + 1;
  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < fine_nodes; ++i) {
    const double x = static_cast<double>(i) / (4 * n_coarse);
    const int cell = std::min(i / 4, n_coarse - 1);
    const double t = x * n_coarse - cell;
    for (int a = 0; a < 3; ++a) {
      const double v = q2_basis(a, t);
      if (std::abs(v) > 1e-15) entries.emplace_back(i, 2 * cell + a, v);
    }
  }
  SpMat p(fine_nodes, coarse_nodes);
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

SpMat q1_prolongation_1d(int n_coarse) {
  const int coarse_nodes = n_coarse + 1;
  const int fine_nodes = 2 * n_coarse + 1;
  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < fine_nodes; ++i) {
    if (i % 2 == 0) {
      entries.emplace_back(i, i / 2, 1.0);
    } else {
      entries.emplace_back(i, i / 2, 0.5);
      entries.emplace_back(i, i / 2 + 1, 0.5);
    }
  }
  SpMat p(fine_nodes, coarse_nodes);
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

void check_adjacent(const Level& coarse, const Level& fine) {
  if (fine.n() != 2 * coarse.n()) {
    throw LevelMismatch("levels are not adjacent: n=" + std::to_string(coarse.n()) +
                        " and n=" + std::to_string(fine.n()));
  }
}

}  // namespace

Level::Level(int n) : n_(n) {
  if (n < 1) throw InvalidArgument("cells per side must be positive");
  boundary_.assign(q2_count(), 0);
  const int side = q2_side();
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      if (ix == 0 || iy == 0 || ix == side - 1 || iy == side - 1) boundary_[q2_index(ix, iy)] = 1;
    }
  }
}

std::array<double, 2> Level::q2_node(int index) const {
  const int side = q2_side();
  const double step = 0.5 / n_;
  return {(index % side) * step, (index / side) * step};
}

std::array<double, 2> Level::q1_node(int index) const {
  const int side = q1_side();
  return {static_cast<double>(index % side) / n_, static_cast<double>(index / side) / n_};
}

std::array<int, 9> Level::cell_q2(int cx, int cy) const {
  std::array<int, 9> dofs{};
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) dofs[b * 3 + a] = q2_index(2 * cx + a, 2 * cy + b);
  }
  return dofs;
}

std::array<int, 4> Level::cell_q1(int cx, int cy) const {
  return {q1_index(cx, cy), q1_index(cx + 1, cy), q1_index(cx, cy + 1), q1_index(cx + 1, cy + 1)};
}

void Level::zero_boundary(Vec& velocity) const {
  const int count = q2_count();
  for (int i = 0; i < count; ++i) {
    if (boundary_[i]) {
      velocity[i] = 0.0;
      velocity[count + i] = 0.0;
    }
  }
}

MeshHierarchy::MeshHierarchy(int n0, int levels) : n0_(n0) {
  if (n0 < 2) {
    throw InvalidArgument("base grid needs at least 2x2 cells, got n0=" + std::to_string(n0));
  }
  if (levels < 1) throw InvalidArgument("hierarchy needs at least one level");
  levels_.reserve(levels);
  for (int l = 0; l < levels; ++l) levels_.emplace_back(n0 << l);
}

int MeshHierarchy::index_of(int n) const {
  for (int l = 0; l < size(); ++l) {
    if (levels_[l].n() == n) return l;
  }
  throw InvalidArgument("no level with n=" + std::to_string(n) + " in hierarchy");
}

MeshHierarchy build_hierarchy(int n0, int levels) { return MeshHierarchy(n0, levels); }

SpMat q2_prolongation(const Level& coarse, const Level& fine) {
  check_adjacent(coarse, fine);
  const SpMat p1 = q2_prolongation_1d(coarse.n());
  // x runs fastest, so the y factor is the outer one.
  SpMat p = Eigen::kroneckerProduct(p1, p1);
  p.makeCompressed();
  return p;
}

SpMat q1_prolongation(const Level& coarse, const Level& fine) {
  check_adjacent(coarse, fine);
  const SpMat p1 = q1_prolongation_1d(coarse.n());
  SpMat p = Eigen::kroneckerProduct(p1, p1);
  p.makeCompressed();
  return p;
}

Transfer::Transfer(const Level& coarse, const Level& fine, SpMat scalar_mass_coarse,
                   SpMat scalar_mass_fine, SpMat q1_mass_coarse, SpMat q1_mass_fine)
    : coarse_n_(coarse.n()),
      fine_n_(fine.n()),
      p_(q2_prolongation(coarse, fine)),
      p_q1_(q1_prolongation(coarse, fine)),
      mass_fine_(std::move(scalar_mass_fine)),
      q1_mass_fine_(std::move(q1_mass_fine)) {
  auto mass = std::make_shared<Eigen::SimplicialLLT<SpMat>>(scalar_mass_coarse);
  auto q1_mass = std::make_shared<Eigen::SimplicialLLT<SpMat>>(q1_mass_coarse);
  mass_coarse_llt_ = mass;
  q1_mass_coarse_llt_ = q1_mass;
  if (mass->info() != Eigen::Success || q1_mass->info() != Eigen::Success) {
    throw SingularMatrix("coarse mass matrix is not positive definite");
  }
}

Vec Transfer::prolong(const Vec& coarse) const {
  const Eigen::Index nc = p_.cols();
  const Eigen::Index nf = p_.rows();
  if (coarse.size() != 2 * nc) throw LevelMismatch("prolong: coarse vector has wrong size");
  Vec fine(2 * nf);
  fine.head(nf) = p_ * coarse.head(nc);
  fine.tail(nf) = p_ * coarse.tail(nc);
  return fine;
}

Vec Transfer::project(const Vec& fine) const {
  const Eigen::Index nc = p_.cols();
  const Eigen::Index nf = p_.rows();
  if (fine.size() != 2 * nf) throw LevelMismatch("project: fine vector has wrong size");
  Vec coarse(2 * nc);
  for (int k = 0; k < 2; ++k) {
    const Vec rhs = p_.transpose() * (mass_fine_ * fine.segment(k * nf, nf));
    coarse.segment(k * nc, nc) = mass_coarse_llt_->solve(rhs);
  }
  return coarse;
}

Vec Transfer::prolong_pressure(const Vec& coarse) const {
  if (coarse.size() != p_q1_.cols()) throw LevelMismatch("prolong_pressure: wrong size");
  return p_q1_ * coarse;
}

Vec Transfer::project_pressure(const Vec& fine) const {
  if (fine.size() != p_q1_.rows()) throw LevelMismatch("project_pressure: wrong size");
  const Vec rhs = p_q1_.transpose() * (q1_mass_fine_ * fine);
  return q1_mass_coarse_llt_->solve(rhs);
}

ControlField prolong_control(const Transfer& t, const ControlField& c) {
  if (c.n != t.coarse_n()) throw LevelMismatch("prolong_control: field is not on the coarse level");
  return {t.fine_n(), t.prolong(c.coeffs)};
}

ControlField project_control(const Transfer& t, const ControlField& v) {
  if (v.n != t.fine_n()) throw LevelMismatch("project_control: field is not on the fine level");
  return {t.coarse_n(), t.project(v.coeffs)};
}

}  // namespace nsk
