#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>

namespace nsk {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

/// Q2 vector-valued coefficients on an n x n grid: all x-components in
/// lexicographic node order, then all y-components.
struct VectorField {
  int n = 0;
  Vec coeffs;
};

using ControlField = VectorField;
using VelocityField = VectorField;

/// Q1 scalar coefficients on an n x n grid.
struct PressureField {
  int n = 0;
  Vec coeffs;
};

/// One uniform grid of the unit square with n x n square cells, together with
/// its Q2 and Q1 node numbering.
///
/// Q2 nodes sit on the (2n+1) x (2n+1) lattice of cell corners, edge midpoints
/// and cell centres; Q1 nodes on the (n+1) x (n+1) lattice of corners. Both are
/// numbered lexicographically with x running fastest.
class Level {
 public:
  explicit Level(int n);

  int n() const { return n_; }
  double h() const { return 1.0 / n_; }

  int q2_side() const { return 2 * n_ + 1; }
  int q2_count() const { return q2_side() * q2_side(); }
  int q2_interior_count() const { return (2 * n_ - 1) * (2 * n_ - 1); }
  int q1_side() const { return n_ + 1; }
  int q1_count() const { return q1_side() * q1_side(); }
  int velocity_size() const { return 2 * q2_count(); }

  int q2_index(int ix, int iy) const { return iy * q2_side() + ix; }
  int q1_index(int ix, int iy) const { return iy * q1_side() + ix; }

  /// Coordinates of a Q2 node.
  std::array<double, 2> q2_node(int index) const;
  /// Coordinates of a Q1 node.
  std::array<double, 2> q1_node(int index) const;

  /// True iff the scalar Q2 node lies on the boundary of the square.
  bool on_boundary(int q2_index) const { return boundary_[q2_index] != 0; }
  const std::vector<char>& boundary_mask() const { return boundary_; }

  /// Scalar Q2 node indices of cell (cx, cy); local index b*3+a for the
  /// node at offset (a, b) within the cell.
  std::array<int, 9> cell_q2(int cx, int cy) const;
  /// Q1 node indices of cell (cx, cy); local index b*2+a.
  std::array<int, 4> cell_q1(int cx, int cy) const;

  /// Sets every boundary velocity coefficient of a vector Q2 array to zero.
  void zero_boundary(Vec& velocity) const;

 private:
  int n_;
  std::vector<char> boundary_;
};

/// Nested uniform grids with n_l = n0 * 2^l cells per side.
class MeshHierarchy {
 public:
  MeshHierarchy(int n0, int levels);

  int n0() const { return n0_; }
  int size() const { return static_cast<int>(levels_.size()); }
  const Level& level(int l) const { return levels_.at(l); }
  /// Index of the level with n cells per side; throws InvalidArgument if absent.
  int index_of(int n) const;

 private:
  int n0_;
  std::vector<Level> levels_;
};

/// Rejects n0 < 2 and levels < 1.
MeshHierarchy build_hierarchy(int n0, int levels);

/// Exact interpolation of the scalar Q2 space on `coarse` into the one on
/// `fine`; requires fine.n() == 2 * coarse.n().
SpMat q2_prolongation(const Level& coarse, const Level& fine);
/// Same for the Q1 space.
SpMat q1_prolongation(const Level& coarse, const Level& fine);

/// Embedding and L2 projection between two adjacent levels.
///
/// Works on the full Q2 vector space (boundary nodes included) and on the
/// Q1 pressure space. The coarse mass matrices are factorized once.
class Transfer {
 public:
  /// `scalar_mass_*` are Q2 scalar mass matrices, `q1_mass_*` Q1 ones.
  Transfer(const Level& coarse, const Level& fine, SpMat scalar_mass_coarse,
           SpMat scalar_mass_fine, SpMat q1_mass_coarse, SpMat q1_mass_fine);

  int coarse_n() const { return coarse_n_; }
  int fine_n() const { return fine_n_; }

  /// Coarse vector Q2 coefficients -> the same function on the fine grid.
  Vec prolong(const Vec& coarse) const;
  /// pi_{2h} v: solves M_2h c = P^T M_h v componentwise.
  Vec project(const Vec& fine) const;
  Vec prolong_pressure(const Vec& coarse) const;
  Vec project_pressure(const Vec& fine) const;

  const SpMat& scalar_prolongation() const { return p_; }
  const SpMat& pressure_prolongation() const { return p_q1_; }

 private:
  int coarse_n_;
  int fine_n_;
  SpMat p_;
  SpMat p_q1_;
  SpMat mass_fine_;
  SpMat q1_mass_fine_;
  std::shared_ptr<const Eigen::SimplicialLLT<SpMat>> mass_coarse_llt_;
  std::shared_ptr<const Eigen::SimplicialLLT<SpMat>> q1_mass_coarse_llt_;
};

ControlField prolong_control(const Transfer& t, const ControlField& c);
ControlField project_control(const Transfer& t, const ControlField& v);

}  // namespace nsk
