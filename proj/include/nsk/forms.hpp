#pragma once

#include <array>
#include <functional>
#include <vector>

#include "nsk/grid.hpp"

namespace nsk {

/// Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
};

QuadratureRule gauss_legendre(int points);

/// Q2 and Q1 reference basis tabulated at the tensor-product Gauss points of
/// the unit cell. Derivatives are with respect to reference coordinates.
struct CellTables {
  int size = 0;
  std::vector<double> weight;
  std::vector<std::array<double, 2>> point;
  std::vector<std::array<double, 9>> phi;
  std::vector<std::array<double, 9>> dphi_x;
  std::vector<std::array<double, 9>> dphi_y;
  std::vector<std::array<double, 4>> psi;
};

CellTables cell_tables(int points);

/// Sparse matrix with an explicit symmetry flag.
struct SparseOperator {
  SpMat matrix;
  bool symmetric = false;
};

/// Max |A_ij - A_ji| relative to max |A_ij|.
double relative_asymmetry(const SpMat& a);

/// Assembled Stokes blocks of one level, dofs on boundary nodes included.
struct StokesBlocks {
  SparseOperator viscous;        ///< nu (grad w, grad phi), vector Q2
  SpMat divergence;              ///< B with B(q, phi) = -(q, div phi)
  SparseOperator vector_mass;    ///< vector Q2 mass, block diagonal
  SparseOperator scalar_mass;    ///< scalar Q2 mass
  SparseOperator q1_mass;        ///< Q1 mass
  Vec mean;                      ///< m(q) = integral of q over the square
};

StokesBlocks assemble_stokes_blocks(const Level& level, double nu, int quad_points = 3);

/// Matrices of the skew-symmetrized convection form at a fixed velocity y:
/// advection(psi, phi) = c~(y; phi, psi) and reaction(psi, phi) = c~(phi; y, psi).
struct ConvectionMatrices {
  SpMat advection;
  SpMat reaction;
};

/// Default 4-point rule: the Q2 x dQ2 x Q2 integrands reach degree 6 per direction.
ConvectionMatrices assemble_convection(const Level& level, const VelocityField& y,
                                       int quad_points = 4);

/// c~(y; phi, psi) = 1/2 [((y.grad) phi, psi) - ((y.grad) psi, phi)] by quadrature.
double apply_trilinear(const Level& level, const VelocityField& y, const VelocityField& phi,
                       const VelocityField& psi, int quad_points = 4);

using VectorFunction = std::function<std::array<double, 2>(double, double)>;
using ScalarFunction = std::function<double(double, double)>;

/// Load vector (f, phi_i) over all vector Q2 basis functions.
Vec load_vector(const Level& level, const VectorFunction& f, int quad_points = 5);
/// Nodal Q2 interpolant.
Vec interpolate(const Level& level, const VectorFunction& f);
/// Nodal Q1 interpolant.
Vec interpolate_q1(const Level& level, const ScalarFunction& f);

/// Point evaluation of a vector Q2 field.
std::array<double, 2> evaluate(const Level& level, const Vec& field, double x, double y);
/// Point evaluation of a Q1 field.
double evaluate_q1(const Level& level, const Vec& field, double x, double y);

/// ||field - exact|| in L2 and the H1 seminorm error, by cell quadrature.
struct VelocityErrors {
  double l2 = 0.0;
  double h1 = 0.0;
};
VelocityErrors velocity_errors(const Level& level, const Vec& field, const VectorFunction& exact,
                               const std::function<std::array<double, 4>(double, double)>& grad,
                               int quad_points = 6);
double pressure_l2_error(const Level& level, const Vec& field, const ScalarFunction& exact,
                         int quad_points = 6);

/// Meshes, assembled unit-viscosity Stokes blocks, and transfers for a hierarchy.
class Multilevel {
 public:
  Multilevel(int n0, int levels);

  const MeshHierarchy& mesh() const { return mesh_; }
  int size() const { return mesh_.size(); }
  const Level& level(int l) const { return mesh_.level(l); }
  /// Blocks at unit viscosity; scale `viscous` by nu.
  const StokesBlocks& blocks(int l) const { return blocks_.at(l); }
  /// Transfer between levels l-1 and l, for l >= 1.
  const Transfer& transfer(int l) const { return transfers_.at(l - 1); }
  int index_of(int n) const { return mesh_.index_of(n); }

  /// (a, b)_{L2} of two vector Q2 fields on level l.
  double inner(int l, const Vec& a, const Vec& b) const;
  double norm(int l, const Vec& a) const;

 private:
  MeshHierarchy mesh_;
  std::vector<StokesBlocks> blocks_;
  std::vector<Transfer> transfers_;
};

}  // namespace nsk
