#include "nsk/forms.hpp"

#include <algorithm>
#include <cmath>

#include "nsk/error.hpp"

namespace nsk {

namespace {

double q2_1d(int i, double t) {
  switch (i) {
    case 0:
      return 2.0 * (t - 0.5) * (t - 1.0);
    case 1:
      return -4.0 * t * (t - 1.0);
    default:
      return 2.0 * t * (t - 0.5);
  }
}

double dq2_1d(int i, double t) {
  switch (i) {
    case 0:
      return 4.0 * t - 3.0;
    case 1:
      return 4.0 - 8.0 * t;
    default:
      return 4.0 * t - 1.0;
  }
}

double q1_1d(int i, double t) { return i == 0 ? 1.0 - t : t; }

using Triplets = std::vector<Eigen::Triplet<double>>;

SpMat from_triplets(int rows, int cols, const Triplets& t) {
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void check_size(const Level& level, const VelocityField& f, const char* what) {
  if (f.n != level.n() || f.coeffs.size() != level.velocity_size()) {
    throw LevelMismatch(std::string(what) + ": field on n=" + std::to_string(f.n) +
                        " used on level n=" + std::to_string(level.n()));
  }
}

// Locates the cell containing (x, y) and the local coordinates inside it.
struct CellPoint {
  int cx, cy;
  double tx, ty;
};

CellPoint locate(int n, double x, double y) {
  const int cx = std::clamp(static_cast<int>(std::floor(x * n)), 0, n - 1);
  const int cy = std::clamp(static_cast<int>(std::floor(y * n)), 0, n - 1);
  return {cx, cy, x * n - cx, y * n - cy};
}

}  // namespace

QuadratureRule gauss_legendre(int points) {
  if (points < 1) throw InvalidArgument("quadrature needs at least one point");
  QuadratureRule rule;
  rule.points.resize(points);
  rule.weights.resize(points);
  for (int i = 0; i < points; ++i) {
    // Newton iteration on P_points starting from the Chebyshev guess.
    double x = std::cos(M_PI * (i + 0.75) / (points + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= points; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (points == 1) p0 = 1.0;
      dp = points * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.points[points - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[points - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

CellTables cell_tables(int points) {
  const QuadratureRule rule = gauss_legendre(points);
  CellTables tab;
  tab.size = points * points;
  for (int qy = 0; qy < points; ++qy) {
    for (int qx = 0; qx < points; ++qx) {
      const double s = rule.points[qx];
      const double t = rule.points[qy];
      tab.weight.push_back(rule.weights[qx] * rule.weights[qy]);
      tab.point.push_back({s, t});
      std::array<double, 9> v{}, dx{}, dy{};
      for (int b = 0; b < 3; ++b) {
        for (int a = 0; a < 3; ++a) {
          v[b * 3 + a] = q2_1d(a, s) * q2_1d(b, t);
          dx[b * 3 + a] = dq2_1d(a, s) * q2_1d(b, t);
          dy[b * 3 + a] = q2_1d(a, s) * dq2_1d(b, t);
        }
      }
      tab.phi.push_back(v);
      tab.dphi_x.push_back(dx);
      tab.dphi_y.push_back(dy);
      std::array<double, 4> p{};
      for (int b = 0; b < 2; ++b) {
        for (int a = 0; a < 2; ++a) p[b * 2 + a] = q1_1d(a, s) * q1_1d(b, t);
      }
      tab.psi.push_back(p);
    }
  }
  return tab;
}

double relative_asymmetry(const SpMat& a) {
  const SpMat diff = a - SpMat(a.transpose());
  double scale = 0.0;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SpMat::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

StokesBlocks assemble_stokes_blocks(const Level& level, double nu, int quad_points) {
  if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
  const CellTables tab = cell_tables(quad_points);
  const double h = level.h();
  const int nq2 = level.q2_count();
  const int nq1 = level.q1_count();

  // All cells are translates of one square, so element matrices are shared.
  double lap[9][9] = {}, mass[9][9] = {}, bx[4][9] = {}, by[4][9] = {}, pmass[4][4] = {};
  double pmean[4] = {};
  for (int q = 0; q < tab.size; ++q) {
    const double w = tab.weight[q];
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 9; ++j) {
        lap[i][j] += w * (tab.dphi_x[q][i] * tab.dphi_x[q][j] + tab.dphi_y[q][i] * tab.dphi_y[q][j]);
        mass[i][j] += w * h * h * tab.phi[q][i] * tab.phi[q][j];
      }
      for (int p = 0; p < 4; ++p) {
        bx[p][i] -= w * h * tab.psi[q][p] * tab.dphi_x[q][i];
        by[p][i] -= w * h * tab.psi[q][p] * tab.dphi_y[q][i];
      }
    }
    for (int p = 0; p < 4; ++p) {
      pmean[p] += w * h * h * tab.psi[q][p];
      for (int r = 0; r < 4; ++r) pmass[p][r] += w * h * h * tab.psi[q][p] * tab.psi[q][r];
    }
  }

  Triplets t_lap, t_mass, t_b, t_pmass;
  const int cells = level.n() * level.n();
  t_lap.reserve(cells * 81);
  t_mass.reserve(cells * 81);
  t_b.reserve(cells * 72);
  t_pmass.reserve(cells * 16);
  Vec mean = Vec::Zero(nq1);
  for (int cy = 0; cy < level.n(); ++cy) {
    for (int cx = 0; cx < level.n(); ++cx) {
      const auto v = level.cell_q2(cx, cy);
      const auto p = level.cell_q1(cx, cy);
      for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
          t_lap.emplace_back(v[i], v[j], nu * lap[i][j]);
          t_mass.emplace_back(v[i], v[j], mass[i][j]);
        }
      }
      for (int a = 0; a < 4; ++a) {
        for (int i = 0; i < 9; ++i) {
          t_b.emplace_back(p[a], v[i], bx[a][i]);
          t_b.emplace_back(p[a], nq2 + v[i], by[a][i]);
        }
        for (int b = 0; b < 4; ++b) t_pmass.emplace_back(p[a], p[b], pmass[a][b]);
        mean[p[a]] += pmean[a];
      }
    }
  }

  StokesBlocks blocks;
  const SpMat scalar_lap = from_triplets(nq2, nq2, t_lap);
  const SpMat scalar_mass = from_triplets(nq2, nq2, t_mass);
  Triplets t_vec_lap, t_vec_mass;
  for (int k = 0; k < scalar_lap.outerSize(); ++k) {
    for (SpMat::InnerIterator it(scalar_lap, k); it; ++it) {
      for (int c = 0; c < 2; ++c) t_vec_lap.emplace_back(c * nq2 + it.row(), c * nq2 + it.col(), it.value());
    }
  }
  for (int k = 0; k < scalar_mass.outerSize(); ++k) {
    for (SpMat::InnerIterator it(scalar_mass, k); it; ++it) {
      for (int c = 0; c < 2; ++c) t_vec_mass.emplace_back(c * nq2 + it.row(), c * nq2 + it.col(), it.value());
    }
  }
  blocks.viscous = {from_triplets(2 * nq2, 2 * nq2, t_vec_lap), true};
  blocks.vector_mass = {from_triplets(2 * nq2, 2 * nq2, t_vec_mass), true};
  blocks.scalar_mass = {scalar_mass, true};
  blocks.divergence = from_triplets(nq1, 2 * nq2, t_b);
  blocks.q1_mass = {from_triplets(nq1, nq1, t_pmass), true};
  blocks.mean = mean;
  return blocks;
}

ConvectionMatrices assemble_convection(const Level& level, const VelocityField& y, int quad_points) {
  check_size(level, y, "assemble_convection");
  const CellTables tab = cell_tables(quad_points);
  const double h = level.h();
  const int nq2 = level.q2_count();
  const int nv = level.velocity_size();
  const Vec& c = y.coeffs;

  Triplets t_adv, t_rea;
  const int cells = level.n() * level.n();
  t_adv.reserve(cells * 162);
  t_rea.reserve(cells * 324);
  for (int cy = 0; cy < level.n(); ++cy) {
    for (int cx = 0; cx < level.n(); ++cx) {
      const auto v = level.cell_q2(cx, cy);
      double yl[2][9];
      for (int a = 0; a < 9; ++a) {
        yl[0][a] = c[v[a]];
        yl[1][a] = c[nq2 + v[a]];
      }
      double adv[9][9] = {};
      double rea[2][2][9][9] = {};  // [l][k][b][a]
      for (int q = 0; q < tab.size; ++q) {
        const auto& phi = tab.phi[q];
        const auto& dx = tab.dphi_x[q];
        const auto& dy = tab.dphi_y[q];
        const double w = 0.5 * tab.weight[q] * h * h;
        double yq[2] = {0.0, 0.0};
        double gy[2][2] = {};  // gy[k][l] = d_k y_l
        for (int a = 0; a < 9; ++a) {
          for (int l = 0; l < 2; ++l) {
            yq[l] += yl[l][a] * phi[a];
            gy[0][l] += yl[l][a] * dx[a] / h;
            gy[1][l] += yl[l][a] * dy[a] / h;
          }
        }
        double ygrad[9];
        for (int a = 0; a < 9; ++a) ygrad[a] = (yq[0] * dx[a] + yq[1] * dy[a]) / h;
        for (int b = 0; b < 9; ++b) {
          for (int a = 0; a < 9; ++a) {
            adv[b][a] += w * (ygrad[a] * phi[b] - ygrad[b] * phi[a]);
            const double pa_pb = phi[a] * phi[b];
            const double dk_b[2] = {dx[b] / h, dy[b] / h};
            for (int l = 0; l < 2; ++l) {
              for (int k = 0; k < 2; ++k) {
                rea[l][k][b][a] += w * (pa_pb * gy[k][l] - phi[a] * yq[l] * dk_b[k]);
              }
            }
          }
        }
      }
      for (int b = 0; b < 9; ++b) {
        for (int a = 0; a < 9; ++a) {
          t_adv.emplace_back(v[b], v[a], adv[b][a]);
          t_adv.emplace_back(nq2 + v[b], nq2 + v[a], adv[b][a]);
          for (int l = 0; l < 2; ++l) {
            for (int k = 0; k < 2; ++k) t_rea.emplace_back(l * nq2 + v[b], k * nq2 + v[a], rea[l][k][b][a]);
          }
        }
      }
    }
  }
  return {from_triplets(nv, nv, t_adv), from_triplets(nv, nv, t_rea)};
}

double apply_trilinear(const Level& level, const VelocityField& y, const VelocityField& phi,
                       const VelocityField& psi, int quad_points) {
  check_size(level, y, "apply_trilinear");
  check_size(level, phi, "apply_trilinear");
  check_size(level, psi, "apply_trilinear");
  const CellTables tab = cell_tables(quad_points);
  const double h = level.h();
  const int nq2 = level.q2_count();
  double total = 0.0;
  for (int cy = 0; cy < level.n(); ++cy) {
    for (int cx = 0; cx < level.n(); ++cx) {
      const auto v = level.cell_q2(cx, cy);
      for (int q = 0; q < tab.size; ++q) {
        // Values and gradients at the point, per component.
        double yv[2] = {}, fv[2] = {}, sv[2] = {}, fg[2][2] = {}, sg[2][2] = {};
        for (int a = 0; a < 9; ++a) {
          const double p = tab.phi[q][a];
          const double gx = tab.dphi_x[q][a] / h;
          const double gyy = tab.dphi_y[q][a] / h;
          for (int l = 0; l < 2; ++l) {
            const int idx = l * nq2 + v[a];
            yv[l] += y.coeffs[idx] * p;
            fv[l] += phi.coeffs[idx] * p;
            sv[l] += psi.coeffs[idx] * p;
            fg[l][0] += phi.coeffs[idx] * gx;
            fg[l][1] += phi.coeffs[idx] * gyy;
            sg[l][0] += psi.coeffs[idx] * gx;
            sg[l][1] += psi.coeffs[idx] * gyy;
          }
        }
        double val = 0.0;
        for (int l = 0; l < 2; ++l) {
          val += (yv[0] * fg[l][0] + yv[1] * fg[l][1]) * sv[l];
          val -= (yv[0] * sg[l][0] + yv[1] * sg[l][1]) * fv[l];
        }
        total += 0.5 * tab.weight[q] * h * h * val;
      }
    }
  }
  return total;
}

Vec load_vector(const Level& level, const VectorFunction& f, int quad_points) {
  const CellTables tab = cell_tables(quad_points);
  const double h = level.h();
  const int nq2 = level.q2_count();
  Vec out = Vec::Zero(level.velocity_size());
  for (int cy = 0; cy < level.n(); ++cy) {
    for (int cx = 0; cx < level.n(); ++cx) {
      const auto v = level.cell_q2(cx, cy);
      for (int q = 0; q < tab.size; ++q) {
        const auto val = f((cx + tab.point[q][0]) * h, (cy + tab.point[q][1]) * h);
        const double w = tab.weight[q] * h * h;
        for (int a = 0; a < 9; ++a) {
          out[v[a]] += w * val[0] * tab.phi[q][a];
          out[nq2 + v[a]] += w * val[1] * tab.phi[q][a];
        }
      }
    }
  }
  return out;
}

Vec interpolate(const Level& level, const VectorFunction& f) {
  const int nq2 = level.q2_count();
  Vec out(level.velocity_size());
  for (int i = 0; i < nq2; ++i) {
    const auto x = level.q2_node(i);
    const auto val = f(x[0], x[1]);
    out[i] = val[0];
    out[nq2 + i] = val[1];
  }
  return out;
}

Vec interpolate_q1(const Level& level, const ScalarFunction& f) {
  Vec out(level.q1_count());
  for (int i = 0; i < level.q1_count(); ++i) {
    const auto x = level.q1_node(i);
    out[i] = f(x[0], x[1]);
  }
  return out;
}

std::array<double, 2> evaluate(const Level& level, const Vec& field, double x, double y) {
  if (field.size() != level.velocity_size()) throw LevelMismatch("evaluate: wrong field size");
  const CellPoint cp = locate(level.n(), x, y);
  const auto v = level.cell_q2(cp.cx, cp.cy);
  const int nq2 = level.q2_count();
  std::array<double, 2> out{0.0, 0.0};
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) {
      const double p = q2_1d(a, cp.tx) * q2_1d(b, cp.ty);
      out[0] += field[v[b * 3 + a]] * p;
      out[1] += field[nq2 + v[b * 3 + a]] * p;
    }
  }
  return out;
}

double evaluate_q1(const Level& level, const Vec& field, double x, double y) {
  if (field.size() != level.q1_count()) throw LevelMismatch("evaluate_q1: wrong field size");
  const CellPoint cp = locate(level.n(), x, y);
  const auto p = level.cell_q1(cp.cx, cp.cy);
  double out = 0.0;
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) out += field[p[b * 2 + a]] * q1_1d(a, cp.tx) * q1_1d(b, cp.ty);
  }
  return out;
}

VelocityErrors velocity_errors(const Level& level, const Vec& field, const VectorFunction& exact,
                               const std::function<std::array<double, 4>(double, double)>& grad,
                               int quad_points) {
  const CellTables tab = cell_tables(quad_points);
  const double h = level.h();
  const int nq2 = level.q2_count();
  double l2 = 0.0, h1 = 0.0;
  for (int cy = 0; cy < level.n(); ++cy) {
    for (int cx = 0; cx < level.n(); ++cx) {
      const auto v = level.cell_q2(cx, cy);
      for (int q = 0; q < tab.size; ++q) {
        const double x = (cx + tab.point[q][0]) * h;
        const double y = (cy + tab.point[q][1]) * h;
        double val[2] = {}, g[4] = {};  // g = (d_x u, d_y u, d_x v, d_y v)
        for (int a = 0; a < 9; ++a) {
          for (int l = 0; l < 2; ++l) {
            const double c = field[l * nq2 + v[a]];
            val[l] += c * tab.phi[q][a];
            g[2 * l] += c * tab.dphi_x[q][a] / h;
            g[2 * l + 1] += c * tab.dphi_y[q][a] / h;
          }
        }
        const auto e = exact(x, y);
        const auto ge = grad(x, y);
        const double w = tab.weight[q] * h * h;
        l2 += w * ((val[0] - e[0]) * (val[0] - e[0]) + (val[1] - e[1]) * (val[1] - e[1]));
        for (int k = 0; k < 4; ++k) h1 += w * (g[k] - ge[k]) * (g[k] - ge[k]);
      }
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

double pressure_l2_error(const Level& level, const Vec& field, const ScalarFunction& exact,
                         int quad_points) {
  const CellTables tab = cell_tables(quad_points);
  const double h = level.h();
  double l2 = 0.0;
  for (int cy = 0; cy < level.n(); ++cy) {
    for (int cx = 0; cx < level.n(); ++cx) {
      const auto p = level.cell_q1(cx, cy);
      for (int q = 0; q < tab.size; ++q) {
        double val = 0.0;
        for (int a = 0; a < 4; ++a) val += field[p[a]] * tab.psi[q][a];
        const double e = exact((cx + tab.point[q][0]) * h, (cy + tab.point[q][1]) * h);
        l2 += tab.weight[q] * h * h * (val - e) * (val - e);
      }
    }
  }
  return std::sqrt(l2);
}

Multilevel::Multilevel(int n0, int levels) : mesh_(n0, levels) {
  blocks_.reserve(levels);
  for (int l = 0; l < levels; ++l) blocks_.push_back(assemble_stokes_blocks(mesh_.level(l), 1.0));
  transfers_.reserve(levels > 0 ? levels - 1 : 0);
  for (int l = 1; l < levels; ++l) {
    transfers_.emplace_back(mesh_.level(l - 1), mesh_.level(l), blocks_[l - 1].scalar_mass.matrix,
                            blocks_[l].scalar_mass.matrix, blocks_[l - 1].q1_mass.matrix,
                            blocks_[l].q1_mass.matrix);
  }
}

double Multilevel::inner(int l, const Vec& a, const Vec& b) const {
  return a.dot(blocks_.at(l).vector_mass.matrix * b);
}

double Multilevel::norm(int l, const Vec& a) const { return std::sqrt(std::max(0.0, inner(l, a, a))); }

}  // namespace nsk
