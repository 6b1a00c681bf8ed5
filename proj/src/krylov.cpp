#include "nsk/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

namespace nsk {

namespace {

double mdot(const SpMat& mass, const Vec& a, const Vec& b) { return a.dot(mass * b); }

}  // namespace

KrylovResult pcg(const LinearAction& op, const LinearAction& prec, const SpMat& mass, const Vec& rhs,
                 double tol, int maxit, const Vec* x0) {
  KrylovResult out;
  KrylovReport& rep = out.report;
  const double bnorm = std::sqrt(std::max(0.0, mdot(mass, rhs, rhs)));
  Vec x = x0 ? *x0 : Vec::Zero(rhs.size());
  Vec r = x0 ? Vec(rhs - op(x)) : rhs;
  if (bnorm == 0.0) {
    out.x = Vec::Zero(rhs.size());
    rep.converged = true;
    return out;
  }
  double rnorm = std::sqrt(std::max(0.0, mdot(mass, r, r)));
  rep.relative_residual = rnorm / bnorm;
  if (rep.relative_residual <= tol) {
    rep.converged = true;
    out.x = std::move(x);
    return out;
  }

  Vec z = prec ? prec(r) : r;
  double rz = mdot(mass, r, z);
  Vec p = z;
  for (int it = 0; it < maxit; ++it) {
    if (!(rz > 0.0)) {
      rep.breakdown = true;
      rep.message = "preconditioner is not positive definite";
      break;
    }
    const Vec q = op(p);
    ++rep.iterations;
    const double pq = mdot(mass, p, q);
    if (!(pq > 0.0)) {
      rep.breakdown = true;
      rep.message = "operator has nonpositive curvature";
      break;
    }
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    rnorm = std::sqrt(std::max(0.0, mdot(mass, r, r)));
    rep.relative_residual = rnorm / bnorm;
    if (rep.relative_residual <= tol) {
      rep.converged = true;
      break;
    }
    if (it + 1 == maxit) break;
    z = prec ? prec(r) : r;
    const double rz_new = mdot(mass, r, z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  out.x = std::move(x);
  return out;
}

Vec random_vector(Eigen::Index size, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vec v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = dist(gen);
  return v;
}

SpectralEstimate lanczos_spectral_distance(const LinearAction& op_h, const LinearAction& op_tinv,
                                           const SpMat& mass, int k, std::uint64_t seed) {
  SpectralEstimate est;
  // Pairs (q_j, T q_j); the q_j are T-orthonormal.
  std::vector<Vec> qs;
  std::vector<Vec> tqs;
  std::vector<double> alpha;
  std::vector<double> beta;

  Vec u = random_vector(mass.rows(), seed);
  Vec z = op_tinv(u);
  double uz = mdot(mass, u, z);
  if (!(uz > 0.0)) {
    est.breakdown = true;
    return est;
  }
  double b = std::sqrt(uz);
  qs.push_back(z / b);
  tqs.push_back(u / b);
  const double scale_tol = 1e-12;
  for (int j = 0; j < k; ++j) {
    u = op_h(qs[j]);
    alpha.push_back(mdot(mass, u, qs[j]));
    // Two passes of Gram-Schmidt in the T inner product, carried out on T-images.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < qs.size(); ++i) u -= mdot(mass, u, qs[i]) * tqs[i];
    }
    est.iterations = j + 1;
    if (j + 1 == k) break;
    z = op_tinv(u);
    uz = mdot(mass, u, z);
    if (uz < 0.0 && std::abs(uz) > scale_tol * std::abs(alpha.back())) {
      est.breakdown = true;
      return est;
    }
    if (uz <= (scale_tol * scale_tol) * alpha.back() * alpha.back()) break;  // invariant subspace
    b = std::sqrt(uz);
    beta.push_back(b);
    qs.push_back(z / b);
    tqs.push_back(u / b);
  }

  const int m = static_cast<int>(alpha.size());
  Vec diag = Eigen::Map<Vec>(alpha.data(), m);
  Vec sub = beta.empty() ? Vec() : Vec(Eigen::Map<Vec>(beta.data(), m - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  est.lambda_min = eig.eigenvalues().minCoeff();
  est.lambda_max = eig.eigenvalues().maxCoeff();
  if (!(est.lambda_min > 0.0)) {
    est.breakdown = true;
    return est;
  }
  est.value = std::max(std::abs(std::log(est.lambda_min)), std::abs(std::log(est.lambda_max)));
  est.converged = true;
  return est;
}

SpectralEstimate power_iteration_symmetric(const LinearAction& op_d, const SpMat& mass, int maxit, double tol,
                                           std::uint64_t seed) {
  SpectralEstimate est;
  Vec v = random_vector(mass.rows(), seed);
  v /= std::sqrt(mdot(mass, v, v));
  double prev = -1.0;
  for (int it = 0; it < maxit; ++it) {
    Vec w = op_d(v);
    const double norm = std::sqrt(std::max(0.0, mdot(mass, w, w)));
    est.iterations = it + 1;
    est.value = norm;
    if (norm == 0.0) {
      est.converged = true;
      break;
    }
    if (prev >= 0.0 && std::abs(norm - prev) <= tol * norm) {
      est.converged = true;
      break;
    }
    prev = norm;
    v = w / norm;
  }
  est.lambda_min = -est.value;
  est.lambda_max = est.value;
  return est;
}

}  // namespace nsk
