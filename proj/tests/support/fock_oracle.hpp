#pragma once

// Independent check of wick_moment: every moment of six field operators built
// from two truncated bosonic modes, computed by matrix products on the Fock
// space. Phi = sum_m u_m a_m + v_m a_m^dag, so <0|Phi_x Phi_y|0> = u_x . v_y.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wdistill/wick.hpp"

namespace wdistill::testing {

struct FockComparison {
  double worst = 0.0;  // max |wick - direct|
  long moments = 0;
};

inline FockComparison compare_with_fock_space(int max_length, int quanta, std::uint64_t seed) {
  const int dim = (quanta + 1) * (quanta + 1);
  Eigen::MatrixXd a[2];
  for (auto& m : a) m = Eigen::MatrixXd::Zero(dim, dim);
  for (int n0 = 0; n0 <= quanta; ++n0) {
    for (int n1 = 0; n1 <= quanta; ++n1) {
      const int s = n0 * (quanta + 1) + n1;
      if (n0 > 0) a[0](s - (quanta + 1), s) = std::sqrt(static_cast<double>(n0));
      if (n1 > 0) a[1](s - 1, s) = std::sqrt(static_cast<double>(n1));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Six operators: detectors A, B, C with both signs.
  std::vector<Eigen::MatrixXd> phi(6);
  std::vector<std::array<double, 4>> coef(6);
  for (int k = 0; k < 6; ++k) {
    for (double& c : coef[k]) c = u(rng);
    phi[k] = coef[k][0] * a[0] + coef[k][1] * a[1] + coef[k][2] * a[0].transpose() + coef[k][3] * a[1].transpose();
  }
  auto op = [](int k) { return MomentFactor{static_cast<std::size_t>(k / 2), k % 2 ? Sign::plus : Sign::minus}; };
  AmplitudeTable t({"A", "B", "C"});
  for (int x = 0; x < 6; ++x) {
    for (int y = 0; y < 6; ++y) {
      t.set(op(x).detector, op(x).sign, op(y).detector, op(y).sign, coef[x][0] * coef[y][2] + coef[x][1] * coef[y][3]);
    }
  }
  Eigen::VectorXd vac = Eigen::VectorXd::Zero(dim);
  vac(0) = 1.0;
  FockComparison out;
  for (int len = 1; len <= max_length; ++len) {
    long total = 1;
    for (int k = 0; k < len; ++k) total *= 6;
    for (long code = 0; code < total; ++code) {
      MomentSpec m;
      std::vector<int> ops;
      long c = code;
      for (int k = 0; k < len; ++k) {
        ops.push_back(static_cast<int>(c % 6));
        c /= 6;
      }
      for (int k : ops) m.push_back(op(k));
      Eigen::VectorXd v = vac;
      for (int k = len - 1; k >= 0; --k) v = phi[ops[k]] * v;
      out.worst = std::max(out.worst, std::abs(wick_moment(m, t) - vac.dot(v)));
      ++out.moments;
    }
  }
  return out;
}

}  // namespace wdistill::testing
