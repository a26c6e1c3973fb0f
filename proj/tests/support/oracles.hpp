#pragma once

// Reference computations used only by the tests. They deliberately avoid the
// library's solvers so that agreement is evidence rather than tautology.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rlrv/mdp.hpp"

namespace oracle {

/// sum_{k < terms} gamma^k (T^pi)^k R^pi, accumulated with plain loops.
inline Eigen::VectorXd truncated_series_value(const rlrv::Mdp& mdp, const rlrv::PolicyTable& pi,
                                              int terms) {
  const int n = mdp.n_states();
  std::vector<std::vector<double>> tp(n, std::vector<double>(n, 0.0));
  std::vector<double> rp(n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      for (int t = 0; t < n; ++t) {
        tp[s][t] += pi(s, a) * mdp.transition(s, a, t);
        rp[s] += pi(s, a) * mdp.transition(s, a, t) * mdp.reward(s, a, t);
      }
    }
  }
  std::vector<double> term = rp;
  std::vector<double> total(n, 0.0);
  for (int k = 0; k < terms; ++k) {
    for (int s = 0; s < n; ++s) total[s] += term[s];
    std::vector<double> next(n, 0.0);
    for (int s = 0; s < n; ++s) {
      for (int t = 0; t < n; ++t) next[s] += mdp.discount() * tp[s][t] * term[t];
    }
    term = next;
  }
  Eigen::VectorXd out(n);
  for (int s = 0; s < n; ++s) out[s] = total[s];
  return out;
}

/// Value of a deterministic policy by iterating the Bellman equation until
/// the update is below tol.
inline Eigen::VectorXd iterated_value(const rlrv::Mdp& mdp, const std::vector<int>& actions,
                                      double tol = 1e-13) {
  const int n = mdp.n_states();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd next(n);
    for (int s = 0; s < n; ++s) {
      double q = 0.0;
      for (int t = 0; t < n; ++t) {
        q += mdp.transition(s, actions[s], t) * (mdp.reward(s, actions[s], t) + mdp.discount() * v[t]);
      }
      next[s] = q;
    }
    const double step = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (step < tol) break;
  }
  return v;
}

/// Enumerates every deterministic policy and returns the componentwise best
/// value (the optimal value of a finite MDP).
inline Eigen::VectorXd brute_force_optimal_value(const rlrv::Mdp& mdp) {
  const int n = mdp.n_states();
  const int m = mdp.n_actions();
  std::vector<int> actions(n, 0);
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  while (true) {
    best = best.cwiseMax(iterated_value(mdp, actions));
    int i = 0;
    while (i < n && ++actions[i] == m) actions[i++] = 0;
    if (i == n) break;
  }
  return best;
}

/// Mean of the first `iterations` iterates p_{k+1} = T^T p_k from uniform.
/// Converges for periodic irreducible chains where plain iteration does not.
inline Eigen::VectorXd cesaro_stationary(const Eigen::MatrixXd& t, int iterations) {
  const Eigen::Index n = t.rows();
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd tt = t.transpose();
  for (int k = 0; k < iterations; ++k) {
    sum += p;
    p = tt * p;
  }
  return sum / iterations;
}

/// Random row-stochastic matrix with strictly positive entries.
inline Eigen::MatrixXd random_positive_chain(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd t(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) t(i, j) = u(rng);
    t.row(i) /= t.row(i).sum();
  }
  return t;
}

/// Random stochastic policy with every entry positive.
inline rlrv::PolicyTable random_policy(int n_states, int n_actions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::MatrixXd p(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) p(s, a) = u(rng);
    p.row(s) /= p.row(s).sum();
  }
  return rlrv::PolicyTable(p);
}

/// Sample mean and covariance of row vectors.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline Moments sample_moments(const std::vector<Eigen::VectorXd>& xs) {
  const Eigen::Index n = xs.front().size();
  Moments m{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  for (const auto& x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (const auto& x : xs) m.cov += (x - m.mean) * (x - m.mean).transpose();
  m.cov /= static_cast<double>(xs.size() - 1);
  return m;
}

}  // namespace oracle
