#include "tagscope/crf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tagscope {

namespace {

void check_shapes(const Eigen::MatrixXd& emissions,
                  const Eigen::MatrixXd& transitions) {
  if (emissions.rows() < 1)
    throw std::runtime_error("chain scoring: empty emission matrix");
  if (transitions.rows() != transitions.cols() + 1)
    throw std::runtime_error(
        "chain scoring: transition matrix must have one extra row for start "
        "scores");
  if (emissions.cols() != transitions.cols())
    throw std::runtime_error("chain scoring: emission/transition tag count "
                             "mismatch");
}

// log sum_i exp(v[i]) with the max shifted out for stability.
double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  double s = (v.array() - m).exp().sum();
  return m + std::log(s);
}

}  // namespace

double sequence_score(const Eigen::MatrixXd& emissions,
                      const Eigen::MatrixXd& transitions,
                      const std::vector<int>& tags) {
  check_shapes(emissions, transitions);
  const int n = static_cast<int>(emissions.rows());
  if (static_cast<int>(tags.size()) != n)
    throw std::runtime_error("sequence_score: tag path length mismatch");
  const int start = start_row(transitions);
  double score = transitions(start, tags[0]) + emissions(0, tags[0]);
  for (int i = 1; i < n; ++i)
    score += transitions(tags[i - 1], tags[i]) + emissions(i, tags[i]);
  return score;
}

double log_partition(const Eigen::MatrixXd& emissions,
                     const Eigen::MatrixXd& transitions) {
  check_shapes(emissions, transitions);
  const int n = static_cast<int>(emissions.rows());
  const int t_count = static_cast<int>(emissions.cols());
  const int start = start_row(transitions);

  Eigen::VectorXd alpha =
      transitions.row(start).transpose() + emissions.row(0).transpose();
  for (int i = 1; i < n; ++i) {
    Eigen::VectorXd next(t_count);
    for (int t = 0; t < t_count; ++t)
      next[t] = log_sum_exp(alpha + transitions.col(t).head(t_count)) +
                emissions(i, t);
    alpha = next;
  }
  return log_sum_exp(alpha);
}

double sentence_nll(const Eigen::MatrixXd& emissions,
                    const Eigen::MatrixXd& transitions,
                    const std::vector<int>& tags) {
  return log_partition(emissions, transitions) -
         sequence_score(emissions, transitions, tags);
}

std::vector<int> viterbi(const Eigen::MatrixXd& emissions,
                         const Eigen::MatrixXd& transitions) {
  check_shapes(emissions, transitions);
  const int n = static_cast<int>(emissions.rows());
  const int t_count = static_cast<int>(emissions.cols());
  const int start = start_row(transitions);

  Eigen::VectorXd best =
      transitions.row(start).transpose() + emissions.row(0).transpose();
  Eigen::MatrixXi back(n, t_count);
  for (int i = 1; i < n; ++i) {
    Eigen::VectorXd next(t_count);
    for (int t = 0; t < t_count; ++t) {
      int arg = 0;
      double top = best[0] + transitions(0, t);
      for (int p = 1; p < t_count; ++p) {
        double cand = best[p] + transitions(p, t);
        if (cand > top) {  // strict: ties keep the lower previous tag
          top = cand;
          arg = p;
        }
      }
      next[t] = top + emissions(i, t);
      back(i, t) = arg;
    }
    best = next;
  }

  int last = 0;
  for (int t = 1; t < t_count; ++t)
    if (best[t] > best[last]) last = t;

  std::vector<int> path(n);
  path[n - 1] = last;
  for (int i = n - 1; i > 0; --i) path[i - 1] = back(i, path[i]);
  return path;
}

CrfGrad sentence_nll_grad(const Eigen::MatrixXd& emissions,
                          const Eigen::MatrixXd& transitions,
                          const std::vector<int>& tags) {
  check_shapes(emissions, transitions);
  const int n = static_cast<int>(emissions.rows());
  const int t_count = static_cast<int>(emissions.cols());
  if (static_cast<int>(tags.size()) != n)
    throw std::runtime_error("sentence_nll_grad: tag path length mismatch");
  const int start = start_row(transitions);

  // Forward and backward log-messages.
  Eigen::MatrixXd alpha(n, t_count), beta(n, t_count);
  alpha.row(0) = transitions.row(start) + emissions.row(0);
  for (int i = 1; i < n; ++i)
    for (int t = 0; t < t_count; ++t)
      alpha(i, t) = log_sum_exp(alpha.row(i - 1).transpose() +
                                transitions.col(t).head(t_count)) +
                    emissions(i, t);
  beta.row(n - 1).setZero();
  for (int i = n - 2; i >= 0; --i)
    for (int t = 0; t < t_count; ++t)
      beta(i, t) = log_sum_exp(
          transitions.row(t).transpose() + emissions.row(i + 1).transpose() +
          beta.row(i + 1).transpose());
  const double log_z = log_sum_exp(alpha.row(n - 1).transpose());

  CrfGrad g;
  g.d_emissions.resize(n, t_count);
  g.d_transitions = Eigen::MatrixXd::Zero(t_count + 1, t_count);

  // Unary marginals minus the gold indicator.
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_count; ++t)
      g.d_emissions(i, t) =
          std::exp(alpha(i, t) + beta(i, t) - log_z) - (tags[i] == t ? 1 : 0);

  // Start-transition marginals: the path takes exactly one start edge.
  for (int t = 0; t < t_count; ++t)
    g.d_transitions(start, t) =
        std::exp(alpha(0, t) + beta(0, t) - log_z) - (tags[0] == t ? 1 : 0);

  // Pairwise marginals for interior transitions.
  for (int i = 1; i < n; ++i) {
    for (int p = 0; p < t_count; ++p)
      for (int t = 0; t < t_count; ++t)
        g.d_transitions(p, t) +=
            std::exp(alpha(i - 1, p) + transitions(p, t) + emissions(i, t) +
                     beta(i, t) - log_z);
    g.d_transitions(tags[i - 1], tags[i]) -= 1.0;
  }
  return g;
}

}  // namespace tagscope
