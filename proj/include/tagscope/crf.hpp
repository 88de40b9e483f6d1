#pragma once

// Sentence-level log-likelihood over tag sequences: a linear chain scored by
// per-token emissions plus tag-transition weights, normalized over all paths.
//
// Conventions:
//  - emissions: n x |T| matrix, row per token.
//  - transitions: (|T|+1) x |T|; row |T| holds start scores, row p tag-to-tag
//    scores from previous tag p. There is no explicit stop transition.

#include <Eigen/Dense>
#include <vector>

namespace tagscope {

// Row index of the start scores inside the transition matrix.
inline int start_row(const Eigen::MatrixXd& transitions) {
  return static_cast<int>(transitions.rows()) - 1;
}

// Unnormalized log-score of one tag path.
double sequence_score(const Eigen::MatrixXd& emissions,
                      const Eigen::MatrixXd& transitions,
                      const std::vector<int>& tags);

// log sum over all tag paths of exp(sequence_score), computed in log space.
double log_partition(const Eigen::MatrixXd& emissions,
                     const Eigen::MatrixXd& transitions);

// -log p(tags | sentence) = log_partition - sequence_score.
double sentence_nll(const Eigen::MatrixXd& emissions,
                    const Eigen::MatrixXd& transitions,
                    const std::vector<int>& tags);

// Highest-scoring tag path; ties break toward the lower tag id.
std::vector<int> viterbi(const Eigen::MatrixXd& emissions,
                         const Eigen::MatrixXd& transitions);

struct CrfGrad {
  Eigen::MatrixXd d_emissions;   // n x |T|
  Eigen::MatrixXd d_transitions; // (|T|+1) x |T|
};

// Gradient of sentence_nll with respect to emissions and transitions,
// via forward-backward marginals: d/dE(i,t) = P(y_i = t) - [gold_i == t].
CrfGrad sentence_nll_grad(const Eigen::MatrixXd& emissions,
                          const Eigen::MatrixXd& transitions,
                          const std::vector<int>& tags);

}  // namespace tagscope
