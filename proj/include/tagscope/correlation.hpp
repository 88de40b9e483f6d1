#pragma once

// Distribution and vector comparison used to relate relevance tables and
// per-instance weight/hidden vectors.

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace tagscope {
struct ModelParams;
struct HiddenStates;
enum class Side;

// KL(A || B) = sum_i A_i ln(A_i / B_i), with 0 * ln(0/b) = 0. Throws if some
// A_i > 0 has B_i == 0, or if either input is not a distribution over the
// same support size.
double kl_divergence(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Pearson correlation with population moments. Throws when either vector has
// zero variance.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Softmax with the max shifted out; output sums to 1.
Eigen::VectorXd normalize_distribution(const Eigen::VectorXd& v);

struct CorrelationTriple {
  int tag = -1;
  double dot = 0;                // w . h + bias
  double kl = 0;                 // KL(softmax(w) || softmax(h)), >= 0
  std::optional<double> pcc;     // missing when a vector is constant
};

// Per-tag comparison of one side's tag weights against the hidden vector of
// one token, sorted by dot product descending (ties toward lower tag id).
std::vector<CorrelationTriple> correlate_instance(const ModelParams& model,
                                                  const HiddenStates& states,
                                                  int token, Side side);

}  // namespace tagscope
