#include "tagscope/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tagscope/nn.hpp"

namespace tagscope {

double kl_divergence(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::runtime_error("kl_divergence: size mismatch");
  if (a.size() == 0) throw std::runtime_error("kl_divergence: empty input");
  if (std::abs(a.sum() - 1.0) > 1e-9 || std::abs(b.sum() - 1.0) > 1e-9)
    throw std::runtime_error("kl_divergence: inputs must sum to 1");
  double kl = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0)
      throw std::runtime_error("kl_divergence: negative probability");
    if (a[i] == 0) continue;
    if (b[i] == 0)
      throw std::runtime_error(
          "kl_divergence: zero reference probability where the first "
          "distribution has mass");
    kl += a[i] * std::log(a[i] / b[i]);
  }
  return kl;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::runtime_error("pearson: size mismatch");
  const Eigen::Index n = a.size();
  if (n < 2) throw std::runtime_error("pearson: need at least two values");
  const double ma = a.mean();
  const double mb = b.mean();
  double cov = 0, va = 0, vb = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0 || vb == 0)
    throw std::runtime_error("pearson: zero variance input");
  return cov / std::sqrt(va * vb);
}

Eigen::VectorXd normalize_distribution(const Eigen::VectorXd& v) {
  if (v.size() == 0)
    throw std::runtime_error("normalize_distribution: empty input");
  const double m = v.maxCoeff();
  Eigen::VectorXd e = (v.array() - m).exp();
  return e / e.sum();
}

std::vector<CorrelationTriple> correlate_instance(const ModelParams& model,
                                                  const HiddenStates& states,
                                                  int token, Side side) {
  const int t_count = model.num_tags();
  const Eigen::VectorXd h = side_hidden(states, token, side);
  const Eigen::VectorXd h_dist = normalize_distribution(h);
  const bool h_constant = h.maxCoeff() == h.minCoeff();

  std::vector<CorrelationTriple> rows;
  rows.reserve(t_count);
  for (int t = 0; t < t_count; ++t) {
    const Eigen::VectorXd w = side_weights(model, t, side);
    CorrelationTriple row;
    row.tag = t;
    row.dot = w.dot(h) + model.bias[t];
    row.kl = kl_divergence(normalize_distribution(w), h_dist);
    if (!h_constant && w.maxCoeff() != w.minCoeff())
      row.pcc = pearson(w, h);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CorrelationTriple& x, const CorrelationTriple& y) {
                     return x.dot > y.dot;
                   });
  return rows;
}

}  // namespace tagscope
