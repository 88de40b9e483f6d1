#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "tagscope/corpus.hpp"

namespace tagscope {

// Pretrained word vectors plus one shared OOV row. Immutable after load.
class EmbeddingTable {
 public:
  // Text format: "word v1 ... vd" per line, consistent d. An optional
  // leading header line of two integers is skipped. Duplicate words keep the
  // first occurrence (with a warning). The OOV row is uniform(-0.25, 0.25)
  // noise drawn from `oov_seed`.
  static EmbeddingTable load(std::istream& in, std::uint64_t oov_seed = 0);

  void save(std::ostream& out) const;

  int dim() const { return dim_; }
  // Number of in-vocabulary rows (the OOV row is extra).
  int vocab_size() const { return static_cast<int>(words_.size()); }
  int rows() const { return static_cast<int>(matrix_.rows()); }
  int oov_row() const { return oov_row_; }

  // Index for a normalized word; the OOV row when absent.
  int index_of(const std::string& normalized) const;
  bool contains(const std::string& normalized) const {
    return vocab_.count(normalized) > 0;
  }
  const std::string& word(int row) const { return words_[row]; }

  Eigen::VectorXd row(int index) const { return matrix_.row(index); }
  Eigen::VectorXd lookup(const Token& token) const {
    return matrix_.row(index_of(token.normalized));
  }

  // Fills Token::vocab_index over a dataset.
  void attach(std::vector<Sentence>& sentences) const;

 private:
  int dim_ = 0;
  int oov_row_ = 0;
  std::unordered_map<std::string, int> vocab_;
  std::vector<std::string> words_;
  Eigen::MatrixXd matrix_;  // rows() x dim, last row = OOV
};

// Component-wise uniform(-0.25, 0.25) vector; the erasure replacement.
// Identical seed gives an identical vector.
Eigen::VectorXd random_replacement(int dim, std::uint64_t seed);

}  // namespace tagscope
