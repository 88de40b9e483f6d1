#include "tagscope/embeddings.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tagscope/format.hpp"
#include "tagscope/log.hpp"
#include "tagscope/rng.hpp"

namespace tagscope {

namespace {

bool parse_double(const std::string& s, double* out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, *out);
  return res.ec == std::errc() && res.ptr == e;
}

// Header line: exactly two integer fields (vocab count, dimension).
bool is_header(const std::vector<std::string>& fields) {
  if (fields.size() != 2) return false;
  for (const auto& f : fields) {
    long v;
    auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) return false;
  }
  return true;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(std::move(field));
  return out;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(std::istream& in, std::uint64_t oov_seed) {
  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (first_content_line && is_header(fields)) {
      first_content_line = false;
      continue;
    }
    first_content_line = false;
    if (fields.size() < 2)
      throw std::runtime_error("vector file line " + std::to_string(line_no) +
                               ": expected 'word v1 ... vd'");
    int d = static_cast<int>(fields.size()) - 1;
    if (table.dim_ == 0) {
      table.dim_ = d;
    } else if (d != table.dim_) {
      throw std::runtime_error("vector file line " + std::to_string(line_no) +
                               ": dimension " + std::to_string(d) +
                               " differs from " + std::to_string(table.dim_));
    }
    if (table.vocab_.count(fields[0])) {
      log_warn("duplicate vector for '" + fields[0] + "' at line " +
               std::to_string(line_no) + ", keeping first");
      continue;
    }
    std::vector<double> row(d);
    for (int j = 0; j < d; ++j) {
      if (!parse_double(fields[j + 1], &row[j]))
        throw std::runtime_error("vector file line " + std::to_string(line_no) +
                                 ": non-numeric field '" + fields[j + 1] + "'");
    }
    table.vocab_.emplace(fields[0], static_cast<int>(rows.size()));
    table.words_.push_back(fields[0]);
    rows.push_back(std::move(row));
  }
  if (table.dim_ == 0)
    throw std::runtime_error("vector file has no vector lines");

  table.matrix_.resize(static_cast<int>(rows.size()) + 1, table.dim_);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < table.dim_; ++j)
      table.matrix_(static_cast<int>(i), j) = rows[i][j];
  table.oov_row_ = static_cast<int>(rows.size());
  Rng rng(mix_seed(oov_seed, kSeedStreamOov));
  for (int j = 0; j < table.dim_; ++j)
    table.matrix_(table.oov_row_, j) = rng.uniform(-0.25, 0.25);
  return table;
}

void EmbeddingTable::save(std::ostream& out) const {
  for (int i = 0; i < vocab_size(); ++i) {
    out << words_[i];
    for (int j = 0; j < dim_; ++j) out << ' ' << format_double(matrix_(i, j));
    out << '\n';
  }
}

int EmbeddingTable::index_of(const std::string& normalized) const {
  auto it = vocab_.find(normalized);
  return it == vocab_.end() ? oov_row_ : it->second;
}

void EmbeddingTable::attach(std::vector<Sentence>& sentences) const {
  for (auto& s : sentences)
    for (auto& tok : s.tokens) tok.vocab_index = index_of(tok.normalized);
}

Eigen::VectorXd random_replacement(int dim, std::uint64_t seed) {
  if (dim < 1)
    throw std::invalid_argument("replacement vector dimension must be >= 1");
  Rng rng(seed);
  Eigen::VectorXd v(dim);
  for (int j = 0; j < dim; ++j) v[j] = rng.uniform(-0.25, 0.25);
  return v;
}

}  // namespace tagscope
