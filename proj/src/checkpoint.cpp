#include "tagscope/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tagscope/format.hpp"

namespace tagscope {

namespace {

constexpr const char* kMagic = "tagscope-checkpoint v1";

std::uint64_t parse_u64_strict(const std::string& text,
                               const std::string& field) {
  try {
    return static_cast<std::uint64_t>(std::stoull(text));
  } catch (const std::exception&) {
    throw std::runtime_error("checkpoint: field '" + field +
                             "': bad integer '" + text + "'");
  }
}

void write_matrix(std::ostream& out, const std::string& name,
                  const Eigen::MatrixXd& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const std::string& name,
                  const Eigen::VectorXd& v) {
  write_matrix(out, name, v);
}

class FieldReader {
 public:
  explicit FieldReader(std::istream& in) : in_(in) {}

  std::string expect(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line))
      throw std::runtime_error("checkpoint: truncated before field '" + key +
                               "'");
    auto space = line.find(' ');
    const std::string found = line.substr(0, space);
    if (found != key)
      throw std::runtime_error("checkpoint: expected field '" + key +
                               "', found '" + found + "'");
    return space == std::string::npos ? "" : line.substr(space + 1);
  }

  Eigen::MatrixXd expect_tensor(const std::string& name, Eigen::Index rows,
                                Eigen::Index cols) {
    std::istringstream header(expect("tensor"));
    std::string found;
    Eigen::Index r = 0, c = 0;
    header >> found >> r >> c;
    if (found != name)
      throw std::runtime_error("checkpoint: expected tensor '" + name +
                               "', found '" + found + "'");
    if (r != rows || c != cols)
      throw std::runtime_error(
          "checkpoint: tensor '" + name + "' has shape " + std::to_string(r) +
          "x" + std::to_string(c) + ", expected " + std::to_string(rows) +
          "x" + std::to_string(cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      std::string line;
      if (!std::getline(in_, line))
        throw std::runtime_error("checkpoint: tensor '" + name +
                                 "' truncated at row " + std::to_string(i));
      std::istringstream row(line);
      std::string cell;
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(row >> cell))
          throw std::runtime_error("checkpoint: tensor '" + name + "' row " +
                                   std::to_string(i) + " has fewer than " +
                                   std::to_string(cols) + " values");
        try {
          m(i, j) = parse_double_strict(cell);
        } catch (const std::exception&) {
          throw std::runtime_error("checkpoint: tensor '" + name + "' row " +
                                   std::to_string(i) + " col " +
                                   std::to_string(j) + ": bad number '" +
                                   cell + "'");
        }
      }
      if (std::string extra; row >> extra)
        throw std::runtime_error("checkpoint: tensor '" + name + "' row " +
                                 std::to_string(i) + " has trailing values");
    }
    return m;
  }

 private:
  std::istream& in_;
};

}  // namespace

std::uint64_t content_fingerprint(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  return hash;
}

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const ModelParams& m = ckpt.model;
  const Hyperparams& hp = m.hp;
  out << kMagic << '\n';
  out << "cell " << cell_kind_name(hp.cell) << '\n';
  out << "embed_dim " << hp.embed_dim << '\n';
  out << "hidden " << hp.hidden << '\n';
  out << "seed " << hp.seed << '\n';
  out << "lr " << format_double(hp.lr) << '\n';
  out << "epochs " << hp.epochs << '\n';
  out << "clip_norm " << format_double(hp.clip_norm) << '\n';
  out << "freeze_transitions " << (hp.freeze_transitions ? 1 : 0) << '\n';
  out << "scheme " << (ckpt.tagset.scheme() == TagScheme::IOB1 ? "iob1" : "bio2")
      << '\n';
  out << "tags";
  for (const auto& name : ckpt.tagset.names()) out << ' ' << name;
  out << '\n';
  std::ostringstream fp;
  fp << std::hex << ckpt.embedding_fingerprint;
  out << "embedding_fingerprint " << fp.str() << '\n';
  write_matrix(out, "fwd.w_input", m.forward_cell.w_input);
  write_matrix(out, "fwd.w_hidden", m.forward_cell.w_hidden);
  write_vector(out, "fwd.bias", m.forward_cell.bias);
  write_matrix(out, "bwd.w_input", m.backward_cell.w_input);
  write_matrix(out, "bwd.w_hidden", m.backward_cell.w_hidden);
  write_vector(out, "bwd.bias", m.backward_cell.bias);
  write_matrix(out, "projection", m.projection);
  write_vector(out, "bias", m.bias);
  write_matrix(out, "transitions", m.transitions);
  out << "end\n";
}

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  save_checkpoint(ckpt, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic))
    throw std::runtime_error("checkpoint: empty file");
  if (magic != kMagic)
    throw std::runtime_error(
        "checkpoint: unsupported format or version (first line '" + magic +
        "', expected '" + std::string(kMagic) + "')");

  FieldReader reader(in);
  auto double_field = [&reader](const std::string& key) {
    const std::string text = reader.expect(key);
    try {
      return parse_double_strict(text);
    } catch (const std::exception&) {
      throw std::runtime_error("checkpoint: field '" + key +
                               "': bad number '" + text + "'");
    }
  };
  Hyperparams hp;
  hp.cell = cell_kind_from_name(reader.expect("cell"));
  hp.embed_dim =
      static_cast<int>(parse_u64_strict(reader.expect("embed_dim"), "embed_dim"));
  hp.hidden =
      static_cast<int>(parse_u64_strict(reader.expect("hidden"), "hidden"));
  hp.seed = parse_u64_strict(reader.expect("seed"), "seed");
  hp.lr = double_field("lr");
  hp.epochs =
      static_cast<int>(parse_u64_strict(reader.expect("epochs"), "epochs"));
  hp.clip_norm = double_field("clip_norm");
  hp.freeze_transitions =
      parse_u64_strict(reader.expect("freeze_transitions"),
                       "freeze_transitions") != 0;
  if (hp.embed_dim < 1 || hp.hidden < 1)
    throw std::runtime_error("checkpoint: field 'embed_dim'/'hidden' must be positive");

  const std::string scheme_text = reader.expect("scheme");
  TagScheme scheme;
  if (scheme_text == "iob1")
    scheme = TagScheme::IOB1;
  else if (scheme_text == "bio2")
    scheme = TagScheme::BIO2;
  else
    throw std::runtime_error("checkpoint: field 'scheme': unknown value '" +
                             scheme_text + "'");

  std::istringstream tag_line(reader.expect("tags"));
  std::vector<std::string> tag_names;
  for (std::string name; tag_line >> name;) tag_names.push_back(name);
  if (tag_names.empty())
    throw std::runtime_error("checkpoint: field 'tags' is empty");

  Checkpoint ckpt;
  ckpt.tagset = TagSet::from_names(tag_names, scheme);
  if (ckpt.tagset.size() != static_cast<int>(tag_names.size()))
    throw std::runtime_error(
        "checkpoint: field 'tags' is not a complete inventory");

  const std::string fp_text = reader.expect("embedding_fingerprint");
  try {
    ckpt.embedding_fingerprint = std::stoull(fp_text, nullptr, 16);
  } catch (const std::exception&) {
    throw std::runtime_error(
        "checkpoint: field 'embedding_fingerprint': bad hash '" + fp_text +
        "'");
  }

  const int g = gate_count(hp.cell);
  const int t_count = ckpt.tagset.size();
  ModelParams& m = ckpt.model;
  m.hp = hp;
  m.forward_cell.kind = m.backward_cell.kind = hp.cell;
  m.forward_cell.input_dim = m.backward_cell.input_dim = hp.embed_dim;
  m.forward_cell.hidden = m.backward_cell.hidden = hp.hidden;
  m.forward_cell.w_input =
      reader.expect_tensor("fwd.w_input", g * hp.hidden, hp.embed_dim);
  m.forward_cell.w_hidden =
      reader.expect_tensor("fwd.w_hidden", g * hp.hidden, hp.hidden);
  m.forward_cell.bias = reader.expect_tensor("fwd.bias", g * hp.hidden, 1);
  m.backward_cell.w_input =
      reader.expect_tensor("bwd.w_input", g * hp.hidden, hp.embed_dim);
  m.backward_cell.w_hidden =
      reader.expect_tensor("bwd.w_hidden", g * hp.hidden, hp.hidden);
  m.backward_cell.bias = reader.expect_tensor("bwd.bias", g * hp.hidden, 1);
  m.projection = reader.expect_tensor("projection", t_count, 2 * hp.hidden);
  m.bias = reader.expect_tensor("bias", t_count, 1);
  m.transitions = reader.expect_tensor("transitions", t_count + 1, t_count);
  reader.expect("end");
  return ckpt;
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  return load_checkpoint(in);
}

}  // namespace tagscope
