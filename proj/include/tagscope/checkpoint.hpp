#pragma once

// Model persistence as versioned, human-readable text. Parameters are
// written as shortest round-trip decimals, so load(save(m)) reproduces every
// tensor bit-exactly and checkpoints diff cleanly.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "tagscope/corpus.hpp"
#include "tagscope/nn.hpp"

namespace tagscope {

struct Checkpoint {
  ModelParams model;
  TagSet tagset;
  // Content hash of the embedding file the model was trained with; a
  // mismatch at load time is worth a warning, not an error.
  std::uint64_t embedding_fingerprint = 0;
};

// FNV-1a over raw bytes.
std::uint64_t content_fingerprint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path);

// Throws on version mismatch or malformed content, naming the first bad
// field.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace tagscope
