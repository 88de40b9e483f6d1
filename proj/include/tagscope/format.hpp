#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace tagscope {

// Shortest decimal form that parses back to the same double. All file output
// goes through this so reruns are byte-identical and checkpoints round-trip
// losslessly.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double_strict(const std::string& s) {
  double v;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad numeric field: '" + s + "'");
  return v;
}

inline long parse_long_strict(const std::string& s) {
  long v;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad integer field: '" + s + "'");
  return v;
}

}  // namespace tagscope
