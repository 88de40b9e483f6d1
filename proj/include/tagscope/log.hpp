#pragma once

#include <iostream>
#include <sstream>
#include <string>

namespace tagscope {

inline void log_warn(const std::string& msg) {
  std::cerr << "warning: " << msg << "\n";
}

inline void log_info(const std::string& msg) {
  std::cerr << msg << "\n";
}

}  // namespace tagscope
