#pragma once

#include <stdexcept>
#include <string>

namespace afford {

// Thrown on any contract violation (shape mismatch, bad mode, missing file, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace afford
