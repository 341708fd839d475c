#pragma once

#include <stdexcept>
#include <string>

namespace fibersim {

enum class ErrorCode {
  Parameter = 1,
  Dimension = 2,
  Numerical = 3,
  Config = 4,
  Acceptance = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

}  // namespace fibersim
