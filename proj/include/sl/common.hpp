#pragma once

#include <stdexcept>
#include <string>

namespace sl {

// All precondition and data violations surface as sl::Error.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

}  // namespace sl
