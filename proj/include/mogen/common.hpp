// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <sstream>
#include <vector>

namespace mogen {

// Error taxonomy for the whole engine. `user` errors are caused by bad
// input (files, flags, shapes of user-supplied data) and map to exit code 1
// in the CLI; `internal` errors indicate a bug and map to exit code 2.
class Error : public std::runtime_error {
 public:
  enum class Kind { shape, numeric, value, io, internal };

  Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class T, class... Rest>
void format_into(std::ostringstream& os, const T& t, const Rest&... rest) {
  os << t;
  format_into(os, rest...);
}
}  // namespace detail

template <class... Args>
std::string strcat_all(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  return os.str();
}

template <class... Args>
[[noreturn]] void fail_shape(const Args&... args) {
  throw Error(Error::Kind::shape, strcat_all(args...));
}
template <class... Args>
[[noreturn]] void fail_value(const Args&... args) {
  throw Error(Error::Kind::value, strcat_all(args...));
}
template <class... Args>
[[noreturn]] void fail_numeric(const Args&... args) {
  throw Error(Error::Kind::numeric, strcat_all(args...));
}
template <class... Args>
[[noreturn]] void fail_io(const Args&... args) {
  throw Error(Error::Kind::io, strcat_all(args...));
}
template <class... Args>
[[noreturn]] void fail_internal(const Args&... args) {
  throw Error(Error::Kind::internal, strcat_all(args...));
}

inline std::string shape_str(const std::vector<int64_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += "]";
  return out;
}

}  // namespace mogen
