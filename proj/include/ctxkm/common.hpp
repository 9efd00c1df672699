#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ctxkm {

// Failure categories; the CLI maps these onto process exit codes
// (config/io/format/shape/value -> 2, divergence -> 3).
enum class errc {
  config,      // invalid configuration or usage
  io,          // filesystem failures
  format,      // malformed file contents (magic, version, mode bytes, truncation)
  shape,       // inconsistent shapes in input data
  value,       // out-of-range or non-finite values
  dimension,   // mismatched dimensions between computation stages
  divergence,  // numerical blow-up during optimization
};

class Error : public std::runtime_error {
 public:
  Error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  errc kind() const noexcept { return kind_; }

 private:
  errc kind_;
};

[[noreturn]] void fail(errc kind, const std::string& msg);

// One-line diagnostic to stderr; never touches result files.
void log_warning(const std::string& msg);

// 64-bit FNV-1a, used to fingerprint context stacks so downstream stages can
// detect stale intermediate results.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len) noexcept;

  template <typename T>
  void update_value(const T& v) noexcept {
    update(&v, sizeof(T));
  }

  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace ctxkm
