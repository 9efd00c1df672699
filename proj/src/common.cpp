#include "ctxkm/common.hpp"

#include <iostream>

namespace ctxkm {

void fail(errc kind, const std::string& msg) { throw Error(kind, msg); }

void log_warning(const std::string& msg) { std::cerr << "[warn] " << msg << "\n"; }

void Fnv1a::update(const void* data, std::size_t len) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state_ ^= static_cast<std::uint64_t>(p[i]);
    state_ *= 0x100000001b3ull;
  }
}

}  // namespace ctxkm
