#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ctxkm/common.hpp"

// Little-endian primitives for the versioned binary formats.
namespace ctxkm::binio {

inline void write_bytes(std::ostream& os, const void* data, std::size_t len) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!os) fail(errc::io, "write failed");
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  write_bytes(os, buf, sizeof(T));
}

inline void write_u8(std::ostream& os, std::uint8_t v) { write_pod(os, v); }
inline void write_u32(std::ostream& os, std::uint32_t v) { write_pod(os, v); }
inline void write_u64(std::ostream& os, std::uint64_t v) { write_pod(os, v); }
inline void write_f32(std::ostream& os, float v) { write_pod(os, v); }
inline void write_f64(std::ostream& os, double v) { write_pod(os, v); }

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  write_bytes(os, s.data(), s.size());
}

inline void read_bytes(std::istream& is, void* data, std::size_t len, const char* what) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(is.gcount()) != len)
    fail(errc::format, std::string("unexpected end of file while reading ") + what);
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  read_bytes(is, buf, sizeof(T), what);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline std::uint8_t read_u8(std::istream& is, const char* what) { return read_pod<std::uint8_t>(is, what); }
inline std::uint32_t read_u32(std::istream& is, const char* what) { return read_pod<std::uint32_t>(is, what); }
inline std::uint64_t read_u64(std::istream& is, const char* what) { return read_pod<std::uint64_t>(is, what); }
inline float read_f32(std::istream& is, const char* what) { return read_pod<float>(is, what); }
inline double read_f64(std::istream& is, const char* what) { return read_pod<double>(is, what); }

inline std::string read_string(std::istream& is, const char* what, std::size_t max_len = 1 << 20) {
  const std::uint32_t len = read_u32(is, what);
  if (len > max_len) fail(errc::format, std::string("string length out of range in ") + what);
  std::string s(len, '\0');
  if (len > 0) read_bytes(is, s.data(), len, what);
  return s;
}

inline void expect_magic(std::istream& is, const char magic[4], const char* what) {
  char buf[4];
  read_bytes(is, buf, 4, what);
  if (std::memcmp(buf, magic, 4) != 0)
    fail(errc::format, std::string("bad magic for ") + what);
}

}  // namespace ctxkm::binio
