#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace ptn::binio {

// Little-endian scalar IO. Host is assumed little-endian (checked once at
// startup by the tests); values are memcpy'd through fixed-width integers.

template <typename T>
void write_raw(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
bool read_raw(std::istream& is, T* v) {
  char buf[sizeof(T)];
  is.read(buf, sizeof(T));
  if (!is) return false;
  std::memcpy(v, buf, sizeof(T));
  return true;
}

inline void write_u16(std::ostream& os, std::uint16_t v) { write_raw(os, v); }
inline void write_u32(std::ostream& os, std::uint32_t v) { write_raw(os, v); }
inline void write_u8(std::ostream& os, std::uint8_t v) { write_raw(os, v); }
inline void write_f32(std::ostream& os, float v) { write_raw(os, v); }

inline bool read_u16(std::istream& is, std::uint16_t* v) { return read_raw(is, v); }
inline bool read_u32(std::istream& is, std::uint32_t* v) { return read_raw(is, v); }
inline bool read_u8(std::istream& is, std::uint8_t* v) { return read_raw(is, v); }
inline bool read_f32(std::istream& is, float* v) { return read_raw(is, v); }

inline void write_str(std::ostream& os, const std::string& s, bool u32_len) {
  if (u32_len) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
  } else {
    write_u16(os, static_cast<std::uint16_t>(s.size()));
  }
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline bool read_str(std::istream& is, std::string* s, bool u32_len) {
  std::size_t n = 0;
  if (u32_len) {
    std::uint32_t v;
    if (!read_u32(is, &v)) return false;
    n = v;
  } else {
    std::uint16_t v;
    if (!read_u16(is, &v)) return false;
    n = v;
  }
  s->resize(n);
  is.read(s->data(), static_cast<std::streamsize>(n));
  return static_cast<bool>(is);
}

}  // namespace ptn::binio
