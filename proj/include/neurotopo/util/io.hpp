#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/util/sha256.hpp"

namespace neurotopo {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need swaps");

namespace io {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), size))
    throw std::runtime_error("failed to read file: " + path.string());
  return data;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

// Write-to-temp-then-rename so a crash never leaves a half-written output.
inline void write_file_atomic(const std::filesystem::path& path,
                              const void* data, std::size_t size) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    if (size > 0) out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw std::runtime_error("failed to write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::vector<std::uint8_t>& bytes) {
  write_file_atomic(path, bytes.data(), bytes.size());
}

inline std::string sha256_of_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return Sha256::hex_of(bytes.data(), bytes.size());
}

// Little-endian append helpers for building binary blobs.
struct ByteWriter {
  std::vector<std::uint8_t> bytes;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void text(const std::string& s) { raw(s.data(), s.size()); }
};

// Bounds-checked little-endian reader.
struct ByteReader {
  const std::uint8_t* p;
  std::size_t size;
  std::size_t pos = 0;
  std::string source;  // named in error messages

  ByteReader(const std::vector<std::uint8_t>& v, std::string src)
      : p(v.data()), size(v.size()), source(std::move(src)) {}
  // reads borrow the buffer, so it must outlive the reader
  ByteReader(std::vector<std::uint8_t>&&, std::string) = delete;

  void need(std::size_t n, const char* field) const {
    if (pos + n > size)
      throw std::runtime_error(source + ": truncated while reading " +
                               std::string(field));
  }
  void raw(void* out, std::size_t n, const char* field) {
    need(n, field);
    std::memcpy(out, p + pos, n);
    pos += n;
  }
  std::uint8_t u8(const char* field) { std::uint8_t v; raw(&v, 1, field); return v; }
  std::uint16_t u16(const char* field) { std::uint16_t v; raw(&v, 2, field); return v; }
  std::uint32_t u32(const char* field) { std::uint32_t v; raw(&v, 4, field); return v; }
  std::uint64_t u64(const char* field) { std::uint64_t v; raw(&v, 8, field); return v; }
  std::int32_t i32(const char* field) { std::int32_t v; raw(&v, 4, field); return v; }
  float f32(const char* field) { float v; raw(&v, 4, field); return v; }
  double f64(const char* field) { double v; raw(&v, 8, field); return v; }
};

}  // namespace io
}  // namespace neurotopo
