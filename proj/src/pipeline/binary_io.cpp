#include "zdc/pipeline/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "zdc/errors.hpp"

namespace zdc::pipeline {

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void append_f32(std::string& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(out.data() + start + 4 * i, &bits, 4);
  }
}

std::vector<float> decode_f32(const std::string& bytes, std::size_t offset, std::size_t count) {
  if (offset > bytes.size() || (bytes.size() - offset) / 4 < count) throw FormatError("float block out of range");
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + offset + 4 * i, 4);
    out[i] = std::bit_cast<float>(to_little(bits));
  }
  return out;
}

void write_f32(const fs::path& path, std::span<const float> values) {
  std::string bytes;
  append_f32(bytes, values);
  write_text(path, bytes);
}

std::vector<float> read_f32(const fs::path& path) {
  const std::string bytes = read_text(path);
  if (bytes.size() % 4 != 0) throw FormatError(path.string() + ": size is not a multiple of 4 bytes");
  return decode_f32(bytes, 0, bytes.size() / 4);
}

void write_u8(const fs::path& path, std::span<const std::uint8_t> values) {
  write_text(path, std::string(values.begin(), values.end()));
}

std::vector<std::uint8_t> read_u8(const fs::path& path) {
  const std::string bytes = read_text(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  finish(out, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

std::string fnv1a_hex(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kDigits[h & 0xf];
  return s;
}

}  // namespace zdc::pipeline
