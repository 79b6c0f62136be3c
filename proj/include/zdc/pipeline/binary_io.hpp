#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace zdc::pipeline {

namespace fs = std::filesystem;

/// Little-endian 32-bit float files, independent of host byte order.
void write_f32(const fs::path& path, std::span<const float> values);
std::vector<float> read_f32(const fs::path& path);

void write_u8(const fs::path& path, std::span<const std::uint8_t> values);
std::vector<std::uint8_t> read_u8(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Little-endian encoding of `values` appended to `out`.
void append_f32(std::string& out, std::span<const float> values);
/// Decodes `count` floats starting at byte `offset`.
std::vector<float> decode_f32(const std::string& bytes, std::size_t offset, std::size_t count);

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(std::span<const char> bytes);

}  // namespace zdc::pipeline
