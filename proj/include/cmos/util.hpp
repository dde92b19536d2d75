#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cmos {

// 64-bit FNV-1a. Stable across platforms; used wherever a deterministic
// content hash is needed (mock backends, cache keys, file names).
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 step; the standard cheap generator for seeding.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) from a splitmix64 stream.
inline double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

inline std::string hex64(std::uint64_t v, int digits = 16) {
  static const char* alphabet = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = alphabet[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Tokenizer shared by the text metrics and the mock text encoder: ASCII
// case-folded, tokens are maximal runs of [A-Za-z0-9] or bytes >= 0x80,
// everything else separates.
std::vector<std::string> tokenize(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace cmos
