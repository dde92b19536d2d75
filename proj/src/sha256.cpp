#include "cmos/sha256.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>

#include "cmos/errors.hpp"
#include "cmos/util.hpp"

namespace cmos {

namespace {

struct DigestCtx {
  EVP_MD_CTX* ctx;
  DigestCtx() : ctx(EVP_MD_CTX_new()) {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      throw Error(Err::IoError, "sha256 init failed");
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  void update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(ctx, data, len) != 1)
      throw Error(Err::IoError, "sha256 update failed");
  }
  std::string finish() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, digest.data(), &len) != 1)
      throw Error(Err::IoError, "sha256 final failed");
    std::string hex;
    hex.reserve(2 * len);
    static const char* alphabet = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
      hex.push_back(alphabet[digest[i] >> 4]);
      hex.push_back(alphabet[digest[i] & 0xf]);
    }
    return hex;
  }
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  DigestCtx d;
  d.update(data.data(), data.size());
  return d.finish();
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::FileNotFound, path.string());
  DigestCtx d;
  std::array<char, 65536> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.finish();
}

}  // namespace cmos
