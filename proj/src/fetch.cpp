#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <memory>

#include "error.hpp"
#include "httplib.h"
#include "ingest.hpp"

namespace tvode::ingest {

std::string sha256_hex(std::span<const std::uint8_t> data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    fail(ErrorCode::IoError, "sha256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::filesystem::path fetch_file(const std::string& url, const std::filesystem::path& dest,
                                 const std::optional<std::string>& expected_sha256) {
  const bool https = url.rfind("https://", 0) == 0;
  if (!https && url.rfind("http://", 0) != 0)
    fail(ErrorCode::InvalidArgument, "url must be http(s): " + url);
  const std::size_t host_begin = https ? 8 : 7;
  const std::size_t path_begin = url.find('/', host_begin);
  const std::string origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
  const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  if (origin.size() == host_begin) fail(ErrorCode::InvalidArgument, "url has no host: " + url);

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  auto res = client.Get(path);
  if (!res) fail(ErrorCode::NetworkError, "request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    fail(ErrorCode::NetworkError, "GET " + url + " returned HTTP status " + std::to_string(res->status));

  const auto& body = res->body;
  {
    std::ofstream out(dest, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + dest.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for " + dest.string());
  }
  if (expected_sha256) {
    std::string want = *expected_sha256;
    std::transform(want.begin(), want.end(), want.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto got = sha256_hex({reinterpret_cast<const std::uint8_t*>(body.data()), body.size()});
    if (got != want) {
      std::error_code ec;
      std::filesystem::remove(dest, ec);
      fail(ErrorCode::ChecksumMismatch, "sha256 of " + url + " is " + got + ", expected " + want);
    }
  }
  return dest;
}

}  // namespace tvode::ingest
