#include "arapdepth/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "arapdepth/error.hpp"

namespace arapdepth {

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 initialization failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["arguments"] = arguments;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const std::string& key : config_keys()) cfg[key] = get_config_value(config, key);
  j["config"] = cfg;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const std::string& in : inputs) j["inputs"].push_back({{"path", in}, {"sha256", file_sha256(in)}});
  j["outputs"] = nlohmann::ordered_json::array();
  for (const std::string& out : outputs) {
    j["outputs"].push_back({{"file", std::filesystem::path(out).filename().string()},
                            {"sha256", file_sha256(out)}});
  }
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot write manifest " + path);
  f << j.dump(2) << '\n';
}

}  // namespace arapdepth
