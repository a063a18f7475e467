#include "fnd/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "fnd/error.hpp"

namespace fnd {

namespace {

using json = nlohmann::ordered_json;

class Digest {
public:
  Digest() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw IoError("sha256: cannot initialise digest");
  }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, out, &len);
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
      s += digits[out[i] >> 4];
      s += digits[out[i] & 0xF];
    }
    return s;
  }

private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Digest d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const std::filesystem::path& p) {
  input_digests[p.string()] = sha256_file(p);
}

void RunManifest::add_output(const std::filesystem::path& p) {
  output_digests[p.filename().string()] = sha256_file(p);
}

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = input_digests;
  j["outputs"] = output_digests;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2);
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  const auto path = dir / "manifest.json";
  json all = json::object();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      all = json::parse(ss.str());
      if (!all.is_object()) all = json::object();
    } catch (const nlohmann::json::exception&) {
      all = json::object();
    }
  }
  all[m.command] = json::parse(m.to_json());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << all.dump(2) << "\n";
}

}  // namespace fnd
