#include "ctst/cache.hpp"

#include <fstream>
#include <sstream>

#include "ctst/jsonl.hpp"
#include "ctst/text.hpp"

namespace ctst {

CacheKey CacheKey::of(std::string_view kind, std::string_view model, const nlohmann::json& body, int attempt) {
  nlohmann::json envelope{{"attempt", attempt}, {"body", body}, {"kind", kind}, {"model", model}};
  return CacheKey{text::sha256_hex(envelope.dump())};
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const CacheKey& key) const {
  return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ResponseCache::put(const CacheKey& key, std::string_view payload) {
  std::lock_guard lock(write_mutex_);
  io::write_file_atomic(path_for(key), payload);
  ++written_;
}

}  // namespace ctst
