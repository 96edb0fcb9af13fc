#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ctst {

// Content address of a backend request: SHA-256 over (kind, model, canonical
// body, attempt). nlohmann objects iterate in sorted key order, so the compact
// dump is canonical.
struct CacheKey {
  std::string digest;

  static CacheKey of(std::string_view kind, std::string_view model, const nlohmann::json& body, int attempt = 0);

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

// On-disk response cache. Payloads are stored byte-for-byte; writes are
// serialized and land via atomic rename, so concurrent readers never observe
// partial files.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, std::string_view payload);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::size_t entries_written() const noexcept { return written_.load(); }

 private:
  std::filesystem::path path_for(const CacheKey& key) const;

  std::filesystem::path dir_;
  std::mutex write_mutex_;
  std::atomic<std::size_t> written_{0};
};

}  // namespace ctst
