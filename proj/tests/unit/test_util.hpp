#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "ctst/jsonl.hpp"

namespace testutil {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CTST_FIXTURES_DIR) / name; }
inline std::filesystem::path golden(const std::string& name) { return std::filesystem::path(CTST_GOLDEN_DIR) / name; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ctst-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write(const std::filesystem::path& p, const std::string& content) { ctst::io::write_file_atomic(p, content); }

}  // namespace testutil
