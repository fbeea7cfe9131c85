#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "carnot/qmc.hpp"

namespace carnot::cli {

// JSON records on disk, one file per canonical input string.
class ConstantCache {
 public:
  explicit ConstantCache(bool enabled) : enabled_(enabled) {
    if (!enabled_) return;
    if (const char* d = std::getenv("CARNOT_CACHE_DIR"); d && *d) {
      dir_ = d;
    } else if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) {
      dir_ = std::filesystem::path(x) / "carnot";
    } else if (const char* h = std::getenv("HOME"); h && *h) {
      dir_ = std::filesystem::path(h) / ".cache" / "carnot";
    } else {
      enabled_ = false;
    }
  }

  std::optional<nlohmann::json> load(const std::string& key) const {
    if (!enabled_) return std::nullopt;
    std::ifstream in(path(key));
    if (!in) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(in);
      if (j.value("cache_key", "") != key) return std::nullopt;
      j.erase("cache_key");
      return j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& key, nlohmann::json j) const {
    if (!enabled_) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) return;
    j["cache_key"] = key;
    auto target = path(key);
    auto tmp = target;
    tmp += ".tmp" + std::to_string(splitmix64(reinterpret_cast<std::uintptr_t>(&j)));
    {
      std::ofstream out(tmp);
      if (!out) return;
      out << j.dump(2) << "\n";
      if (!out) return;
    }
    std::filesystem::rename(tmp, target, ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

 private:
  std::filesystem::path path(const std::string& key) const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(key) << ".json";
    return dir_ / os.str();
  }

  bool enabled_;
  std::filesystem::path dir_;
};

}  // namespace carnot::cli
