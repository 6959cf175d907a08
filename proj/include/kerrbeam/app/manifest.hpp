#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kerrbeam/error.hpp"

#ifndef KERRBEAM_VERSION
#define KERRBEAM_VERSION "unknown"
#endif

namespace kerrbeam::app {

inline constexpr const char* kVersion = KERRBEAM_VERSION;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct EmittedFile {
  std::string name;
  std::uint64_t hash = 0;
  std::uintmax_t bytes = 0;
};

/// Output directory that records every file written through it. Files are
/// written whole from memory so their hash is known without rereading.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, std::string_view contents) {
    const auto p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) throw Error("failed to write '" + p.string() + "'");
    record(name, contents);
  }

  /// For files produced elsewhere (snapshots); hashes the bytes on disk.
  void record_existing(const std::string& name) {
    std::ifstream in(dir_ / name, std::ios::binary);
    if (!in) throw Error("cannot read back '" + (dir_ / name).string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    record(name, buf.str());
  }

  const std::vector<EmittedFile>& files() const { return files_; }

 private:
  void record(const std::string& name, std::string_view contents) {
    files_.push_back({name, fnv1a(contents), contents.size()});
  }

  std::filesystem::path dir_;
  std::vector<EmittedFile> files_;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::chrono::system_clock::time_point start;
  std::chrono::system_clock::time_point end;
  std::vector<EmittedFile> files;

  /// Wall times are the only lines that differ between identical runs.
  std::string text() const {
    std::ostringstream s;
    s << "command = " << command << '\n';
    s << "code_version = " << kVersion << '\n';
    s << "config_hash = " << config_hash << '\n';
    s << "master_seed = " << seed << '\n';
    s << "start_utc = " << utc_timestamp(start) << '\n';
    s << "end_utc = " << utc_timestamp(end) << '\n';
    for (const auto& f : files) s << "file = " << f.name << ' ' << hex64(f.hash) << ' ' << f.bytes << '\n';
    return s.str();
  }
};

}  // namespace kerrbeam::app
