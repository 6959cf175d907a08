#pragma once

// Field snapshots: one UTF-8 header line
//   kerrbeam-fld n_points=<n> z_min=<m> z_max=<m> t=<s> config_hash=<hex>
// followed by little-endian interleaved (re, im) doubles for psi1 and then
// the physical (lab-frame) psi2.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/twa/grid.hpp"
#include "kerrbeam/twa/state.hpp"

namespace kerrbeam::twa {

struct SnapshotHeader {
  std::size_t n_points = 0;
  double z_min = 0.0;
  double z_max = 0.0;
  double t = 0.0;
  std::uint64_t config_hash = 0;
};

struct Snapshot {
  SnapshotHeader header;
  std::vector<cplx> psi1;
  std::vector<cplx> psi2;  // lab frame
};

inline std::string snapshot_filename(std::size_t trajectory, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snap_%zu_%.4f.fld", trajectory, t * 1e3);
  return buf;
}

namespace fld {

inline void put_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline double get_double(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ConfigError("snapshot: truncated field data");
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace fld

inline void write_snapshot(const std::filesystem::path& path, const TrajectoryState& s, const Grid1D& grid,
                           std::uint64_t config_hash) {
  detail::require(s.size() == grid.size(), "write_snapshot: state does not match grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open snapshot file for writing: " + path.string());
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  std::ostringstream head;
  head.precision(17);
  head << "kerrbeam-fld n_points=" << grid.size() << " z_min=" << grid.z_min() << " z_max=" << grid.z_max()
       << " t=" << s.t << " config_hash=" << hash << '\n';
  out << head.str();
  for (const cplx& v : s.psi1) {
    fld::put_double(out, v.real());
    fld::put_double(out, v.imag());
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    const cplx v = s.physical_psi2(grid, i);
    fld::put_double(out, v.real());
    fld::put_double(out, v.imag());
  }
  if (!out) throw ConfigError("failed writing snapshot: " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot file: " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream head(line);
  std::string magic;
  head >> magic;
  if (magic != "kerrbeam-fld") throw ConfigError("not a field snapshot: " + path.string());
  Snapshot snap;
  bool seen[5] = {};
  std::string token;
  while (head >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed snapshot header token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "n_points") snap.header.n_points = std::stoull(value), seen[0] = true;
      else if (key == "z_min") snap.header.z_min = std::stod(value), seen[1] = true;
      else if (key == "z_max") snap.header.z_max = std::stod(value), seen[2] = true;
      else if (key == "t") snap.header.t = std::stod(value), seen[3] = true;
      else if (key == "config_hash") snap.header.config_hash = std::stoull(value, nullptr, 16), seen[4] = true;
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for '" + key + "' in snapshot header: " + path.string());
    }
  }
  for (bool b : seen)
    if (!b) throw ConfigError("incomplete snapshot header: " + path.string());
  const std::size_t n = snap.header.n_points;
  snap.psi1.resize(n);
  snap.psi2.resize(n);
  for (auto& v : snap.psi1) v = {fld::get_double(in), fld::get_double(in)};
  for (auto& v : snap.psi2) v = {fld::get_double(in), fld::get_double(in)};
  return snap;
}

}  // namespace kerrbeam::twa
