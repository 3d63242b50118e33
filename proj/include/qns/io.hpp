#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qns/errors.hpp"
#include "qns/field.hpp"

// ---------------------------------------------------------------------------
// Artifact I/O.
//
// Every artifact carries the artifact-version string and the config hash:
// CSV as a leading '#' comment line, JSON/NDJSON as top-level fields, raw
// snapshots in their JSON sidecar. Numbers are printed with std::to_chars
// (shortest round-trip form), which is locale-independent and bitwise
// reproducible: identical values produce identical bytes on any platform.
// Snapshots store real-space samples as raw little-endian float64, one
// component after another (node index fastest), described by the sidecar.
// ---------------------------------------------------------------------------

namespace qns {

inline constexpr const char* kArtifactVersion = "qns-artifact-1";

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

namespace detail {
inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}
}  // namespace detail

// CSV with a frozen column set. First line is the artifact header comment,
// second the column header; one row per record thereafter.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
            const std::string& config_hash)
      : out_(detail::open_output(path)), columns_(columns.size()) {
    if (columns.empty()) throw IoError("csv needs at least one column");
    out_ << "# " << kArtifactVersion << " config=" << config_hash << "\n";
    for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw IoError("csv row width does not match the header");
    for (size_t i = 0; i < values.size(); ++i)
      out_ << (i ? "," : "") << format_double(values[i]);
    out_ << "\n";
    if (!out_) throw IoError("csv write failed");
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  size_t columns_;
};

// One JSON object per line; append-only event log.
class NdjsonWriter {
 public:
  NdjsonWriter(const std::filesystem::path& path, const std::string& config_hash)
      : out_(detail::open_output(path)) {
    nlohmann::json head;
    head["artifact_version"] = kArtifactVersion;
    head["config_hash"] = config_hash;
    record(head);
  }

  void record(const nlohmann::json& j) {
    out_ << j.dump() << "\n";
    if (!out_) throw IoError("ndjson write failed");
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, nlohmann::json j,
                       const std::string& config_hash) {
  j["artifact_version"] = kArtifactVersion;
  j["config_hash"] = config_hash;
  auto out = detail::open_output(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("json write failed for '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("bad json in '" + path.string() + "': " + e.what());
  }
  return j;
}

// Raw float64 snapshot of a field's real-space samples plus JSON sidecar.
// Writes <stem>.f64 and <stem>.json.
inline void write_snapshot(const std::filesystem::path& stem, const Field& f,
                           const std::string& config_hash) {
  const Field::Real samples = f.to_real();
  auto raw = detail::open_output(std::filesystem::path(stem).concat(".f64"));
  static_assert(sizeof(double) == 8);
  const bool little = std::endian::native == std::endian::little;
  for (Eigen::Index c = 0; c < samples.cols(); ++c)
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      double v = samples(i, c);
      if (!little) {
        auto bytes = std::bit_cast<std::array<unsigned char, 8>>(v);
        std::reverse(bytes.begin(), bytes.end());
        v = std::bit_cast<double>(bytes);
      }
      raw.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  if (!raw) throw IoError("snapshot write failed for '" + stem.string() + "'");

  nlohmann::json side;
  side["dtype"] = "float64";
  side["endianness"] = "little";
  side["dim"] = f.grid().dim();
  side["n"] = f.grid().n();
  side["box_length"] = f.grid().box_length();
  side["components"] = f.components();
  side["layout"] = "node index fastest, one component block after another";
  write_json(std::filesystem::path(stem).concat(".json"), side, config_hash);
}

// Reads a snapshot written by write_snapshot; validates the sidecar.
inline Field read_snapshot(const std::filesystem::path& stem) {
  const nlohmann::json side = read_json(std::filesystem::path(stem).concat(".json"));
  for (const char* key : {"dtype", "endianness", "dim", "n", "box_length", "components"})
    if (!side.contains(key))
      throw IoError("snapshot sidecar '" + stem.string() + ".json' lacks '" + key + "'");
  if (side["dtype"] != "float64" || side["endianness"] != "little")
    throw IoError("snapshot '" + stem.string() + "' has an unsupported encoding");

  const Grid<double> g(side["dim"].get<int>(), side["n"].get<Eigen::Index>(),
                       side["box_length"].get<double>());
  const Eigen::Index comps = side["components"].get<Eigen::Index>();

  std::ifstream raw(std::filesystem::path(stem).concat(".f64"), std::ios::binary);
  if (!raw) throw IoError("cannot open '" + stem.string() + ".f64'");
  Field::Real samples(g.total_modes(), comps);
  const bool little = std::endian::native == std::endian::little;
  for (Eigen::Index c = 0; c < comps; ++c)
    for (Eigen::Index i = 0; i < g.total_modes(); ++i) {
      double v = 0;
      raw.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!raw) throw IoError("snapshot '" + stem.string() + ".f64' is truncated");
      if (!little) {
        auto bytes = std::bit_cast<std::array<unsigned char, 8>>(v);
        std::reverse(bytes.begin(), bytes.end());
        v = std::bit_cast<double>(bytes);
      }
      samples(i, c) = v;
    }
  raw.peek();
  if (!raw.eof()) throw IoError("snapshot '" + stem.string() + ".f64' has trailing bytes");
  return Field::from_real(g, samples);
}

}  // namespace qns
