// CSV / JSON emission with stable formatting: byte-identical re-runs for
// identical (config, seed) are part of the output contract.
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rglab/common.hpp"

namespace rglab::emit {

using Json = nlohmann::ordered_json;

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// RFC 4180: quote fields containing comma, quote or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : ncols_(columns.size()) {
    out_.open(path);
    if (!out_) throw std::runtime_error("unwritable path: " + path.string());
    write_row_strings(columns);
  }

  void write_row_strings(const std::vector<std::string>& fields) {
    if (fields.size() != ncols_) throw std::logic_error("CsvWriter: column count mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
  }

  void write_row(const std::vector<double>& values) {
    std::vector<std::string> fields;
    fields.reserve(values.size());
    for (double v : values) fields.push_back(format_number(v));
    write_row_strings(fields);
  }

 private:
  std::ofstream out_;
  std::size_t ncols_;
};

// Summary JSON with full provenance: resolved config, its hash, the master
// seed and a fixed version string.
inline void write_summary(const std::filesystem::path& path, const Json& config,
                          std::uint64_t seed, const Json& results) {
  Json doc;
  doc["version"] = "rglab 1.0.0";
  doc["config"] = config;
  doc["config_hash"] = fnv1a(config.dump());
  doc["seed"] = seed;
  doc["results"] = results;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("unwritable path: " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace rglab::emit
