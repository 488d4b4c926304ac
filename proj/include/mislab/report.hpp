#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mislab/classifier.hpp"
#include "mislab/density.hpp"
#include "mislab/distortion.hpp"

namespace mislab {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "mislab.report/1";

using ojson = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal form.
std::string format_double(double v);

ojson to_json(cplx z);
ojson to_json(const SpherePoint& p);
ojson to_json(const DiagnosticsConfig& c);
ojson to_json(const DyadicDisk& d);
ojson to_json(const ScanReport& r);
ojson to_json(const LevelSummary& s);
ojson to_json(const ClassificationVerdict& v);
ojson to_json(const DiskGrowthRecord& r);

struct RunManifest {
  std::string command;
  std::string family_path;
  DiagnosticsConfig config;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string tool_version = kToolVersion;
  std::string wall_clock;
  ojson extra = ojson::object();  // command-specific resolved flags

  // Hash of the fields that determine the outputs: the wall clock, output
  // directory and family path are left out (the family content hash goes in
  // through `extra`).
  std::string hash() const;
  ojson to_json() const;
};

// Per-disk records followed by per-level summaries, one JSON object per line.
std::string scan_jsonl(const DensityProfile& prof, const std::string& manifest_hash);
// One row per disk.
std::string scan_csv(const DensityProfile& prof, const std::string& manifest_hash);

}  // namespace mislab
