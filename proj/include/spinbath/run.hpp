// run.hpp - task dispatch behind the CLI: runs pipelines, writes the CSV and
// JSON artifacts plus a manifest with per-file checksums

#pragma once

#include <string>
#include <vector>

#include "spinbath/config.hpp"

namespace spinbath {

struct OutputRecord {
    std::string file;      // path relative to output_dir
    std::string checksum;  // fnv1a64 hex of the file bytes
};

struct RunManifest {
    std::string config_text;
    std::string version;
    double wall_time_s = 0.0;
    std::vector<OutputRecord> outputs;
};

// Runs the configured task; writes outputs and manifest.json under
// config.output_dir. Partial outputs are removed on failure.
RunManifest run(const RunConfig& config);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spinbath
