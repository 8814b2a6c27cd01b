#pragma once

#include "robrl/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace robrl {

/// Shortest decimal text that parses back to exactly `x` ("nan"/"inf" for non-finite).
std::string format_double(double x);

/// JSON documents. Doubles are written so that loading reproduces them bit for bit.
std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);

void save_environment(const std::filesystem::path& path, const Environment& env);
Environment load_environment(const std::filesystem::path& path);

/// Missing keys keep their defaults; unknown keys and bad values are reported together.
std::string spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const std::string& text);
/// Applies the keys present in `text` on top of `base`.
ExperimentSpec merge_spec_json(ExperimentSpec base, const std::string& text);

/// 16 hex digits of FNV-1a over the canonical (compact, sorted-key) spec JSON,
/// excluding output_dir.
std::string spec_hash(const ExperimentSpec& spec);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see partial output.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace robrl
