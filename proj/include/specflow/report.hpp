#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace specflow {

// Exit statuses of a CLI run.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitHypothesisRefusal = 2;
inline constexpr int kExitNumericalFailure = 3;

// FNV-1a 64-bit over the raw config bytes; reports embed it as
// "fnv1a64:<hex>".
std::uint64_t fnv1a64(std::string_view bytes);
std::string config_hash(std::string_view config_text);

// Serializes with sorted keys, two-space indent, and every float printed
// with 17 significant digits, so byte-identical configs give byte-identical
// reports within one build.
std::string dump_report(const nlohmann::json& report);

// Parses the config, runs the command, writes report.json (and CSV grids
// for solve) under output_dir. Diagnostics go to err_stream. Returns one of
// the exit statuses above.
int run_cli(const std::string& config_text, const std::string& output_dir,
            std::optional<std::uint64_t> seed_override, bool force,
            std::ostream& err_stream);

}  // namespace specflow
