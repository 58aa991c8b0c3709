#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace phskew {

inline constexpr const char* kRunSchema = "phskew-run/1";
inline constexpr const char* kVersion = "1.0.0";

std::vector<std::string> subcommands();

/// One raw setting before typing: the text form plus where it came from.
struct RawSetting {
    std::string text;   // scalars as written, lists comma separated
    std::string where;  // "line 3, column 5" or "--tol"
};
using RawSettings = std::map<std::string, RawSetting>;

using SettingValue = std::variant<long long, double, std::string, std::vector<double>, std::vector<long long>>;

struct RunConfig {
    std::string command;
    std::map<std::string, SettingValue> values;  // validated, defaults filled in
    std::string base_dir = ".";                  // resolves relative input paths
    std::string config_text;                     // raw config file, part of the inputs hash

    bool has(const std::string& key) const { return values.count(key) > 0; }
    long long integer(const std::string& key) const;
    double real(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    std::string path(const std::string& key) const;
    const std::vector<double>& vec(const std::string& key) const;
    const std::vector<long long>& int_list(const std::string& key) const;
};

/// Flattens a config document into raw settings; rejects unknown keys and bad schema.
/// Sets `command` from the document when present.
RawSettings parse_config_text(const std::string& text, std::string& command);

/// Merges config settings with command-line flags. A flag that disagrees with the config
/// is an error unless `allow_override`, in which case the config value stays.
RawSettings merge_settings(const RawSettings& config, const RawSettings& flags, bool allow_override);

/// Types and range-checks every setting for `command` and fills defaults.
RunConfig make_run_config(const std::string& command, const RawSettings& raw, const std::string& base_dir = ".");

/// Keys accepted by a subcommand (all of them are also flags).
std::vector<std::string> keys_for(const std::string& command);
std::string key_help(const std::string& key);

struct RunResult {
    int status = 0;  // 0 pass/complete, 2 refusal/inconclusive
    std::string reason;
    std::string report;
    std::string output_dir;
};

/// Runs the pipeline, writes report.tsv and manifest.json. PHSKEW_OUTPUT_DIR overrides the
/// output directory. Throws phskew::Error on failure.
RunResult run(const RunConfig& config);

/// Writes a manifest for a run that failed before producing a report.
void write_error_manifest(const std::string& output_dir, const std::string& command, const std::string& message);

} // namespace phskew
