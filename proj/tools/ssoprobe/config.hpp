#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ssoprobe::cli {

/// One audit target: a built-in preset or an external relying party.
struct TargetEntry {
  std::string preset;
  std::string url;

  bool is_preset() const { return !preset.empty(); }
  std::string describe() const { return is_preset() ? preset : url; }
  /// File-name friendly form of describe().
  std::string slug() const;
};

enum class Verbosity { quiet, info, debug };

struct ToolConfig {
  std::string idp_bind = "127.0.0.1:7001";
  std::optional<std::string> idp_base_url;  // public URL when behind a proxy
  std::string api_bind = "127.0.0.1:0";
  std::vector<TargetEntry> targets;
  std::optional<std::string> profile_dir;
  std::string report_dir = "ssoprobe-reports";
  Verbosity verbosity = Verbosity::info;
};

/// Environment variable naming a config file used when --config is absent.
inline constexpr const char* kConfigEnv = "SSOPROBE_CONFIG";

/// Config file (JSON):
///   {"idp": "host:port", "idp_base_url": "...", "api": "host:port",
///    "targets": [{"preset": "drupal"}, {"url": "http://sp.example/"}],
///    "profile_dir": "...", "report_dir": "...", "verbosity": "quiet|info|debug"}
/// Unknown keys and malformed entries throw std::invalid_argument.
ToolConfig parse_config(const nlohmann::json& j, ToolConfig base = {});
ToolConfig load_config_file(const std::string& path, ToolConfig base = {});

/// Explicit path, else $SSOPROBE_CONFIG, else nothing.
std::optional<std::string> config_path(const std::optional<std::string>& flag);

/// "host:port" -> pair. Throws std::invalid_argument.
std::pair<std::string, int> split_host_port(const std::string& value);

TargetEntry target_from_string(const std::string& value);

}  // namespace ssoprobe::cli
