#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "ssoprobe/attack/profile.hpp"
#include "ssoprobe/net/http.hpp"

namespace ssoprobe::attack {

/// Control API of the attack engine, consumed by the console.
///
///   GET  /control/profiles          {"profiles": [profile...]}
///   GET  /control/profiles/{name}   profile
///   GET  /control/presets           {"presets": [name...]}
///   POST /control/run               {"profile": name|profile, "preset"|"target": ...} -> result
///   POST /control/audit             {"preset"|"target": ...} -> report
///
/// Runs are serialized; each uses a fresh lab.
class EngineService final : public net::HttpService {
 public:
  explicit EngineService(std::vector<AttackProfile> profiles = builtin_profiles());

  net::HttpResponse handle(const net::HttpRequest& request) override;

  const std::vector<AttackProfile>& profiles() const { return profiles_; }

 private:
  std::vector<AttackProfile> profiles_;
  std::mutex run_mutex_;
};

}  // namespace ssoprobe::attack
