#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssoprobe/attack/lab.hpp"
#include "ssoprobe/attack/profile.hpp"
#include "ssoprobe/attack/result.hpp"

namespace ssoprobe::attack {

/// The honest login failed; step() names the first failing step.
class TargetNotConformant : public std::runtime_error {
 public:
  TargetNotConformant(std::string step, const std::string& detail)
      : std::runtime_error(step + ": " + detail), step_(std::move(step)) {}
  const std::string& step() const noexcept { return step_; }

 private:
  std::string step_;
};

struct EngineOptions {
  /// Back-dating offsets probed by the replay attack.
  std::vector<std::pair<std::string, std::int64_t>> replay_offsets = {
      {"4h", 4 * 3600}, {"13h", 13 * 3600}, {"14d", 14 * 86400}};
  std::string tool_version = "0.3.0";
};

/// Runs attack profiles against the target of a Lab. One attack at a time.
class Engine {
 public:
  explicit Engine(Lab& lab, EngineOptions options = {});

  /// One honest login; throws TargetNotConformant.
  NormalFlow analyze();

  AttackResult run_trc(const NormalFlow& flow, const AttackProfile& profile);
  /// strategy 1: overwrite the victim IdP's handle; 2: attacker's own handle.
  AttackResult run_kc(const NormalFlow& flow, int strategy, const AttackProfile& profile);
  AttackResult run_ids(const NormalFlow& flow, const AttackProfile& profile);
  AttackResult run_ds(const NormalFlow& flow, const AttackProfile& profile);
  AttackResult run_unsigned(const NormalFlow& flow, const AttackProfile& profile);
  AttackResult run_replay(const NormalFlow& flow, const AttackProfile& profile);
  AttackResult run_xxe_probe(const AttackProfile& profile);

  /// Built-in profile variants of the above.
  AttackResult run(const NormalFlow& flow, AttackClass attack_class);

  /// Resets the lab, checks an honest login, then runs the profile.
  AttackResult run_profile(const NormalFlow& flow, const AttackProfile& profile);
  /// analyze, then every profile in order. A failed analyze yields a
  /// report with `error` set and no results.
  SecurityReport run_all(const std::vector<AttackProfile>& profiles = builtin_profiles());

  /// Honest login with the lab's benign identity; false plus reason on failure.
  bool honest_login(std::string* reason = nullptr);

 private:
  struct Context;
  Context begin(const AttackProfile& profile);
  AttackResult dispatch(const NormalFlow& flow, const AttackProfile& profile);

  Lab& lab_;
  EngineOptions options_;
};

}  // namespace ssoprobe::attack
