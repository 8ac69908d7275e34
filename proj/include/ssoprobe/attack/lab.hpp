#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ssoprobe/idp/server.hpp"
#include "ssoprobe/net/http.hpp"
#include "ssoprobe/net/in_memory.hpp"
#include "ssoprobe/openid/clock.hpp"
#include "ssoprobe/sp/harness.hpp"

namespace ssoprobe::attack {

/// Attacker-controlled relying party (URL.A). `/lure` starts a stateless
/// login for the configured victim at the victim's IdP; `/collect` keeps
/// whatever token arrives.
class Collector final : public net::HttpService {
 public:
  Collector(std::string base_url, net::HttpTransport& transport);

  net::HttpResponse handle(const net::HttpRequest& request) override;

  void set_victim(std::string claimed_id);
  /// Most recent token URL received at /collect, removed from the store.
  std::optional<std::string> take();
  const std::string& base_url() const { return base_url_; }
  void reset();

 private:
  std::string base_url_;
  net::HttpTransport& transport_;
  mutable std::mutex mutex_;
  std::string victim_;
  std::vector<std::string> collected_;
};

/// Out-of-band oracle for external-entity resolution: counts every request.
class Canary final : public net::HttpService {
 public:
  explicit Canary(std::string base_url);

  net::HttpResponse handle(const net::HttpRequest& request) override;

  std::string url() const { return base_url_ + "/canary"; }
  /// Body served to fetchers; a target echoing it has resolved the entity.
  const std::string& marker() const { return marker_; }
  int hits() const { return hits_.load(); }
  void reset() { hits_ = 0; }

 private:
  std::string base_url_;
  std::string marker_;
  std::atomic<int> hits_{0};
};

struct TargetInfo {
  std::string description;  // preset name or URL
  std::string base_url;
  std::string login_url() const { return base_url + "/login"; }
  std::string callback_url() const { return base_url + "/callback"; }
  std::string resource_url() const { return base_url + "/resource"; }
};

/// Everything an attack run needs: the two IdPs, the collector, the canary
/// and the target relying party, all reachable through one transport.
class Lab {
 public:
  virtual ~Lab() = default;

  /// In-memory lab around an sp-harness instance running `policy`.
  static std::unique_ptr<Lab> for_policy(sp::VerificationPolicy policy, std::string description);
  static std::unique_ptr<Lab> for_preset(const std::string& preset);
  /// Lab whose services listen on `bind_host` and which attacks the relying
  /// party at `target_url` over real sockets.
  static std::unique_ptr<Lab> for_url(const std::string& target_url,
                                      const std::string& bind_host = "127.0.0.1");

  virtual net::HttpTransport& transport() = 0;
  idp::IdpServer& attacker() { return *attacker_; }
  idp::IdpServer& trusted() { return *trusted_; }
  Collector& collector() { return *collector_; }
  Canary& canary() { return *canary_; }
  const TargetInfo& target() const { return target_; }
  /// The in-process relying party, when there is one.
  sp::SpHarness* local_sp() { return local_sp_.get(); }
  /// Network of an in-memory lab; nullptr for socket labs.
  virtual net::InMemoryNetwork* network() { return nullptr; }
  /// Settable clock of an in-memory lab; nullptr for socket labs.
  virtual openid::ManualClock* manual_clock() { return nullptr; }
  virtual openid::Clock clock() const = 0;

  std::string victim_identity() const { return trusted_->identity_url(kVictim); }
  std::string honest_identity() const { return trusted_->identity_url(kHonest); }
  static constexpr const char* kVictim = "victim";
  static constexpr const char* kHonest = "alice";

  /// Registers a new attacker identity (own discovery and OP endpoint).
  std::string fresh_attacker_identity();

  /// Clears IdP mutations, logs and associations, the collector, the canary
  /// and the relying party's state (in-process targets, or a best-effort
  /// `POST /control/reset` for socket targets).
  void reset();

 protected:
  Lab() = default;
  virtual void reset_target() {
    if (local_sp_) local_sp_->reset();
  }

  std::shared_ptr<idp::IdpServer> attacker_;
  std::shared_ptr<idp::IdpServer> trusted_;
  std::shared_ptr<Collector> collector_;
  std::shared_ptr<Canary> canary_;
  std::shared_ptr<sp::SpHarness> local_sp_;
  TargetInfo target_;
  int attacker_counter_ = 0;
};

idp::IdpConfig attacker_idp_config(std::string base_url, openid::Clock clock);
idp::IdpConfig trusted_idp_config(std::string base_url, openid::Clock clock);

}  // namespace ssoprobe::attack
