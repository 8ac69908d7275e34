#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ssoprobe/net/http.hpp"
#include "ssoprobe/openid/association.hpp"
#include "ssoprobe/openid/clock.hpp"
#include "ssoprobe/openid/message.hpp"
#include "ssoprobe/sp/policy.hpp"

namespace ssoprobe::sp {

enum class CheckStatus { passed, failed, skipped };
std::string_view to_string(CheckStatus s);

struct CheckRecord {
  std::string check;  // parse, freshness, recipient, signature, idp_authority, account_mapping
  CheckStatus status = CheckStatus::passed;
  std::string detail;
};

struct Verdict {
  enum class Outcome { logged_in, rejected };
  Outcome outcome = Outcome::rejected;
  std::string account;  // set when logged_in
  std::string reason;   // set when rejected
  std::vector<CheckRecord> evidence;
  std::string session_id;

  bool logged_in() const { return outcome == Outcome::logged_in; }
};

nlohmann::ordered_json to_json(const Verdict& verdict);

struct SessionPair {
  std::string claimed_id;
  std::string op_endpoint;
  std::optional<std::string> local_id;
};

struct SpSession {
  std::string id;
  std::optional<SessionPair> pair;
  std::map<std::string, SessionPair> requests;  // per request id (immutable binding)
  std::optional<std::string> account;
  std::optional<Verdict> last_verdict;
};

struct LoginStart {
  std::optional<std::string> redirect;  // authentication request URL
  std::optional<Verdict> rejected;      // discovery failure
  std::optional<std::string> assoc_handle;
};

struct SpConfig {
  std::string base_url;  // e.g. "https://sp.lab"
  VerificationPolicy policy;
  openid::Clock clock = openid::system_clock();
  bool control_api = true;
};

/// Reference relying party with a policy-driven verification pipeline.
/// Outbound traffic (discovery, association, direct verification) goes
/// through `transport`.
class SpHarness final : public net::HttpService {
 public:
  SpHarness(SpConfig config, net::HttpTransport& transport);

  net::HttpResponse handle(const net::HttpRequest& request) override;

  LoginStart begin_login(const std::string& session_id, const std::string& claimed_id);
  /// `callback_url` is the full URL the assertion arrived on.
  Verdict process_assertion(const std::string& session_id, const openid::OpenIdMessage& token,
                            const std::string& callback_url);
  /// Account name when the session is logged in.
  std::optional<std::string> protected_resource(const std::string& session_id) const;

  std::string new_session();
  std::optional<SpSession> session(const std::string& id) const;

  VerificationPolicy policy() const;
  void set_policy(VerificationPolicy policy);
  std::vector<Verdict> verdicts() const;
  /// Forgets sessions, associations, nonces and verdicts. Policy is kept.
  void reset();

  std::string callback_url() const { return config_.base_url + "/callback"; }
  const std::string& base_url() const { return config_.base_url; }
  const openid::AssociationStore& associations() const { return associations_; }

 private:
  std::optional<openid::Association> associate(const std::string& op_endpoint,
                                               const VerificationPolicy& policy);
  bool direct_verify(const openid::OpenIdMessage& token);
  std::int64_t now() const { return config_.clock(); }

  SpConfig config_;
  net::HttpTransport& transport_;
  mutable std::mutex mutex_;
  std::map<std::string, SpSession> sessions_;
  std::map<std::string, std::int64_t> seen_nonces_;
  std::vector<Verdict> verdicts_;
  openid::AssociationStore associations_;
};

}  // namespace ssoprobe::sp
