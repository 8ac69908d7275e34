#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "ssoprobe/idp/mutation.hpp"
#include "ssoprobe/net/http.hpp"
#include "ssoprobe/openid/association.hpp"
#include "ssoprobe/openid/clock.hpp"
#include "ssoprobe/openid/message.hpp"
#include "ssoprobe/openid/nonce.hpp"

namespace ssoprobe::idp {

struct IdpConfig {
  std::string base_url;             // e.g. "https://idp.attack.lab"
  std::set<std::string> identities;  // names served under /id/{name}
  bool auto_approve = true;          // issue tokens without a session
  MutationList mutations;
  std::int64_t association_lifetime = openid::kDefaultAssociationLifetime;
  bool allow_test_primes = false;
  bool per_identity_endpoints = false;  // discovery advertises /op/{name}
  bool control_api = true;
  openid::Clock clock = openid::system_clock();
};

enum class Direction { inbound, outbound };
enum class Phase { discovery, association, token, check_auth };
std::string_view to_string(Direction d);
std::string_view to_string(Phase p);

struct MessageLogEntry {
  std::uint64_t seq = 0;
  Direction direction = Direction::inbound;
  Phase phase = Phase::discovery;
  std::string endpoint;           // URL the exchange concerned
  openid::OpenIdMessage message;  // OpenID exchanges
  std::string document;           // discovery documents
  std::int64_t timestamp = 0;
};

nlohmann::ordered_json to_json(const MessageLogEntry& entry);

/// OpenID 2.0 provider whose behavior can be bent by TokenMutations.
class IdpServer final : public net::HttpService {
 public:
  explicit IdpServer(IdpConfig config);

  net::HttpResponse handle(const net::HttpRequest& request) override;

  /// Direct-message handlers. `endpoint` is the OP endpoint URL addressed.
  openid::OpenIdMessage handle_associate(const openid::OpenIdMessage& request,
                                         const std::string& endpoint);
  /// Returns the redirect URL (token, setup_needed or error) or nullopt when
  /// an interactive login would be needed.
  std::optional<std::string> handle_checkid(const openid::OpenIdMessage& request,
                                            const std::string& endpoint,
                                            const std::optional<std::string>& session_user);
  openid::OpenIdMessage handle_check_authentication(const openid::OpenIdMessage& request);
  /// nullopt for unknown identities.
  std::optional<net::HttpResponse> serve_discovery(const std::string& name, bool want_xrds);

  std::vector<MessageLogEntry> drain_log();
  std::vector<MessageLogEntry> peek_log() const;

  void set_mutations(MutationList mutations);
  MutationList mutations() const;
  /// Clears mutations, log, associations and per-run counters.
  void reset();

  void add_identity(const std::string& name);
  bool has_identity(const std::string& name) const;
  std::string identity_url(const std::string& name) const;
  std::string endpoint_url(const std::string& name = "") const;
  const std::string& base_url() const { return config_.base_url; }
  const openid::AssociationStore& associations() const { return shared_; }

 private:
  void log(Direction d, Phase p, const std::string& endpoint, openid::OpenIdMessage message,
           std::string document = {});
  std::int64_t now() const { return config_.clock(); }
  std::shared_ptr<const MutationList> current_mutations() const;
  std::optional<std::string> identity_name(const std::string& url) const;
  openid::Association new_private_association(const std::string& endpoint);

  IdpConfig config_;
  mutable std::mutex mutex_;
  std::shared_ptr<const MutationList> mutations_;
  std::vector<MessageLogEntry> log_;
  std::uint64_t next_seq_ = 1;
  std::map<std::string, int> discovery_counts_;
  std::set<std::string> checked_nonces_;
  openid::AssociationStore shared_;
  openid::AssociationStore private_;
  openid::NonceGenerator nonces_;
};

/// Maps an http(s) request onto OpenID message parameters (query or form).
openid::OpenIdMessage request_message(const net::HttpRequest& request);
/// Key-value direct response.
net::HttpResponse direct_response(const openid::OpenIdMessage& message);

}  // namespace ssoprobe::idp
