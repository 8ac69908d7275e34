#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ssoprobe/discovery/xml.hpp"
#include "ssoprobe/net/http.hpp"

namespace ssoprobe::discovery {

inline constexpr std::string_view kSignonType = "http://specs.openid.net/auth/2.0/signon";
inline constexpr std::string_view kServerType = "http://specs.openid.net/auth/2.0/server";
inline constexpr std::string_view kXrdsMediaType = "application/xrds+xml";

enum class DocumentFormat { html, xrds };
std::string_view to_string(DocumentFormat format);

struct DiscoveryDocument {
  DocumentFormat format = DocumentFormat::html;
  std::string op_endpoint;
  std::optional<std::string> local_id;
  std::string raw;
  bool xxe_attempt = false;
  std::vector<std::string> external_references;
};

class DiscoveryError : public std::runtime_error {
 public:
  enum class Kind {
    no_provider_endpoint,
    malformed_document,
    fetch_error,
    redirect_limit_exceeded,
    invalid_url,
    domain_mismatch,
  };
  DiscoveryError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(DiscoveryError::Kind kind);

DiscoveryDocument render_discovery(std::string_view op_endpoint,
                                   const std::optional<std::string>& local_id,
                                   DocumentFormat format);
/// Provider is the attacker's IdP, local id is the victim's identity elsewhere.
DiscoveryDocument render_spoofed_discovery(std::string_view attacker_op_endpoint,
                                           std::string_view victim_local_id,
                                           DocumentFormat format = DocumentFormat::xrds);

/// XRDS whose DOCTYPE declares an external entity pointing at `canary_url`.
/// The entity is referenced outside the service element.
DiscoveryDocument render_xxe_probe(std::string_view op_endpoint, std::string_view canary_url);

/// Chooses the format from the content type, falling back to sniffing.
DiscoveryDocument parse_discovery(std::string_view bytes, std::string_view content_type,
                                  const XmlOptions& xml = {});
DiscoveryDocument parse_html_discovery(std::string_view bytes);
DiscoveryDocument parse_xrds(std::string_view bytes, const XmlOptions& xml);
/// parse_xrds without any external resolution. Mode is flag or reject.
DiscoveryDocument parse_xrds_safe(std::string_view bytes, XxeMode mode = XxeMode::flag);

struct DiscoveryResult {
  std::string claimed_id;
  std::string op_endpoint;
  std::optional<std::string> op_local_id;
  std::string fetched_from;
  std::int64_t fetched_at = 0;
  DocumentFormat format = DocumentFormat::html;
  bool xxe_attempt = false;
};

struct DiscoverOptions {
  int max_redirects = 5;
  XmlOptions xml;
  bool require_same_domain = false;
  std::int64_t now = 0;
};

/// Fetches the identifier (following redirects and one X-XRDS-Location hop)
/// and binds the parsed endpoint to it. result.claimed_id == claimed_id.
DiscoveryResult discover(const std::string& claimed_id, net::HttpTransport& transport,
                         const DiscoverOptions& options = {});

/// Resolver that GETs http(s) URIs through `transport` and refuses every other scheme.
ExternalResolver transport_resolver(net::HttpTransport& transport);

}  // namespace ssoprobe::discovery
