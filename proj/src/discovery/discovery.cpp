#include "ssoprobe/discovery/discovery.hpp"

#include <algorithm>
#include <cctype>
#include <climits>

#include "ssoprobe/net/user_agent.hpp"

namespace ssoprobe::discovery {
namespace {

using Kind = DiscoveryError::Kind;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

void require_url(std::string_view url, std::string_view what) {
  if (!openid::is_absolute_http_url(url))
    throw DiscoveryError(Kind::invalid_url, std::string(what) + " is not an absolute http(s) URL: " +
                                                std::string(url));
}

std::string html_attr_escape(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string html_decode(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '&') {
      const auto semi = text.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 8) {
        const auto ref = text.substr(i + 1, semi - i - 1);
        std::optional<char> c;
        if (ref == "amp") c = '&';
        else if (ref == "quot") c = '"';
        else if (ref == "lt") c = '<';
        else if (ref == "gt") c = '>';
        else if (ref == "apos" || ref == "#39") c = '\'';
        if (c) {
          out.push_back(*c);
          i = semi;
          continue;
        }
      }
    }
    out.push_back(text[i]);
  }
  return out;
}

struct HtmlScanner {
  std::string_view text;
  std::string folded;
  std::size_t pos = 0;

  explicit HtmlScanner(std::string_view t) : text(t), folded(lower(t)) {}

  // Jumps past `needle` (case-insensitive) or to the end.
  void skip_past(std::string_view needle) {
    const auto at = folded.find(needle, pos);
    pos = at == std::string::npos ? text.size() : at + needle.size();
  }

  bool tag_at(std::string_view name) const {
    if (folded.compare(pos, name.size(), name) != 0) return false;
    const auto next = pos + name.size();
    return next < text.size() &&
           (std::isspace(static_cast<unsigned char>(text[next])) || text[next] == '>' ||
            text[next] == '/');
  }

  std::vector<std::pair<std::string, std::string>> read_attributes() {
    std::vector<std::pair<std::string, std::string>> attrs;
    while (pos < text.size()) {
      while (pos < text.size() &&
             (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == '/'))
        ++pos;
      if (pos >= text.size() || text[pos] == '>') break;
      const auto name_start = pos;
      while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
             text[pos] != '=' && text[pos] != '>' && text[pos] != '/')
        ++pos;
      std::string name = lower(text.substr(name_start, pos - name_start));
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      std::string value;
      if (pos < text.size() && text[pos] == '=') {
        ++pos;
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos < text.size() && (text[pos] == '"' || text[pos] == '\'')) {
          const char quote = text[pos++];
          const auto end = text.find(quote, pos);
          const auto stop = end == std::string_view::npos ? text.size() : end;
          value = html_decode(text.substr(pos, stop - pos));
          pos = std::min(stop + 1, text.size());
        } else {
          const auto start = pos;
          while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
                 text[pos] != '>')
            ++pos;
          value = html_decode(text.substr(start, pos - start));
        }
      }
      if (!name.empty()) attrs.emplace_back(std::move(name), std::move(value));
    }
    if (pos < text.size()) ++pos;  // '>'
    return attrs;
  }
};

bool has_rel(std::string_view rel, std::string_view token) {
  const std::string folded = lower(rel);
  std::size_t i = 0;
  while (i < folded.size()) {
    while (i < folded.size() && std::isspace(static_cast<unsigned char>(folded[i]))) ++i;
    const auto start = i;
    while (i < folded.size() && !std::isspace(static_cast<unsigned char>(folded[i]))) ++i;
    if (folded.substr(start, i - start) == token) return true;
  }
  return false;
}

bool looks_like_xrds(std::string_view bytes) {
  const auto head = lower(bytes.substr(0, 512));
  return head.find("<?xml") != std::string::npos || head.find("xrds") != std::string::npos;
}

}  // namespace

std::string_view to_string(DocumentFormat format) {
  return format == DocumentFormat::html ? "html" : "xrds";
}

std::string_view to_string(DiscoveryError::Kind kind) {
  switch (kind) {
    case Kind::no_provider_endpoint: return "no_provider_endpoint";
    case Kind::malformed_document: return "malformed_document";
    case Kind::fetch_error: return "fetch_error";
    case Kind::redirect_limit_exceeded: return "redirect_limit_exceeded";
    case Kind::invalid_url: return "invalid_url";
    case Kind::domain_mismatch: return "domain_mismatch";
  }
  return "unknown";
}

DiscoveryDocument render_discovery(std::string_view op_endpoint,
                                   const std::optional<std::string>& local_id,
                                   DocumentFormat format) {
  require_url(op_endpoint, "op_endpoint");
  if (local_id) require_url(*local_id, "local_id");
  DiscoveryDocument doc;
  doc.format = format;
  doc.op_endpoint = std::string(op_endpoint);
  doc.local_id = local_id;
  if (format == DocumentFormat::html) {
    doc.raw = "<html><head><title/>\n<link rel=\"openid2.provider\" href=\"" +
              html_attr_escape(op_endpoint) + "\" />\n";
    if (local_id)
      doc.raw += "<link rel=\"openid2.local_id\" href=\"" + html_attr_escape(*local_id) + "\" />\n";
    doc.raw += "</head><body/></html>\n";
  } else {
    doc.raw =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<xrds:XRDS xmlns:xrds=\"xri://$xrds\" xmlns=\"xri://$xrd*($v*2.0)\">\n"
        "  <XRD>\n"
        "    <Service priority=\"0\">\n"
        "      <Type>" + std::string(kSignonType) + "</Type>\n"
        "      <URI>" + xml_escape(op_endpoint) + "</URI>\n";
    if (local_id) doc.raw += "      <LocalID>" + xml_escape(*local_id) + "</LocalID>\n";
    doc.raw +=
        "    </Service>\n"
        "  </XRD>\n"
        "</xrds:XRDS>\n";
  }
  return doc;
}

DiscoveryDocument render_spoofed_discovery(std::string_view attacker_op_endpoint,
                                           std::string_view victim_local_id,
                                           DocumentFormat format) {
  return render_discovery(attacker_op_endpoint, std::string(victim_local_id), format);
}

DiscoveryDocument render_xxe_probe(std::string_view op_endpoint, std::string_view canary_url) {
  require_url(op_endpoint, "op_endpoint");
  if (canary_url.find('"') != std::string_view::npos)
    throw DiscoveryError(Kind::invalid_url, "canary URL contains a quote");
  DiscoveryDocument doc;
  doc.format = DocumentFormat::xrds;
  doc.op_endpoint = std::string(op_endpoint);
  doc.raw =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<!DOCTYPE xrds:XRDS [<!ENTITY probe SYSTEM \"" + std::string(canary_url) + "\">]>\n"
      "<xrds:XRDS xmlns:xrds=\"xri://$xrds\" xmlns=\"xri://$xrd*($v*2.0)\">\n"
      "  <XRD>\n"
      "    <Service priority=\"0\">\n"
      "      <Type>" + std::string(kSignonType) + "</Type>\n"
      "      <URI>" + xml_escape(op_endpoint) + "</URI>\n"
      "    </Service>\n"
      "    <ProbeData>&probe;</ProbeData>\n"
      "  </XRD>\n"
      "</xrds:XRDS>\n";
  doc.xxe_attempt = true;
  doc.external_references.emplace_back(canary_url);
  return doc;
}

DiscoveryDocument parse_html_discovery(std::string_view bytes) {
  HtmlScanner scan(bytes);
  std::optional<std::string> provider;
  std::optional<std::string> local_id;
  while (scan.pos < bytes.size()) {
    const auto lt = bytes.find('<', scan.pos);
    if (lt == std::string_view::npos) break;
    scan.pos = lt;
    if (bytes.substr(lt).starts_with("<!--")) {
      scan.skip_past("-->");
    } else if (scan.tag_at("<script")) {
      scan.skip_past("</script");
      scan.skip_past(">");
    } else if (scan.tag_at("<style")) {
      scan.skip_past("</style");
      scan.skip_past(">");
    } else if (scan.tag_at("<link")) {
      scan.pos += 5;
      std::optional<std::string> rel, href;
      for (auto& [k, v] : scan.read_attributes()) {
        if (k == "rel" && !rel) rel = v;
        if (k == "href" && !href) href = trim(v);
      }
      if (!rel || !href) continue;
      if (!provider && has_rel(*rel, "openid2.provider")) provider = *href;
      if (!local_id && has_rel(*rel, "openid2.local_id")) local_id = *href;
    } else {
      ++scan.pos;
    }
  }
  if (!provider) throw DiscoveryError(Kind::no_provider_endpoint, "no openid2.provider link");
  if (!openid::is_absolute_http_url(*provider))
    throw DiscoveryError(Kind::malformed_document, "provider is not an absolute URL: " + *provider);
  if (local_id && !openid::is_absolute_http_url(*local_id))
    throw DiscoveryError(Kind::malformed_document, "local id is not an absolute URL: " + *local_id);
  DiscoveryDocument doc;
  doc.format = DocumentFormat::html;
  doc.op_endpoint = std::move(*provider);
  doc.local_id = std::move(local_id);
  doc.raw = std::string(bytes);
  return doc;
}

DiscoveryDocument parse_xrds(std::string_view bytes, const XmlOptions& xml) {
  XmlDocument parsed;
  try {
    parsed = parse_xml(bytes, xml);
  } catch (const XmlError& e) {
    throw DiscoveryError(Kind::malformed_document, std::string("XRDS: ") + e.what());
  }
  if (parsed.root.local_name != "XRDS")
    throw DiscoveryError(Kind::malformed_document, "root element is not XRDS");
  const auto xrds = parsed.root.children_named("XRD");
  if (xrds.empty()) throw DiscoveryError(Kind::no_provider_endpoint, "XRDS without XRD");

  auto priority = [](const XmlElement& e) {
    try {
      return std::stol(e.attribute("priority").value_or(""));
    } catch (const std::exception&) {
      return LONG_MAX;
    }
  };

  const XmlElement* best = nullptr;
  int best_rank = 0;
  for (const XmlElement* service : xrds.back()->children_named("Service")) {
    int rank = 0;
    for (const XmlElement* type : service->children_named("Type")) {
      const auto t = trim(type->text);
      if (t == kServerType) rank = std::max(rank, 2);
      if (t == kSignonType) rank = std::max(rank, 1);
    }
    if (rank == 0 || service->children_named("URI").empty()) continue;
    if (!best || rank > best_rank || (rank == best_rank && priority(*service) < priority(*best))) {
      best = service;
      best_rank = rank;
    }
  }
  if (!best) throw DiscoveryError(Kind::no_provider_endpoint, "no OpenID 2.0 service element");

  auto uris = best->children_named("URI");
  std::stable_sort(uris.begin(), uris.end(), [&](const XmlElement* a, const XmlElement* b) {
    return priority(*a) < priority(*b);
  });
  DiscoveryDocument doc;
  doc.format = DocumentFormat::xrds;
  doc.op_endpoint = trim(uris.front()->text);
  if (!openid::is_absolute_http_url(doc.op_endpoint))
    throw DiscoveryError(Kind::malformed_document, "URI is not absolute: " + doc.op_endpoint);
  if (best_rank == 1) {
    if (const auto ids = best->children_named("LocalID"); !ids.empty()) {
      doc.local_id = trim(ids.front()->text);
      if (!openid::is_absolute_http_url(*doc.local_id))
        throw DiscoveryError(Kind::malformed_document, "LocalID is not absolute: " + *doc.local_id);
    }
  }
  doc.raw = std::string(bytes);
  doc.xxe_attempt = parsed.xxe_attempt;
  doc.external_references = std::move(parsed.external_references);
  return doc;
}

DiscoveryDocument parse_xrds_safe(std::string_view bytes, XxeMode mode) {
  XmlOptions options;
  options.xxe = mode == XxeMode::resolve_unsafe ? XxeMode::flag : mode;
  return parse_xrds(bytes, options);
}

DiscoveryDocument parse_discovery(std::string_view bytes, std::string_view content_type,
                                  const XmlOptions& xml) {
  const auto type = lower(content_type);
  const bool xrds = type.find("xrds+xml") != std::string::npos ||
                    (type.find("html") == std::string::npos && looks_like_xrds(bytes));
  return xrds ? parse_xrds(bytes, xml) : parse_html_discovery(bytes);
}

DiscoveryResult discover(const std::string& claimed_id, net::HttpTransport& transport,
                         const DiscoverOptions& options) {
  const auto parsed = openid::parse_url(claimed_id);
  if (!parsed) throw DiscoveryError(Kind::invalid_url, "not an absolute http(s) URL: " + claimed_id);
  auto target = *parsed;
  target.fragment.clear();
  std::string url = target.str();

  int redirects = 0;
  bool followed_xrds_location = false;
  net::HttpResponse response;
  while (true) {
    net::Headers headers{{"Accept", "application/xrds+xml, text/html;q=0.9, */*;q=0.1"}};
    try {
      response = transport.send(net::get_request(url, std::move(headers)));
    } catch (const net::TransportError& e) {
      throw DiscoveryError(Kind::fetch_error, std::string("fetch failed: ") + e.what());
    }
    if (response.is_redirect()) {
      if (++redirects > options.max_redirects)
        throw DiscoveryError(Kind::redirect_limit_exceeded,
                             "more than " + std::to_string(options.max_redirects) + " redirects");
      url = net::resolve_location(url, *response.headers.get("Location"));
      continue;
    }
    if (response.status != 200)
      throw DiscoveryError(Kind::fetch_error,
                           "HTTP " + std::to_string(response.status) + " from " + url);
    const auto location = response.headers.get("X-XRDS-Location");
    const auto type = lower(response.headers.get("Content-Type").value_or(""));
    if (location && !followed_xrds_location && type.find("xrds+xml") == std::string::npos) {
      followed_xrds_location = true;
      url = net::resolve_location(url, *location);
      continue;
    }
    break;
  }

  const auto doc =
      parse_discovery(response.body, response.headers.get("Content-Type").value_or(""), options.xml);
  if (options.require_same_domain) {
    const auto op = openid::parse_url(doc.op_endpoint);
    if (!op || op->host != parsed->host)
      throw DiscoveryError(Kind::domain_mismatch,
                           "provider " + doc.op_endpoint + " is outside " + parsed->host);
  }
  DiscoveryResult result;
  result.claimed_id = claimed_id;
  result.op_endpoint = doc.op_endpoint;
  result.op_local_id = doc.local_id;
  result.fetched_from = url;
  result.fetched_at = options.now;
  result.format = doc.format;
  result.xxe_attempt = doc.xxe_attempt;
  return result;
}

ExternalResolver transport_resolver(net::HttpTransport& transport) {
  return [&transport](const std::string& uri) -> std::optional<std::string> {
    if (!openid::is_absolute_http_url(uri)) return std::nullopt;
    try {
      auto response = transport.send(net::get_request(uri));
      if (response.status != 200) return std::nullopt;
      return std::move(response.body);
    } catch (const net::TransportError&) {
      return std::nullopt;
    }
  };
}

}  // namespace ssoprobe::discovery
