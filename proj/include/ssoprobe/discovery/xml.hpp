#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ssoprobe::discovery {

/// What to do with external entities and external DTD subsets.
enum class XxeMode {
  flag,            // leave the reference unexpanded and record the attempt
  reject,          // fail the parse
  resolve_unsafe,  // fetch through the resolver (vulnerable-parser emulation)
};

std::string_view to_string(XxeMode mode);
std::optional<XxeMode> parse_xxe_mode(std::string_view text);

/// Fetches an external identifier. Only consulted in resolve_unsafe mode.
using ExternalResolver = std::function<std::optional<std::string>(const std::string& uri)>;

struct XmlOptions {
  XxeMode xxe = XxeMode::flag;
  ExternalResolver resolver;
  std::size_t max_expansion_depth = 8;
  std::size_t max_expanded_bytes = 1 << 20;
};

struct XmlElement {
  std::string name;        // qualified name as written
  std::string local_name;  // without prefix
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<XmlElement> children;
  std::string text;  // concatenated character data of this element only

  std::optional<std::string> attribute(std::string_view name) const;
  std::vector<const XmlElement*> children_named(std::string_view local) const;
};

struct XmlDocument {
  XmlElement root;
  bool xxe_attempt = false;
  std::vector<std::string> external_references;  // SYSTEM/PUBLIC identifiers seen
  std::size_t external_fetches = 0;
};

class XmlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-validating parser with DOCTYPE internal-subset entity support.
/// Never touches files or the network except through options.resolver.
XmlDocument parse_xml(std::string_view text, const XmlOptions& options = {});

std::string xml_escape(std::string_view text);

}  // namespace ssoprobe::discovery
