#include "ssoprobe/discovery/xml.hpp"

#include <map>

namespace ssoprobe::discovery {
namespace {

constexpr std::size_t kMaxElementDepth = 256;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool is_name_char(char c) {
  return !is_space(c) && c != '<' && c != '>' && c != '/' && c != '=' && c != '"' &&
         c != '\'' && c != ';' && c != '&' && c != '[' && c != ']' && c != '%' && c != '\0';
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct Entity {
  bool external = false;
  std::string value;      // internal replacement text
  std::string system_id;  // external identifier
  std::optional<std::string> fetched;
};

class Parser {
 public:
  Parser(std::string_view text, const XmlOptions& options) : text_(text), options_(options) {}

  XmlDocument run() {
    if (text_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
    bool seen_root = false;
    while (true) {
      skip_space();
      if (eof()) break;
      if (starts("<?")) {
        skip_past("?>");
      } else if (starts("<!--")) {
        skip_past("-->");
      } else if (starts("<!DOCTYPE")) {
        if (seen_root) fail("DOCTYPE after root element");
        parse_doctype();
      } else if (peek() == '<' && !seen_root) {
        doc_.root = parse_element(0);
        seen_root = true;
      } else {
        fail("unexpected content outside the root element");
      }
    }
    if (!seen_root) fail("no root element");
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw XmlError(what + " at offset " + std::to_string(pos_));
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  bool starts(std::string_view s) const { return text_.substr(pos_).starts_with(s); }

  void expect(std::string_view s) {
    if (!starts(s)) fail("expected '" + std::string(s) + "'");
    pos_ += s.size();
  }

  void skip_space() {
    while (!eof() && is_space(text_[pos_])) ++pos_;
  }

  void skip_past(std::string_view terminator) {
    const auto end = text_.find(terminator, pos_);
    if (end == std::string_view::npos) fail("unterminated construct");
    pos_ = end + terminator.size();
  }

  std::string read_name() {
    const auto start = pos_;
    while (!eof() && is_name_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_literal() {
    const char quote = peek();
    if (quote != '"' && quote != '\'') fail("expected a quoted literal");
    const auto end = text_.find(quote, pos_ + 1);
    if (end == std::string_view::npos) fail("unterminated literal");
    std::string out(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  void note_external(const std::string& uri, const std::string& what) {
    doc_.xxe_attempt = true;
    doc_.external_references.push_back(uri);
    if (options_.xxe == XxeMode::reject) throw XmlError(what + " rejected: " + uri);
  }

  std::optional<std::string> fetch(const std::string& uri) {
    if (!options_.resolver) return std::nullopt;
    ++doc_.external_fetches;
    return options_.resolver(uri);
  }

  // Returns the system identifier when the next tokens are an ExternalID.
  std::optional<std::string> read_external_id() {
    if (starts("SYSTEM")) {
      pos_ += 6;
      skip_space();
      return read_literal();
    }
    if (starts("PUBLIC")) {
      pos_ += 6;
      skip_space();
      read_literal();
      skip_space();
      return read_literal();
    }
    return std::nullopt;
  }

  void parse_doctype() {
    expect("<!DOCTYPE");
    skip_space();
    read_name();
    skip_space();
    if (auto system_id = read_external_id()) {
      note_external(*system_id, "external DTD");
      if (options_.xxe == XxeMode::resolve_unsafe) {
        if (auto dtd = fetch(*system_id)) parse_declarations_from(*dtd);
      }
      skip_space();
    }
    if (peek() == '[') {
      ++pos_;
      parse_subset(']');
      expect("]");
      skip_space();
    }
    expect(">");
  }

  void parse_declarations_from(const std::string& text) {
    if (++subset_depth_ > options_.max_expansion_depth) fail("declaration nesting too deep");
    Parser nested(text, options_);
    nested.entities_ = std::move(entities_);
    nested.parameter_entities_ = std::move(parameter_entities_);
    nested.doc_ = std::move(doc_);
    nested.subset_depth_ = subset_depth_;
    try {
      nested.parse_subset('\0');
    } catch (const XmlError&) {
      if (options_.xxe != XxeMode::resolve_unsafe) throw;
    }
    entities_ = std::move(nested.entities_);
    parameter_entities_ = std::move(nested.parameter_entities_);
    doc_ = std::move(nested.doc_);
    --subset_depth_;
  }

  void parse_subset(char terminator) {
    while (true) {
      skip_space();
      if (eof()) {
        if (terminator == '\0') return;
        fail("unterminated DOCTYPE internal subset");
      }
      if (peek() == terminator) return;
      if (starts("<!--")) {
        skip_past("-->");
      } else if (starts("<?")) {
        skip_past("?>");
      } else if (starts("<!ENTITY")) {
        parse_entity_decl();
      } else if (starts("<!")) {
        skip_markup_decl();
      } else if (peek() == '%') {
        ++pos_;
        const auto name = read_name();
        expect(";");
        reference_parameter_entity(name);
      } else {
        fail("unexpected content in DOCTYPE");
      }
    }
  }

  void skip_markup_decl() {
    while (!eof() && peek() != '>') {
      if (peek() == '"' || peek() == '\'')
        read_literal();
      else
        ++pos_;
    }
    expect(">");
  }

  void parse_entity_decl() {
    expect("<!ENTITY");
    skip_space();
    bool parameter = false;
    if (peek() == '%') {
      parameter = true;
      ++pos_;
      skip_space();
    }
    const auto name = read_name();
    skip_space();
    Entity entity;
    if (auto system_id = read_external_id()) {
      entity.external = true;
      entity.system_id = *system_id;
      note_external(*system_id, parameter ? "external parameter entity" : "external entity");
      skip_space();
      if (starts("NDATA")) {
        pos_ += 5;
        skip_space();
        read_name();
        skip_space();
      }
    } else {
      entity.value = read_literal();
      skip_space();
    }
    expect(">");
    auto& table = parameter ? parameter_entities_ : entities_;
    table.try_emplace(name, std::move(entity));  // first declaration is binding
  }

  void reference_parameter_entity(const std::string& name) {
    const auto it = parameter_entities_.find(name);
    if (it == parameter_entities_.end()) fail("undefined parameter entity %" + name + ";");
    Entity& entity = it->second;
    if (!entity.external) {
      parse_declarations_from(entity.value);
      return;
    }
    if (options_.xxe != XxeMode::resolve_unsafe) return;
    if (!entity.fetched) entity.fetched = fetch(entity.system_id).value_or("");
    parse_declarations_from(*entity.fetched);
  }

  std::string expand(std::string_view raw, std::size_t depth) {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity reference");
      const auto ref = raw.substr(i + 1, semi - i - 1);
      i = semi;
      if (ref.starts_with('#')) {
        unsigned long cp = 0;
        try {
          cp = ref.size() > 1 && (ref[1] == 'x' || ref[1] == 'X')
                   ? std::stoul(std::string(ref.substr(2)), nullptr, 16)
                   : std::stoul(std::string(ref.substr(1)), nullptr, 10);
        } catch (const std::exception&) {
          fail("bad character reference");
        }
        if (cp == 0 || cp > 0x10FFFF) fail("character reference out of range");
        append_utf8(out, cp);
      } else if (ref == "lt") {
        out.push_back('<');
      } else if (ref == "gt") {
        out.push_back('>');
      } else if (ref == "amp") {
        out.push_back('&');
      } else if (ref == "quot") {
        out.push_back('"');
      } else if (ref == "apos") {
        out.push_back('\'');
      } else {
        const auto replacement = expand_named(std::string(ref), depth);
        if ((expanded_bytes_ += replacement.size()) > options_.max_expanded_bytes)
          fail("entity expansion limit exceeded");
        out += replacement;
      }
    }
    return out;
  }

  std::string expand_named(const std::string& name, std::size_t depth) {
    const auto it = entities_.find(name);
    if (it == entities_.end()) fail("undefined entity &" + name + ";");
    Entity& entity = it->second;
    if (entity.external) {
      if (options_.xxe != XxeMode::resolve_unsafe) return "&" + name + ";";
      if (!entity.fetched) entity.fetched = fetch(entity.system_id).value_or("");
      return *entity.fetched;
    }
    if (depth >= options_.max_expansion_depth) fail("entity nesting too deep");
    return expand(entity.value, depth + 1);
  }

  XmlElement parse_element(std::size_t depth) {
    if (depth > kMaxElementDepth) fail("element nesting too deep");
    expect("<");
    XmlElement element;
    element.name = read_name();
    const auto colon = element.name.rfind(':');
    element.local_name =
        colon == std::string::npos ? element.name : element.name.substr(colon + 1);
    while (true) {
      skip_space();
      if (starts("/>")) {
        pos_ += 2;
        return element;
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      auto attr = read_name();
      skip_space();
      expect("=");
      skip_space();
      element.attributes.emplace_back(std::move(attr), expand(read_literal(), 0));
    }
    while (true) {
      if (eof()) fail("unterminated element <" + element.name + ">");
      if (starts("</")) {
        pos_ += 2;
        if (read_name() != element.name) fail("mismatched end tag for <" + element.name + ">");
        skip_space();
        expect(">");
        return element;
      }
      if (starts("<!--")) {
        skip_past("-->");
      } else if (starts("<![CDATA[")) {
        pos_ += 9;
        const auto end = text_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA");
        element.text.append(text_.substr(pos_, end - pos_));
        pos_ = end + 3;
      } else if (starts("<?")) {
        skip_past("?>");
      } else if (peek() == '<') {
        element.children.push_back(parse_element(depth + 1));
      } else {
        const auto end = text_.find('<', pos_);
        const auto chunk = text_.substr(pos_, end == std::string_view::npos ? end : end - pos_);
        element.text += expand(chunk, 0);
        pos_ += chunk.size();
      }
    }
  }

  std::string_view text_;
  const XmlOptions& options_;
  std::size_t pos_ = 0;
  std::size_t expanded_bytes_ = 0;
  std::size_t subset_depth_ = 0;
  std::map<std::string, Entity> entities_;
  std::map<std::string, Entity> parameter_entities_;
  XmlDocument doc_;
};

}  // namespace

std::string_view to_string(XxeMode mode) {
  switch (mode) {
    case XxeMode::flag: return "flag";
    case XxeMode::reject: return "reject";
    case XxeMode::resolve_unsafe: return "resolve_unsafe";
  }
  return "flag";
}

std::optional<XxeMode> parse_xxe_mode(std::string_view text) {
  if (text == "flag") return XxeMode::flag;
  if (text == "reject") return XxeMode::reject;
  if (text == "resolve_unsafe" || text == "unsafe") return XxeMode::resolve_unsafe;
  return std::nullopt;
}

std::optional<std::string> XmlElement::attribute(std::string_view attr) const {
  for (const auto& [k, v] : attributes)
    if (k == attr) return v;
  return std::nullopt;
}

std::vector<const XmlElement*> XmlElement::children_named(std::string_view local) const {
  std::vector<const XmlElement*> out;
  for (const auto& child : children)
    if (child.local_name == local) out.push_back(&child);
  return out;
}

XmlDocument parse_xml(std::string_view text, const XmlOptions& options) {
  return Parser(text, options).run();
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace ssoprobe::discovery
