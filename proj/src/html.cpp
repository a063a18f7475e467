#include "fnd/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>

#include "fnd/error.hpp"
#include "fnd/text.hpp"

namespace fnd::html {

namespace {

constexpr std::array kVoidElements = {"area", "base", "br",   "col",   "embed", "hr",   "img",
                                      "input", "link", "meta", "param", "source", "track", "wbr"};

// Start tags that implicitly close an open <p>.
constexpr std::array kClosesParagraph = {
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "footer",
    "form",    "h1",      "h2",    "h3",         "h4",  "h5", "h6",       "header",
    "hr",      "main",    "nav",   "ol",         "p",   "pre", "section", "table", "ul"};

template <std::size_t N>
bool contains(const std::array<const char*, N>& set, std::string_view name) {
  return std::any_of(set.begin(), set.end(), [&](const char* s) { return name == s; });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k)
      ok = std::tolower(static_cast<unsigned char>(hay[i + k])) == needle[k];
    if (ok) return i;
  }
  return std::string_view::npos;
}

class Parser {
public:
  explicit Parser(std::string_view s) : s_(s) {
    root_ = std::make_unique<Node>();
    root_->tag = "#document";
    stack_.push_back(root_.get());
  }

  std::unique_ptr<Node> run() {
    while (pos_ < s_.size()) {
      if (s_[pos_] == '<' && pos_ + 1 < s_.size()) {
        const char next = s_[pos_ + 1];
        if (s_.substr(pos_, 4) == "<!--") {
          const auto end = s_.find("-->", pos_ + 4);
          pos_ = end == std::string_view::npos ? s_.size() : end + 3;
          continue;
        }
        if (next == '!' || next == '?') {
          skip_past('>');
          continue;
        }
        if (next == '/') {
          end_tag();
          continue;
        }
        if (std::isalpha(static_cast<unsigned char>(next))) {
          start_tag();
          continue;
        }
      }
      const auto end = s_.find('<', pos_ + 1);
      const auto stop = end == std::string_view::npos ? s_.size() : end;
      add_text(s_.substr(pos_, stop - pos_));
      pos_ = stop;
    }
    return std::move(root_);
  }

private:
  void skip_past(char c) {
    const auto end = s_.find(c, pos_);
    pos_ = end == std::string_view::npos ? s_.size() : end + 1;
  }

  Node* current() { return stack_.back(); }

  void add_text(std::string_view raw) {
    if (raw.empty()) return;
    auto node = std::make_unique<Node>();
    node->text = decode_entities(raw);
    node->parent = current();
    current()->children.push_back(std::move(node));
  }

  Node* push_element(std::string tag) {
    auto node = std::make_unique<Node>();
    node->tag = std::move(tag);
    node->parent = current();
    Node* raw = node.get();
    current()->children.push_back(std::move(node));
    return raw;
  }

  void close_until(std::string_view tag) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == tag) {
        stack_.resize(i);
        return;
      }
    }
  }

  bool is_open(std::string_view tag) const {
    return std::any_of(stack_.begin() + 1, stack_.end(),
                       [&](const Node* n) { return n->tag == tag; });
  }

  void end_tag() {
    pos_ += 2;
    const auto start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    const auto tag = lower(s_.substr(start, pos_ - start));
    skip_past('>');
    if (!tag.empty()) close_until(tag);
  }

  void start_tag() {
    ++pos_;
    const auto start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    auto tag = lower(s_.substr(start, pos_ - start));

    std::vector<std::pair<std::string, std::string>> attributes;
    bool self_closing = false;
    while (pos_ < s_.size()) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (s_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      const auto name_start = pos_;
      while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
             s_[pos_] != '=' && s_[pos_] != '>' && s_[pos_] != '/')
        ++pos_;
      auto name = lower(s_.substr(name_start, pos_ - name_start));
      std::string value;
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '=') {
        ++pos_;
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
          const char quote = s_[pos_++];
          const auto end = s_.find(quote, pos_);
          const auto stop = end == std::string_view::npos ? s_.size() : end;
          value = decode_entities(s_.substr(pos_, stop - pos_));
          pos_ = std::min(s_.size(), stop + 1);
        } else {
          const auto vstart = pos_;
          while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
                 s_[pos_] != '>')
            ++pos_;
          value = decode_entities(s_.substr(vstart, pos_ - vstart));
        }
      }
      if (name.empty()) {
        ++pos_;
        continue;
      }
      attributes.emplace_back(std::move(name), std::move(value));
    }

    if (current()->tag == "p" && contains(kClosesParagraph, tag)) stack_.pop_back();
    if (tag == "li" && is_open("li")) close_until("li");

    Node* element = push_element(tag);
    element->attributes = std::move(attributes);

    if (tag == "script" || tag == "style") {
      // Raw text: skipped entirely.
      const auto end = find_ci(s_, "</" + tag, pos_);
      pos_ = end == std::string_view::npos ? s_.size() : end;
      if (pos_ < s_.size()) skip_past('>');
      return;
    }
    if (tag == "title" || tag == "textarea") {
      const auto end = find_ci(s_, "</" + tag, pos_);
      const auto stop = end == std::string_view::npos ? s_.size() : end;
      stack_.push_back(element);
      add_text(s_.substr(pos_, stop - pos_));
      stack_.pop_back();
      pos_ = stop;
      if (pos_ < s_.size()) skip_past('>');
      return;
    }
    if (!self_closing && !contains(kVoidElements, tag)) stack_.push_back(element);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::unique_ptr<Node> root_;
  std::vector<Node*> stack_;
};

void collect_text(const Node& node, std::string& out) {
  if (node.is_text()) {
    out += node.text;
    return;
  }
  const bool block = node.tag == "br" || node.tag == "p" || node.tag == "div" ||
                     node.tag == "li" || node.tag == "tr";
  if (block) out.push_back(' ');
  for (const auto& child : node.children) collect_text(*child, out);
  if (block) out.push_back(' ');
}

bool matches(const Node& node, const Compound& c) {
  if (node.is_text() || node.tag == "#document") return false;
  if (!c.tag.empty() && c.tag != "*" && node.tag != c.tag) return false;
  if (!c.id.empty()) {
    const auto* id = node.attribute("id");
    if (!id || *id != c.id) return false;
  }
  return std::all_of(c.classes.begin(), c.classes.end(),
                     [&](const std::string& cls) { return node.has_class(cls); });
}

bool matches_chain(const Node& node, const Selector& sel) {
  const auto& chain = sel.chain;
  if (!matches(node, chain.back())) return false;
  std::size_t k = chain.size() - 1;
  const Node* ancestor = node.parent;
  while (k > 0 && ancestor) {
    if (matches(*ancestor, chain[k - 1])) --k;
    ancestor = ancestor->parent;
  }
  return k == 0;
}

}  // namespace

const std::string* Node::attribute(std::string_view name) const {
  for (const auto& [k, v] : attributes) {
    if (k == name) return &v;
  }
  return nullptr;
}

bool Node::has_class(std::string_view cls) const {
  const auto* value = attribute("class");
  if (!value) return false;
  for (const auto& token : text::split_whitespace(*value)) {
    if (token == cls) return true;
  }
  return false;
}

std::unique_ptr<Node> parse(std::string_view markup) { return Parser(markup).run(); }

std::string decode_entities(std::string_view s) {
  static constexpr std::pair<std::string_view, char32_t> kNamed[] = {
      {"amp", U'&'},       {"lt", U'<'},        {"gt", U'>'},       {"quot", U'"'},
      {"apos", U'\''},     {"nbsp", U'\u00A0'}, {"ndash", U'\u2013'}, {"mdash", U'\u2014'},
      {"hellip", U'\u2026'}, {"laquo", U'\u00AB'}, {"raquo", U'\u00BB'}, {"copy", U'\u00A9'}};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    const auto body = s.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (body.size() > 1 && body[0] == '#') {
      char32_t cp = 0;
      bool ok = true;
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const auto digits = body.substr(hex ? 2 : 1);
      ok = !digits.empty();
      for (char c : digits) {
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else { ok = false; break; }
        cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
        if (cp > 0x10FFFF) { ok = false; break; }
      }
      if (ok) {
        text::append_utf8(out, cp == 0 ? U'\uFFFD' : cp);
        decoded = true;
      }
    } else {
      for (const auto& [name, cp] : kNamed) {
        if (body == name) {
          text::append_utf8(out, cp);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

Selector parse_selector(std::string_view selector) {
  Selector sel;
  for (const auto& part : text::split_whitespace(selector)) {
    if (part == ">" || part == "+" || part == "~")
      throw ValidationError("unsupported selector combinator '" + part + "'");
    Compound c;
    std::size_t i = 0;
    auto read_ident = [&]() {
      const auto start = i;
      while (i < part.size() && part[i] != '.' && part[i] != '#') ++i;
      return part.substr(start, i - start);
    };
    if (part[0] != '.' && part[0] != '#') c.tag = lower(read_ident());
    while (i < part.size()) {
      const char kind = part[i++];
      auto ident = read_ident();
      if (ident.empty()) throw ValidationError("malformed selector '" + std::string(selector) + "'");
      if (kind == '.') c.classes.push_back(std::move(ident));
      else c.id = std::move(ident);
    }
    for (char ch : c.tag) {
      if (!is_name_char(ch) && ch != '*')
        throw ValidationError("unsupported selector syntax '" + std::string(selector) + "'");
    }
    sel.chain.push_back(std::move(c));
  }
  if (sel.chain.empty()) throw ValidationError("empty selector");
  return sel;
}

std::vector<const Node*> select(const Node& root, const Selector& selector) {
  std::vector<const Node*> out;
  std::function<void(const Node&)> walk = [&](const Node& node) {
    if (matches_chain(node, selector)) out.push_back(&node);
    for (const auto& child : node.children) walk(*child);
  };
  walk(root);
  return out;
}

std::string text_content(const Node& node) {
  std::string raw;
  collect_text(node, raw);
  return text::collapse_whitespace(raw);
}

std::string extract_text(std::string_view markup, std::string_view selector,
                         std::size_t* n_matches) {
  const auto sel = parse_selector(selector);
  const auto doc = parse(markup);
  const auto nodes = select(*doc, sel);
  if (n_matches) *n_matches = nodes.size();
  std::vector<std::string> parts;
  for (const auto* node : nodes) {
    auto t = text_content(*node);
    if (!t.empty()) parts.push_back(std::move(t));
  }
  return text::join(parts, " ");
}

}  // namespace fnd::html
