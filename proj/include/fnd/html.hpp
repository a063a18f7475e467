#pragma once

// Lenient HTML parsing and CSS-style selection, enough for article scraping.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace fnd::html {

struct Node {
  std::string tag;  // lower-case; empty for text nodes
  std::string text;  // text nodes only, entities decoded
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;

  bool is_text() const { return tag.empty(); }
  const std::string* attribute(std::string_view name) const;
  bool has_class(std::string_view cls) const;
};

/// Parses a document into a tree rooted at a synthetic "#document" node.
/// Never throws: unbalanced markup is repaired the way browsers mostly do.
std::unique_ptr<Node> parse(std::string_view markup);

std::string decode_entities(std::string_view s);

/// Compound selector: tag, classes and id that must all match one element.
struct Compound {
  std::string tag;  // empty or "*" = any
  std::string id;
  std::vector<std::string> classes;
};

/// Descendant chain, e.g. "div.article p" -> [{div,.article}, {p}].
struct Selector {
  std::vector<Compound> chain;
};

/// Throws ValidationError for empty or unsupported selectors.
Selector parse_selector(std::string_view selector);

/// Elements matching the selector, in document order.
std::vector<const Node*> select(const Node& root, const Selector& selector);

/// Concatenated descendant text, whitespace-collapsed.
std::string text_content(const Node& node);

/// Text of every match joined by a space; empty when nothing matches.
std::string extract_text(std::string_view markup, std::string_view selector,
                         std::size_t* n_matches = nullptr);

}  // namespace fnd::html
