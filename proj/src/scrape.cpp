#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <future>
#include <optional>
#include <thread>

#include "fnd/corpus.hpp"
#include "fnd/error.hpp"
#include "fnd/html.hpp"

namespace fnd {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

std::optional<ParsedUrl> parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return std::nullopt;
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") return std::nullopt;
  const auto host_start = scheme_end + 3;
  const auto path_start = url.find_first_of("/?#", host_start);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (out.origin.size() == host_start) return std::nullopt;
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.path[0] != '/') out.path.insert(out.path.begin(), '/');
  if (const auto hash = out.path.find('#'); hash != std::string::npos) out.path.resize(hash);
  return out;
}

struct SingleFetch {
  std::optional<LabeledDocument> document;
  std::optional<FetchError> error;
};

SingleFetch fetch_one(const std::string& url, const html::Selector& selector,
                      const std::string& selector_text, const FetchOptions& options,
                      std::size_t index) {
  SingleFetch out;
  const auto parsed = parse_url(url);
  if (!parsed) {
    out.error = FetchError{url, "invalid URL"};
    return out;
  }
  if (options.delay_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(options.delay_ms));

  httplib::Client client(parsed->origin);
  client.set_connection_timeout(options.timeout_seconds, 0);
  client.set_read_timeout(options.timeout_seconds, 0);
  client.set_follow_location(true);
  const auto response = client.Get(parsed->path);
  if (!response) {
    out.error = FetchError{url, "unreachable: " + httplib::to_string(response.error())};
    return out;
  }
  if (response->status != 200) {
    out.error = FetchError{url, "HTTP " + std::to_string(response->status)};
    return out;
  }
  const auto document = html::parse(response->body);
  std::vector<std::string> parts;
  for (const auto* node : html::select(*document, selector)) {
    auto t = html::text_content(*node);
    if (!t.empty()) parts.push_back(std::move(t));
  }
  if (parts.empty()) {
    out.error = FetchError{url, "selector '" + selector_text + "' matched no text"};
    return out;
  }
  LabeledDocument doc;
  doc.id = options.id_prefix + std::to_string(index);
  doc.text = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) doc.text += " " + parts[i];
  doc.label = options.label;
  doc.source = url;
  out.document = std::move(doc);
  return out;
}

}  // namespace

FetchResult fetch_articles(const std::vector<std::string>& urls, const std::string& selector,
                           const FetchOptions& options) {
  const auto parsed_selector = html::parse_selector(selector);
  std::vector<SingleFetch> results(urls.size());

  const std::size_t workers = std::max<std::size_t>(1, options.max_concurrency);
  for (std::size_t begin = 0; begin < urls.size(); begin += workers) {
    const std::size_t end = std::min(urls.size(), begin + workers);
    std::vector<std::future<SingleFetch>> pending;
    for (std::size_t i = begin; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, [&, i] {
        return fetch_one(urls[i], parsed_selector, selector, options, i);
      }));
    }
    for (std::size_t i = begin; i < end; ++i) results[i] = pending[i - begin].get();
  }

  FetchResult out;
  for (auto& r : results) {
    if (r.document) out.documents.push_back(std::move(*r.document));
    if (r.error) out.errors.push_back(std::move(*r.error));
  }
  return out;
}

}  // namespace fnd
