#include "fnd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "fnd/error.hpp"
#include "fnd/random.hpp"
#include "fnd/text.hpp"

namespace fnd {

namespace {

using json = nlohmann::json;

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

Label parse_label_field(std::string_view field, std::size_t line) {
  if (field == "0") return Label::Real;
  if (field == "1") return Label::Fake;
  const bool numeric = !field.empty() &&
      std::all_of(field.begin(), field.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '-' || c == '+';
      });
  if (numeric) throw ValidationError("label out of range" + at_line(line));
  throw ValidationError("invalid label '" + std::string(field) + "'" + at_line(line));
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line where the record starts
};

// RFC 4180 reader: comma delimiter, double-quote escaping, CRLF or LF.
std::vector<CsvRecord> read_csv_records(std::string_view s) {
  std::vector<CsvRecord> records;
  std::size_t i = 0;
  std::size_t line = 1;
  if (s.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  while (i < s.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool was_quoted = false;
    bool end_of_record = false;
    while (i < s.size() && !end_of_record) {
      const char c = s[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < s.size() && s[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || was_quoted)
            throw ValidationError("malformed row: unexpected quote" + at_line(line));
          in_quotes = true;
          was_quoted = true;
          ++i;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          was_quoted = false;
          ++i;
          break;
        case '\r':
          ++i;
          if (i < s.size() && s[i] == '\n') ++i;
          ++line;
          end_of_record = true;
          break;
        case '\n':
          ++i;
          ++line;
          end_of_record = true;
          break;
        default:
          if (was_quoted)
            throw ValidationError("malformed row: text after closing quote" +
                                  at_line(line));
          field.push_back(c);
          ++i;
      }
    }
    if (in_quotes)
      throw ValidationError("malformed row: unterminated quoted field" +
                            at_line(rec.line));
    rec.fields.push_back(std::move(field));
    // A bare empty line carries no record.
    if (rec.fields.size() == 1 && rec.fields[0].empty() && !was_quoted) continue;
    records.push_back(std::move(rec));
  }
  return records;
}

bool needs_quotes(std::string_view field) {
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void write_csv_field(std::string& out, std::string_view field) {
  if (!needs_quotes(field)) {
    out += field;
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void check_unique(std::unordered_set<std::string>& seen, const std::string& id,
                  std::size_t line) {
  if (!seen.insert(id).second)
    throw ValidationError("duplicate id '" + id + "'" + at_line(line));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

}  // namespace

Label label_from_int(long long v) {
  if (v == 0) return Label::Real;
  if (v == 1) return Label::Fake;
  throw ValidationError("label out of range: " + std::to_string(v));
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DatasetFormat::Csv;
  if (ext == ".jsonl" || ext == ".json") return DatasetFormat::Jsonl;
  throw ValidationError("cannot infer dataset format from '" + path.string() +
                        "' (expected .csv or .jsonl)");
}

Dataset parse_csv(std::string_view content, std::string name) {
  Dataset d;
  d.name = std::move(name);
  const auto records = read_csv_records(content);
  if (records.empty()) throw ValidationError("missing CSV header");

  const auto& header = records.front().fields;
  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) column[header[c]] = c;
  for (const char* required : {"id", "text", "label"}) {
    if (!column.count(required))
      throw ValidationError(std::string("CSV header lacks column '") + required + "'");
  }
  const std::size_t id_col = column["id"];
  const std::size_t text_col = column["text"];
  const std::size_t label_col = column["label"];
  const auto source_it = column.find("source");

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      throw ValidationError("malformed row: expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(rec.fields.size()) +
                            at_line(rec.line));
    LabeledDocument doc;
    doc.id = rec.fields[id_col];
    doc.text = rec.fields[text_col];
    doc.label = parse_label_field(rec.fields[label_col], rec.line);
    if (source_it != column.end()) doc.source = rec.fields[source_it->second];
    if (doc.id.empty()) throw ValidationError("empty id" + at_line(rec.line));
    if (doc.text.empty()) throw ValidationError("empty text" + at_line(rec.line));
    check_unique(seen, doc.id, rec.line);
    d.documents.push_back(std::move(doc));
  }
  return d;
}

Dataset parse_jsonl(std::string_view content, std::string name) {
  Dataset d;
  d.name = std::move(name);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == content.size()) break;
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("malformed JSON" + at_line(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw ValidationError("expected a JSON object" + at_line(line_no));
    for (const char* key : {"id", "text", "label"}) {
      if (!obj.contains(key))
        throw ValidationError(std::string("missing key '") + key + "'" + at_line(line_no));
    }
    LabeledDocument doc;
    const auto& id = obj["id"];
    if (id.is_string()) {
      doc.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      doc.id = std::to_string(id.get<long long>());
    } else {
      throw ValidationError("id must be a string or integer" + at_line(line_no));
    }
    if (!obj["text"].is_string())
      throw ValidationError("text must be a string" + at_line(line_no));
    doc.text = obj["text"].get<std::string>();
    const auto& label = obj["label"];
    if (!label.is_number_integer())
      throw ValidationError("invalid label" + at_line(line_no));
    const auto v = label.get<long long>();
    if (v != 0 && v != 1) throw ValidationError("label out of range" + at_line(line_no));
    doc.label = static_cast<Label>(v);
    if (obj.contains("source") && !obj["source"].is_null()) {
      if (!obj["source"].is_string())
        throw ValidationError("source must be a string" + at_line(line_no));
      doc.source = obj["source"].get<std::string>();
    }
    if (doc.id.empty()) throw ValidationError("empty id" + at_line(line_no));
    if (doc.text.empty()) throw ValidationError("empty text" + at_line(line_no));
    check_unique(seen, doc.id, line_no);
    d.documents.push_back(std::move(doc));
    if (end == content.size()) break;
  }
  return d;
}

std::string to_csv(const Dataset& d) {
  const bool with_source = std::any_of(d.documents.begin(), d.documents.end(),
                                       [](const auto& doc) { return !doc.source.empty(); });
  std::string out = with_source ? "id,text,label,source\n" : "id,text,label\n";
  for (const auto& doc : d.documents) {
    write_csv_field(out, doc.id);
    out.push_back(',');
    write_csv_field(out, doc.text);
    out.push_back(',');
    out += std::to_string(to_int(doc.label));
    if (with_source) {
      out.push_back(',');
      write_csv_field(out, doc.source);
    }
    out.push_back('\n');
  }
  return out;
}

std::string to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& doc : d.documents) {
    json obj = json::object();
    obj["id"] = doc.id;
    obj["text"] = doc.text;
    obj["label"] = to_int(doc.label);
    if (!doc.source.empty()) obj["source"] = doc.source;
    out += obj.dump(-1, ' ', false, json::error_handler_t::strict);
    out.push_back('\n');
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  const auto content = read_file(path);
  auto name = path.stem().string();
  try {
    return format == DatasetFormat::Csv ? parse_csv(content, std::move(name))
                                        : parse_jsonl(content, std::move(name));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& d, const std::filesystem::path& path,
                  DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto content = format == DatasetFormat::Csv ? to_csv(d) : to_jsonl(d);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset deduplicate(const Dataset& d) {
  Dataset out;
  out.name = d.name;
  std::unordered_set<std::string> seen;
  for (const auto& doc : d.documents) {
    if (seen.insert(text::collapse_whitespace(doc.text)).second)
      out.documents.push_back(doc);
  }
  return out;
}

ClassFrequencyReport class_frequency(const Dataset& d) {
  if (d.empty()) throw ValidationError("class frequency of an empty dataset is undefined");
  ClassFrequencyReport r;
  r.n_total = d.size();
  for (const auto& doc : d.documents) {
    if (doc.label == Label::Fake) ++r.n_fake;
  }
  r.n_real = r.n_total - r.n_fake;
  r.fake_fraction = static_cast<double>(r.n_fake) / static_cast<double>(r.n_total);
  r.real_fraction = static_cast<double>(r.n_real) / static_cast<double>(r.n_total);
  return r;
}

TrainTestSplit split_train_test(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ValidationError("train_fraction must lie in (0, 1)");
  const std::size_t n = d.size();
  if (n < 2) throw ValidationError("dataset too small to split (need at least 2 documents)");
  const auto n_train =
      static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));
  if (n_train == 0 || n_train == n)
    throw ValidationError("dataset too small to split at fraction " +
                          std::to_string(spec.train_fraction));

  rng::Generator gen(spec.seed);
  std::vector<bool> in_train(n, false);

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    gen.shuffle(order);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  } else {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[to_int(d.documents[i].label)].push_back(i);
    // Largest-remainder allocation of n_train across the two classes.
    std::size_t quota[2];
    double remainder[2];
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
      const double exact = spec.train_fraction * static_cast<double>(by_class[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - std::floor(exact);
      assigned += quota[c];
    }
    while (assigned < n_train) {
      int c = remainder[1] > remainder[0] ? 1 : 0;
      if (quota[c] >= by_class[c].size()) c = 1 - c;
      ++quota[c];
      remainder[c] = -1.0;
      ++assigned;
    }
    for (int c = 0; c < 2; ++c) {
      gen.shuffle(by_class[c]);
      for (std::size_t i = 0; i < quota[c]; ++i) in_train[by_class[c][i]] = true;
    }
  }

  TrainTestSplit out;
  out.train.name = d.name + "-train";
  out.test.name = d.name + "-test";
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? out.train : out.test).documents.push_back(d.documents[i]);
  return out;
}

// ------------------------------------------------------------- translation

bool contains_cyrillic(std::string_view utf8) {
  for (char32_t cp : text::decode(utf8)) {
    if (cp >= 0x0400 && cp <= 0x052F) return true;
  }
  return false;
}

TranslationResponse MockTranslationClient::translate(const TranslationRequest& request) {
  if (contains_cyrillic(request.text))
    return TranslationFailure{"untranslatable_script", "text contains Cyrillic letters"};
  std::string out = request.text;
  for (const auto& [from, to] : dictionary_) {
    if (from.empty()) continue;
    std::size_t pos = 0;
    while ((pos = out.find(from, pos)) != std::string::npos) {
      out.replace(pos, from.size(), to);
      pos += to.size();
    }
  }
  return out;
}

TranslationOutcome translate_dataset(const Dataset& d, TranslationClient& client,
                                     const std::string& source_lang) {
  TranslationOutcome outcome;
  outcome.dataset.name = d.name;
  for (const auto& doc : d.documents) {
    TranslationResponse response;
    try {
      response = client.translate({doc.text, source_lang, "ar"});
    } catch (const std::exception& e) {
      response = TranslationFailure{"transport", e.what()};
    }
    if (const auto* failure = std::get_if<TranslationFailure>(&response)) {
      outcome.dropped.push_back({doc.id, failure->code, failure->message});
      continue;
    }
    auto translated = std::get<std::string>(std::move(response));
    if (translated.empty()) {
      outcome.dropped.push_back({doc.id, "empty_translation", "client returned empty text"});
      continue;
    }
    LabeledDocument out = doc;
    out.text = std::move(translated);
    outcome.dataset.documents.push_back(std::move(out));
  }
  if (!d.empty() && outcome.dataset.empty())
    throw ValidationError("translation failed for all " + std::to_string(d.size()) +
                          " documents");
  return outcome;
}

}  // namespace fnd
