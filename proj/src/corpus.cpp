#include "narrmap/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "narrmap/diagnostics.hpp"

namespace narrmap {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180: quoted fields may contain separators, doubled quotes and newlines.
std::vector<CsvRecord> parse_csv(std::string_view s) {
  std::vector<CsvRecord> records;
  std::size_t i = 0;
  std::size_t line = 1;
  if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < s.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool done = false;
    while (!done) {
      if (i >= s.size()) {
        if (in_quotes) {
          throw InputError("CSV parse error at line " + std::to_string(rec.line) +
                           ": unterminated quoted field");
        }
        rec.fields.push_back(std::move(field));
        done = true;
        break;
      }
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
      if (c == '"' && !field.empty()) {
        // Bare quote inside an unquoted field is kept literally.
        field.push_back(c);
        ++i;
      } else if (c == '"') {
        if (field_was_quoted) {
          throw InputError("CSV parse error at line " + std::to_string(line) +
                           ": text after closing quote");
        }
        in_quotes = true;
        field_was_quoted = true;
        ++i;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        ++i;
      } else if (c == '\r' || c == '\n') {
        rec.fields.push_back(std::move(field));
        if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
        ++i;
        ++line;
        done = true;
      } else {
        if (field_was_quoted) {
          throw InputError("CSV parse error at line " + std::to_string(line) +
                           ": text after closing quote");
        }
        field.push_back(c);
        ++i;
      }
    }
    const bool blank = rec.fields.size() == 1 && text::trim(rec.fields[0]).empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

Event make_event(std::string id, std::string_view timestamp,
                 std::string_view headline, std::string source,
                 std::optional<std::string> url, const std::string& where) {
  Event ev;
  ev.id = std::string(text::trim(id));
  if (ev.id.empty()) throw InputError(where + ": empty id");
  const auto ts = text::parse_iso8601(timestamp);
  if (!ts) {
    throw InputError(where + ": unparseable timestamp '" +
                     std::string(timestamp) + "'");
  }
  ev.timestamp = *ts;
  ev.headline = text::clean_headline(headline);
  ev.source = std::string(text::trim(source));
  if (url) {
    const auto trimmed = text::trim(*url);
    if (!trimmed.empty()) ev.url = std::string(trimmed);
  }
  return ev;
}

}  // namespace

Corpus::Corpus(std::vector<Event> events) : events_(std::move(events)) {
  if (events_.empty()) throw InputError("empty corpus");
  for (const auto& ev : events_) {
    if (text::trim(ev.headline).empty()) {
      throw InputError("event '" + ev.id + "' has an empty headline");
    }
    if (!by_id_.emplace(ev.id, 0).second) {
      throw InputError("duplicate event id '" + ev.id + "'");
    }
  }
  if (events_.size() < 2) {
    throw InputError("corpus must contain at least 2 events, got " +
                     std::to_string(events_.size()));
  }
  std::sort(events_.begin(), events_.end(), chronologically_before);
  for (std::size_t i = 0; i < events_.size(); ++i) by_id_[events_[i].id] = i;
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::index_of(std::string_view id) const {
  const auto found = find(id);
  if (!found) throw InputError("unknown event id '" + std::string(id) + "'");
  return *found;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "csv") return CorpusFormat::kCsv;
  if (name == "json") return CorpusFormat::kJson;
  throw InputError("unknown corpus format '" + std::string(name) +
                   "' (expected csv or json)");
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  return path.extension() == ".json" ? CorpusFormat::kJson : CorpusFormat::kCsv;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (!std::filesystem::exists(path)) {
    throw InputError("corpus file not found: " + path.string());
  }
  const std::string content = read_file(path);
  return format == CorpusFormat::kCsv ? parse_corpus_csv(content)
                                      : parse_corpus_json(content);
}

Corpus parse_corpus_csv(std::string_view content) {
  const auto records = parse_csv(content);
  if (records.empty()) throw InputError("empty corpus: CSV has no header row");
  const auto& header = records.front().fields;
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    col[std::string(text::trim(header[c]))] = c;
  }
  for (const char* required : {"id", "timestamp", "headline", "source"}) {
    if (!col.count(required)) {
      throw InputError(std::string("CSV header is missing required column '") +
                       required + "'");
    }
  }
  const std::optional<std::size_t> url_col =
      col.count("url") ? std::optional<std::size_t>(col["url"]) : std::nullopt;
  std::vector<Event> events;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "CSV line " + std::to_string(rec.line);
    const auto field = [&](const char* name) -> const std::string& {
      const std::size_t c = col.at(name);
      if (c >= rec.fields.size()) {
        throw InputError(where + ": missing field '" + name + "'");
      }
      return rec.fields[c];
    };
    std::optional<std::string> url;
    if (url_col && *url_col < rec.fields.size()) url = rec.fields[*url_col];
    events.push_back(make_event(field("id"), field("timestamp"),
                                field("headline"), field("source"), url, where));
  }
  if (events.empty()) throw InputError("empty corpus: CSV has no records");
  return Corpus(std::move(events));
}

Corpus parse_corpus_json(std::string_view content) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("JSON parse error: ") + e.what());
  }
  if (!doc.is_array()) throw InputError("JSON corpus must be an array of objects");
  if (doc.empty()) throw InputError("empty corpus: JSON array has no records");
  std::vector<Event> events;
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto& obj = doc[r];
    const std::string where = "JSON record " + std::to_string(r);
    if (!obj.is_object()) throw InputError(where + ": not an object");
    const auto str = [&](const char* key) -> std::string {
      if (!obj.contains(key) || !obj[key].is_string()) {
        throw InputError(where + ": missing string field '" + key + "'");
      }
      return obj[key].get<std::string>();
    };
    std::optional<std::string> url;
    if (obj.contains("url") && obj["url"].is_string()) {
      url = obj["url"].get<std::string>();
    }
    events.push_back(make_event(str("id"), str("timestamp"), str("headline"),
                                str("source"), url, where));
  }
  return Corpus(std::move(events));
}

Corpus filter_top_sources(const Corpus& corpus, std::size_t n) {
  if (n == 0) throw InputError("top-sources count must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& ev : corpus) ++counts[ev.source];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<Event> kept;
  for (const auto& ev : corpus) {
    const bool keep = std::any_of(ranked.begin(), ranked.end(),
                                  [&](const auto& r) { return r.first == ev.source; });
    if (keep) kept.push_back(ev);
  }
  if (kept.size() < 2) {
    throw InputError("filtering to the top " + std::to_string(n) +
                     " sources leaves " + std::to_string(kept.size()) +
                     " events; at least 2 are required");
  }
  return Corpus(std::move(kept));
}

Endpoints select_endpoints(const Corpus& corpus,
                           const std::optional<std::string>& start_id,
                           const std::optional<std::string>& end_id) {
  Endpoints ep{0, corpus.size() - 1};
  if (start_id) ep.start = corpus.index_of(*start_id);
  if (end_id) ep.end = corpus.index_of(*end_id);
  if (ep.start >= ep.end) {
    throw InputError("start event '" + corpus[ep.start].id +
                     "' does not precede end event '" + corpus[ep.end].id + "'");
  }
  return ep;
}

}  // namespace narrmap
