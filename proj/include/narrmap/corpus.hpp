#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "narrmap/text.hpp"

namespace narrmap {

struct Event {
  std::string id;
  text::UnixSeconds timestamp = 0;
  std::string headline;
  std::string source;
  std::optional<std::string> url;
};

// Strict chronological order: timestamp first, id second.
inline bool chronologically_before(const Event& a, const Event& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.id < b.id;
}

// Events sorted by (timestamp, id), ids unique, at least two events.
// Positions in the corpus are the canonical event indices used everywhere
// downstream: i < j means event i precedes event j.
class Corpus {
 public:
  // Sorts and validates. Throws InputError on duplicate ids, empty headlines,
  // or fewer than two events.
  explicit Corpus(std::vector<Event> events);

  std::size_t size() const { return events_.size(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }
  const std::vector<Event>& events() const { return events_; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }

  std::optional<std::size_t> find(std::string_view id) const;
  // Throws InputError naming the id when absent.
  std::size_t index_of(std::string_view id) const;

 private:
  std::vector<Event> events_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class CorpusFormat { kCsv, kJson };

// "csv" or "json"; throws InputError otherwise.
CorpusFormat parse_corpus_format(std::string_view name);

// Guesses the format from the file extension, defaulting to CSV.
CorpusFormat corpus_format_for(const std::filesystem::path& path);

// CSV with header `id,timestamp,headline,source[,url]` (any column order), or
// a JSON array of objects with the same keys. Headlines go through
// text::clean_headline.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus parse_corpus_csv(std::string_view content);
Corpus parse_corpus_json(std::string_view content);

// Keeps events whose source is among the n most frequent sources; ties on
// count go to the lexicographically smaller source name.
Corpus filter_top_sources(const Corpus& corpus, std::size_t n);

struct Endpoints {
  std::size_t start = 0;
  std::size_t end = 0;
};

// Defaults to the chronologically first and last events.
Endpoints select_endpoints(const Corpus& corpus,
                           const std::optional<std::string>& start_id,
                           const std::optional<std::string>& end_id);

}  // namespace narrmap
