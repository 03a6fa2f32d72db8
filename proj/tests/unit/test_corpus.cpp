#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "narrmap/corpus.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/text.hpp"
#include "synthetic.hpp"

using namespace narrmap;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("narrmap_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

Event ev(std::string id, const char* ts, std::string source = "a.com") {
  return {std::move(id), *text::parse_iso8601(ts), "Headline " + source, std::move(source),
          std::nullopt};
}

}  // namespace

TEST_CASE("timestamps parse in the accepted ISO-8601 shapes") {
  CHECK(text::parse_iso8601("1970-01-01") == 0);
  CHECK(text::parse_iso8601("2020-01-31") == 1580428800);
  CHECK(text::parse_iso8601("2020-01-31T12:30:15Z") == 1580428800 + 45015);
  CHECK(text::parse_iso8601("2020-01-31 12:30") == 1580428800 + 45000);
  CHECK(text::parse_iso8601("2020-01-31T12:30:15+02:00") == 1580428800 + 45015 - 7200);
  CHECK(text::parse_iso8601("2020-01-31T12:30:15.750Z") == 1580428800 + 45015);
  CHECK_FALSE(text::parse_iso8601("2020-02-30"));
  CHECK_FALSE(text::parse_iso8601("31/01/2020"));
  CHECK_FALSE(text::parse_iso8601("2020-01-31T25:00"));
  CHECK(text::format_iso8601(1580428800 + 45015) == "2020-01-31T12:30:15Z");
  CHECK(text::format_date(1580428800 + 45015) == "2020-01-31");
}

TEST_CASE("headline cleanup repairs mojibake and whitespace") {
  CHECK(text::clean_headline("Caf\xC3\x83\xC2\xA9 owners") == "Caf\xC3\xA9 owners");
  CHECK(text::clean_headline("WHO \xC3\xA2\xE2\x82\xAC\xE2\x80\x9C live") ==
        "WHO \xE2\x80\x93 live");
  // Lone cp1252 byte.
  CHECK(text::clean_headline("caf\xE9") == "caf\xC3\xA9");
  CHECK(text::clean_headline("  a\t\tb \xC2\xA0 c\n") == "a b c");
  // Already-correct text is untouched.
  CHECK(text::clean_headline("na\xC3\xAFve r\xC3\xA9sum\xC3\xA9") ==
        "na\xC3\xAFve r\xC3\xA9sum\xC3\xA9");
}

TEST_CASE("tokenize lowercases, splits and drops single characters") {
  CHECK(text::tokenize("WHO's A-list: 2020 Virus!") ==
        std::vector<std::string>{"who", "list", "2020", "virus"});
  CHECK(text::has_letter("a1"));
  CHECK_FALSE(text::has_letter("2020"));
}

TEST_CASE("load_corpus sorts a 3-row CSV chronologically") {
  const auto path = temp_file("three.csv",
                              "id,timestamp,headline,source,url\n"
                              "c,2020-01-03,Third,x.com,\n"
                              "a,2020-01-01,First,x.com,http://x/a\n"
                              "b,2020-01-02T08:00:00Z,\"Second, with comma\",y.com,\n");
  const Corpus corpus = load_corpus(path, CorpusFormat::kCsv);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus[0].id == "a");
  CHECK(corpus[1].id == "b");
  CHECK(corpus[1].headline == "Second, with comma");
  CHECK(corpus[2].id == "c");
  CHECK(corpus[0].url == std::optional<std::string>("http://x/a"));
  CHECK_FALSE(corpus[2].url);
}

TEST_CASE("CSV columns may come in any order and url is optional") {
  const Corpus corpus = parse_corpus_csv(
      "\xEF\xBB\xBFsource,headline,id,timestamp\r\n"
      "s,Late,2,2020-01-02\r\n"
      "s,Early,1,2020-01-01\r\n");
  CHECK(corpus[0].id == "1");
  CHECK(corpus[1].headline == "Late");
}

TEST_CASE("load_corpus errors") {
  CHECK(error_of([] {
          parse_corpus_csv("id,timestamp,headline,source\n"
                           "a,2020-01-01,One,s\n"
                           "a,2020-01-02,Two,s\n");
        }).find("duplicate event id 'a'") != std::string::npos);
  CHECK(error_of([] { parse_corpus_csv("id,timestamp,headline,source\n"); })
            .find("empty corpus") != std::string::npos);
  CHECK(error_of([] {
          parse_corpus_csv("id,timestamp,headline,source\n"
                           "a,yesterday,One,s\n"
                           "b,2020-01-02,Two,s\n");
        }).find("unparseable timestamp") != std::string::npos);
  const std::string parse = error_of([] {
    parse_corpus_csv("id,timestamp,headline,source\n"
                     "a,2020-01-01,One,s\n"
                     "b,2020-01-02,\"Two\"x,s\n");
  });
  CHECK(parse.find("line 3") != std::string::npos);
  CHECK(error_of([] { parse_corpus_csv("id,timestamp,headline\na,2020-01-01,x\n"); })
            .find("source") != std::string::npos);
  CHECK(error_of([] {
          parse_corpus_csv("id,timestamp,headline,source\n"
                           "a,2020-01-01,   ,s\n"
                           "b,2020-01-02,Two,s\n");
        }).find("empty headline") != std::string::npos);
  CHECK(error_of([] { parse_corpus_json(R"([{"id":"a"}])"); }).find("record 0") !=
        std::string::npos);
  CHECK(error_of([] { load_corpus("/nonexistent/corpus.csv", CorpusFormat::kCsv); }) != "");
}

TEST_CASE("JSON corpus with equal timestamps is ordered by id") {
  const Corpus corpus = parse_corpus_json(R"([
    {"id": "b", "timestamp": "2020-01-01", "headline": "B", "source": "s"},
    {"id": "a", "timestamp": "2020-01-01", "headline": "A", "source": "s", "url": "u"}
  ])");
  CHECK(corpus[0].id == "a");
  CHECK(corpus[1].id == "b");
  CHECK(corpus.index_of("b") == 1);
  CHECK_FALSE(corpus.find("zz"));
}

TEST_CASE("case-study archive loads 607 records and filters to 102") {
  const auto path = temp_file("covid.csv", testing::covid_january_csv());
  const Corpus corpus = load_corpus(path, corpus_format_for(path));
  CHECK(corpus.size() == 607);
  const Corpus top = filter_top_sources(corpus, 5);
  CHECK(top.size() == 102);
  std::map<std::string, int> counts;
  for (const auto& e : top) ++counts[e.source];
  CHECK(counts.size() == 5);
  CHECK(counts["reuters.com"] == 30);
}

TEST_CASE("filter_top_sources ranks by count and breaks ties by name") {
  std::vector<Event> events;
  int t = 0;
  char ts[32];
  const auto add = [&](const std::string& src, int n) {
    for (int k = 0; k < n; ++k) {
      std::snprintf(ts, sizeof ts, "2020-01-01T00:%02d:00Z", t);
      events.push_back(ev(src + std::to_string(k), ts, src));
      ++t;
    }
  };
  add("A", 5);
  add("B", 3);
  add("C", 1);
  const Corpus corpus(events);
  const Corpus two = filter_top_sources(corpus, 2);
  CHECK(two.size() == 8);
  for (const auto& e : two) CHECK(e.source != "C");
  CHECK(filter_top_sources(corpus, 3).events().size() == corpus.size());
  CHECK(filter_top_sources(corpus, 7).size() == corpus.size());
  // Idempotent for fixed n.
  const Corpus again = filter_top_sources(two, 2);
  REQUIRE(again.size() == two.size());
  for (std::size_t i = 0; i < two.size(); ++i) CHECK(again[i].id == two[i].id);

  std::vector<Event> tied{ev("x1", "2020-01-01", "zeta"), ev("x2", "2020-01-02", "alpha"),
                          ev("x3", "2020-01-03", "alpha"), ev("x4", "2020-01-04", "zeta"),
                          ev("x5", "2020-01-05", "mid")};
  const Corpus t1 = filter_top_sources(Corpus(tied), 1);
  for (const auto& e : t1) CHECK(e.source == "alpha");
  CHECK(error_of([&] { filter_top_sources(Corpus(tied), 0); }) != "");
  std::vector<Event> lonely{ev("y1", "2020-01-01", "a"), ev("y2", "2020-01-02", "b")};
  CHECK(error_of([&] { filter_top_sources(Corpus(lonely), 1); }) != "");
}

TEST_CASE("select_endpoints defaults and validation") {
  const Corpus corpus({ev("a", "2020-01-01"), ev("b", "2020-01-02"), ev("c", "2020-01-03")});
  const auto d = select_endpoints(corpus, std::nullopt, std::nullopt);
  CHECK(d.start == 0);
  CHECK(d.end == corpus.size() - 1);
  const auto e = select_endpoints(corpus, std::string("a"), std::string("b"));
  CHECK(e.start == 0);
  CHECK(e.end == 1);
  CHECK(error_of([&] { select_endpoints(corpus, std::string("c"), std::string("a")); })
            .find("precede") != std::string::npos);
  CHECK(error_of([&] { select_endpoints(corpus, std::string("zz"), std::nullopt); })
            .find("unknown event id 'zz'") != std::string::npos);
}

TEST_CASE("every loaded corpus is sorted with unique ids") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::NewsOptions options;
    options.events = 30;
    options.seed = seed;
    const Corpus corpus = parse_corpus_csv(testing::to_csv(testing::synthetic_news(options)));
    for (std::size_t i = 1; i < corpus.size(); ++i) {
      CHECK(chronologically_before(corpus[i - 1], corpus[i]));
    }
  }
}
