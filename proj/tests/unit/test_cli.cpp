#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string command = std::string("\"") + NARRMAP_CLI + "\" " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe);
  Run r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("narrmap_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string quote(const fs::path& p) { return "\"" + p.string() + "\""; }

fs::path write(const fs::path& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path news(const fs::path& dir, std::size_t events, std::uint64_t seed) {
  narrmap::testing::NewsOptions options;
  options.events = events;
  options.seed = seed;
  return write(dir / "news.csv",
               narrmap::testing::to_csv(narrmap::testing::synthetic_news(options)));
}

// Four events with one-hot topics: the second cluster only lives on an edge
// that cannot reach the end event.
struct Sparse {
  fs::path corpus, embeddings, topics;
};

Sparse sparse(const fs::path& dir) {
  Sparse s;
  s.corpus = write(dir / "sparse.csv",
                   "id,timestamp,headline,source\n"
                   "s,2020-01-01,Start,x\na,2020-01-02,Middle,x\n"
                   "b,2020-01-03,Aside,x\nt,2020-01-04,End,x\n");
  s.embeddings = write(dir / "sparse_emb.jsonl",
                       "{\"id\":\"s\",\"vector\":[1,0.2]}\n{\"id\":\"a\",\"vector\":[1,0.4]}\n"
                       "{\"id\":\"b\",\"vector\":[1,0.3]}\n{\"id\":\"t\",\"vector\":[1,0.1]}\n");
  s.topics = write(dir / "sparse_topics.jsonl",
                   "{\"id\":\"s\",\"dist\":[1,0,0]}\n{\"id\":\"a\",\"dist\":[0.5,0.5,0]}\n"
                   "{\"id\":\"b\",\"dist\":[0,1,0]}\n{\"id\":\"t\",\"dist\":[1,0,0]}\n");
  return s;
}

bool has(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("pipeline on a 10-event corpus writes all outputs") {
  const fs::path dir = scratch_dir("ten");
  const Run r = run("pipeline --input " + quote(news(dir, 10, 1)) + " --out " + quote(dir / "out"));
  CHECK(r.code == 0);
  CHECK(has(r.out, "status=ok"));
  CHECK(has(r.out, "events=10\n"));
  for (const char* ext : {".json", ".dot", ".html", ".report.txt"}) {
    CHECK(fs::exists(dir / "out" / ("narrative_map" + std::string(ext))));
  }
}

TEST_CASE("unsatisfiable coverage exits 3 naming coverage") {
  const fs::path dir = scratch_dir("coverage");
  const Sparse s = sparse(dir);
  const std::string base = "pipeline --input " + quote(s.corpus) + " --embeddings " +
                           quote(s.embeddings) + " --topics " + quote(s.topics) +
                           " --k-min 2 --out " + quote(dir / "out");
  const Run r = run(base + " --mincover 1.0");
  CHECK(r.code == 3);
  CHECK(has(r.out, "infeasible_family=coverage"));
  CHECK(has(r.out, "status=infeasible"));
  CHECK(run(base + " --mincover 0.5").code == 0);
}

TEST_CASE("input problems exit 2") {
  const fs::path dir = scratch_dir("input");
  const fs::path corpus = news(dir, 12, 2);
  const Run unknown = run("pipeline --input " + quote(corpus) + " --start nope --out " +
                          quote(dir / "out"));
  CHECK(unknown.code == 2);
  CHECK(has(unknown.out, "status=input"));
  CHECK(run("pipeline --input " + quote(dir / "missing.csv")).code == 2);
  CHECK(run("pipeline --input " + quote(corpus) + " --mincover 2").code == 2);
  CHECK(run("pipeline --input " + quote(corpus) + " --no-such-flag 1").code == 2);
  CHECK(run("pipeline --input " + quote(corpus) + " --embed-dim 16 --embeddings x.jsonl").code ==
        2);
}

TEST_CASE("analyze checks stored maps") {
  const fs::path dir = scratch_dir("analyze");
  REQUIRE(run("pipeline --input " + quote(news(dir, 20, 3)) + " --out " + quote(dir)).code == 0);
  const fs::path map = dir / "narrative_map.json";
  const Run ok = run("analyze " + quote(map));
  CHECK(ok.code == 0);
  CHECK(has(ok.out, "status=ok"));

  std::string doc = slurp(map);
  const auto route = doc.find("\"main_route\": [");
  REQUIRE(route != std::string::npos);
  // Drop the first id after the start of the route.
  const auto first = doc.find(",", route);
  const auto second = doc.find(",", first + 1);
  doc.erase(first, second - first);
  const fs::path edited = write(dir / "edited.json", doc);
  CHECK(run("analyze " + quote(edited)).code == 4);
  CHECK(run("analyze " + quote(dir / "nothing.json")).code == 2);
  CHECK(run("analyze " + quote(write(dir / "junk.json", "{not json"))).code == 2);
}

TEST_CASE("inspect-topics reports clusters") {
  const fs::path dir = scratch_dir("inspect");
  const std::vector<std::string> a{"virus", "wuhan", "outbreak", "pneumonia", "patients",
                                   "hospital", "doctors", "infection"};
  const std::vector<std::string> b{"markets", "stocks", "trade", "tariffs", "investors",
                                   "shares", "earnings", "rally"};
  std::mt19937_64 rng(11);
  std::string blobs = "id,timestamp,headline,source\n";
  for (int i = 0; i < 20; ++i) {
    const auto& vocab = i < 10 ? a : b;
    std::string headline;
    for (int w = 0; w < 5; ++w) headline += (w ? " " : "") + vocab[rng() % vocab.size()];
    blobs += "b" + std::to_string(i) + ",2020-01-" + (i < 9 ? "0" : "") + std::to_string(i + 1) +
             "," + headline + ",src\n";
  }
  const Run two = run("inspect-topics --input " + quote(write(dir / "blobs.csv", blobs)));
  CHECK(two.code == 0);
  CHECK(has(two.out, "clusters=2\n"));

  std::string same = "id,timestamp,headline,source\n";
  for (int i = 0; i < 6; ++i) {
    same += "s" + std::to_string(i) + ",2020-01-0" + std::to_string(i + 1) + ",Same words here,x\n";
  }
  const Run one = run("inspect-topics --input " + quote(write(dir / "same.csv", same)));
  CHECK(one.code == 0);
  CHECK(has(one.out, "clusters=1\n"));
  CHECK(has(one.out, "noise_events=0\n"));

  const Run rejected = run("inspect-topics --input " + quote(dir / "blobs.csv") +
                           " --min-cluster-size 30");
  CHECK(rejected.code == 3);
  CHECK(has(rejected.out, "status=infeasible"));

  const Run empty = run("inspect-topics --input " +
                        quote(write(dir / "empty.csv", "id,timestamp,headline,source\n")));
  CHECK(empty.code == 2);
  CHECK(has(empty.out, "status=input"));
}

TEST_CASE("flags override the config file") {
  const fs::path dir = scratch_dir("precedence");
  const Sparse s = sparse(dir);
  const fs::path conf = write(dir / "run.conf", "input=" + s.corpus.string() +
                                                    "\nembeddings=" + s.embeddings.string() +
                                                    "\ntopics=" + s.topics.string() +
                                                    "\nk-min=2\nmincover=1.0\nname=fromfile\n"
                                                    "out=" + (dir / "out").string() + "\n");
  CHECK(run("pipeline --config " + quote(conf)).code == 3);
  const Run flagged = run("pipeline --config " + quote(conf) + " --mincover 0.5");
  CHECK(flagged.code == 0);
  CHECK(fs::exists(dir / "out" / "fromfile.json"));
  CHECK(run("pipeline --config " + quote(conf) + " --mincover 0.5 --name fromflag").code == 0);
  CHECK(fs::exists(dir / "out" / "fromflag.dot"));
}

TEST_CASE("repeated runs write identical files") {
  const fs::path dir = scratch_dir("repeat");
  const fs::path corpus = news(dir, 25, 6);
  REQUIRE(run("pipeline --input " + quote(corpus) + " --seed 9 --out " + quote(dir / "a")).code == 0);
  REQUIRE(run("pipeline --input " + quote(corpus) + " --seed 9 --out " + quote(dir / "b")).code == 0);
  for (const char* ext : {".json", ".dot", ".html"}) {
    const std::string file = "narrative_map" + std::string(ext);
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
  }
}
