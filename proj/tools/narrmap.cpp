// Command-line front end: pipeline, analyze, inspect-topics.
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/pipeline.hpp"

namespace {

using namespace narrmap;

enum Exit { kOk = 0, kInput = 2, kInfeasible = 3, kInternal = 4 };

int finish(int code) {
  const char* status = code == kOk           ? "ok"
                       : code == kInput      ? "input"
                       : code == kInfeasible ? "infeasible"
                                             : "internal";
  std::cout << "status=" << status << std::endl;
  return code;
}

template <typename F>
int guarded(F&& body) {
  try {
    return finish(body());
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cout << "infeasible_family=" << e.family() << "\n";
    return finish(kInfeasible);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return finish(kInput);
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return finish(kInternal);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return finish(kInternal);
  }
}

const char* const kSettings[] = {
    "input",      "format",      "embeddings", "embed-dim", "topics",
    "min-cluster-size", "reduce-dim", "start", "end",       "top-sources",
    "k-min",      "mincover",    "round-threshold", "seed", "out",
    "name",       "title"};

struct SettingFlags {
  std::map<std::string, std::string> values;
  std::string config_file;

  void attach(CLI::App* cmd) {
    for (const char* key : kSettings) cmd->add_option(std::string("--") + key, values[key]);
    cmd->add_option("--config", config_file, "key=value file; flags take precedence");
  }

  PipelineConfig resolve(const CLI::App* cmd) const {
    PipelineConfig config;
    if (!config_file.empty()) {
      for (const auto& [key, value] : read_config_file(config_file)) {
        apply_setting(config, key, value);
      }
    }
    for (const char* key : kSettings) {
      if (cmd->count(std::string("--") + key) > 0) {
        apply_setting(config, key, values.at(key));
      }
    }
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Narrative map extraction from timestamped headlines"};
  app.require_subcommand(1);

  SettingFlags pipeline_flags;
  auto* pipeline = app.add_subcommand("pipeline", "extract a map and write JSON, DOT, HTML");
  pipeline_flags.attach(pipeline);

  std::string map_path;
  auto* analyze_cmd = app.add_subcommand("analyze", "recompute and check a stored map");
  analyze_cmd->add_option("map", map_path, "JSON written by the pipeline")->required();

  SettingFlags topic_flags;
  auto* inspect = app.add_subcommand("inspect-topics", "report the discovered clusters");
  topic_flags.attach(inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return finish(kInput);
  }

  if (pipeline->parsed()) {
    return guarded([&] {
      const PipelineConfig config = pipeline_flags.resolve(pipeline);
      const PipelineResult result = run_pipeline(config);
      write_outputs(config, result);
      std::cout << pipeline_report(result);
      return kOk;
    });
  }
  if (analyze_cmd->parsed()) {
    return guarded([&] {
      const StoredCheck check = check_stored_map(load_map_json(map_path));
      std::cout << check.report;
      if (!check.mismatches.empty()) {
        for (const auto& m : check.mismatches) std::cerr << "mismatch: " << m << "\n";
        return kInternal;
      }
      return kOk;
    });
  }
  return guarded([&] {
    const PipelineConfig config = topic_flags.resolve(inspect);
    std::cout << topics_report(run_topic_stage(config));
    return kOk;
  });
}
