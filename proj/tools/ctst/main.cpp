// ctst: batch evaluation of chat-style text style transfer.
#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctst/error.hpp"
#include "ctst/mockfarm.hpp"
#include "ctst/pipeline.hpp"

namespace {

namespace pl = ctst::pipeline;

struct Overrides {
  std::string config;
  bool no_cache = false;
  std::string directions;
  std::string metrics;
  std::string formats;
  std::string output_dir;
  std::string human;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Run configuration (JSON)")->required();
  cmd->add_flag("--no-cache", o.no_cache, "Refetch every backend response (cache is still written)");
  cmd->add_option("--directions", o.directions, "Comma list of directions or 'all'");
  cmd->add_option("--metrics", o.metrics, "Comma list of metrics (acc,bleu,embed,judge,nll) or 'all'");
  cmd->add_option("--format", o.formats, "Report formats: markdown,csv,json or 'all'");
  cmd->add_option("-o,--output-dir", o.output_dir, "Override output directory");
  cmd->add_option("--human", o.human, "Human annotation CSV (correlate)");
}

pl::RunConfig load(const Overrides& o) {
  auto c = pl::RunConfig::load(o.config);
  if (o.no_cache) c.use_cache = false;
  if (!o.directions.empty()) c.directions = pl::parse_direction_list(o.directions);
  if (!o.metrics.empty()) c.metrics = pl::parse_metric_list(o.metrics);
  if (!o.formats.empty()) c.formats = pl::parse_format_list(o.formats);
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  if (!o.human.empty()) c.human_csv = o.human;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctst - batch evaluation of chat-style text style transfer"};
  app.require_subcommand(1);

  Overrides o;
  using Stage = int (*)(const pl::RunConfig&, std::ostream&);
  const std::pair<const char*, std::pair<const char*, Stage>> stages[] = {
      {"ingest", {"Normalize corpora and cut the evaluation slice", pl::cmd_ingest}},
      {"generate", {"Generate styled responses for every model and direction", pl::cmd_generate}},
      {"score", {"Compute metric records for generated responses", pl::cmd_score}},
      {"correlate", {"Sample-level correlation against human annotations", pl::cmd_correlate}},
      {"report", {"Write leaderboard tables", pl::cmd_report}},
      {"run", {"ingest, generate, score, correlate (if configured), report", pl::cmd_run}},
  };
  Stage chosen = nullptr;
  for (const auto& [name, info] : stages) {
    auto* cmd = app.add_subcommand(name, info.first);
    add_common(cmd, o);
    cmd->callback([&chosen, fn = info.second] { chosen = fn; });
  }

  std::string script_path;
  int port = 8089;
  std::string host = "127.0.0.1";
  auto* mock = app.add_subcommand("mock", "Serve deterministic mock backends (all wire contracts)");
  mock->add_option("--script", script_path, "Script JSON (default: fully synthetic)");
  mock->add_option("--port", port, "Port (0 = any free port)");
  mock->add_option("--host", host, "Bind address");

  std::string text;
  std::string marker = "###Response: ";
  double nll = 2.0;
  std::size_t token_len = 4;
  auto* synth = app.add_subcommand("synth-logprobs", "Print a fixed-width logprob fixture for a text");
  synth->add_option("--text", text, "Text to tokenize")->required();
  synth->add_option("--marker", marker, "Token boundaries restart after this marker ('' to disable)");
  synth->add_option("--nll", nll, "Per-token negative log-likelihood");
  synth->add_option("--token-len", token_len, "Code points per token");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mock->parsed()) {
      ctst::mock::Script script = script_path.empty() ? ctst::mock::Script{} : ctst::mock::Script::load(script_path);
      // Block the stop signals before any server thread exists, then wait for one.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      ctst::mock::MockServer server(std::move(script));
      server.start(port, host);
      std::cout << "mock backends listening on " << server.base_url() << std::endl;
      int sig = 0;
      sigwait(&stop_signals, &sig);
      server.stop();
      std::cerr << "served " << server.request_count() << " request(s)\n";
      return 0;
    }
    if (synth->parsed()) {
      std::cout << ctst::mock::synth_logprobs(text, marker, nll, token_len).dump() << "\n";
      return 0;
    }
    return chosen(load(o), std::cerr);
  } catch (const ctst::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitInput;
  } catch (const ctst::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kExitPartial;
  }
}
