#include "ctst/pipeline.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "ctst/bleu.hpp"
#include "ctst/cache.hpp"
#include "ctst/csv.hpp"
#include "ctst/error.hpp"
#include "ctst/judge_score.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/prompting.hpp"
#include "ctst/scheduler.hpp"
#include "ctst/stats.hpp"
#include "ctst/text.hpp"

namespace ctst::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

SourceFormat parse_source_format(std::string_view s) {
  if (s == "daily_dialog" || s == "text") return SourceFormat::daily_dialog;
  if (s == "bst" || s == "json") return SourceFormat::bst;
  if (s == "store" || s == "jsonl") return SourceFormat::store;
  throw InputError("unknown dataset format '" + std::string(s) + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return (path.is_relative() && !base.empty() ? base / path : path).lexically_normal();
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& csv, std::span<const T> all, Parse parse, const char* what) {
  const auto trimmed = text::trim_copy(csv);
  if (trimmed == "all") return {all.begin(), all.end()};
  std::vector<T> out;
  for (const auto& part : text::split(trimmed, ",")) {
    const auto item = text::trim_copy(part);
    if (item.empty()) continue;
    const T v = parse(item);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  if (out.empty()) throw InputError(std::string("empty ") + what + " list");
  return out;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw InputError(what + " not found: " + p.string());
}

}  // namespace

std::vector<Direction> parse_direction_list(const std::string& csv) {
  return parse_list<Direction>(csv, kAllDirections, parse_direction, "direction");
}

std::vector<MetricKind> parse_metric_list(const std::string& csv) {
  return parse_list<MetricKind>(csv, kAllMetrics, parse_metric, "metric");
}

std::vector<report::Format> parse_format_list(const std::string& csv) {
  static constexpr std::array<report::Format, 3> kAll = {report::Format::markdown, report::Format::csv,
                                                         report::Format::json};
  return parse_list<report::Format>(csv, kAll, report::parse_format, "format");
}

void RunConfig::validate() const {
  if (slice_size < 1) throw InputError("config: slice_size must be >= 1");
  if (directions.empty()) throw InputError("config: at least one direction must be selected");
  if (metrics.empty()) throw InputError("config: at least one metric must be selected");
  if (formats.empty()) throw InputError("config: at least one report format must be selected");
  for (const auto& d : datasets) require_file(d.path, "dataset");
  if (templates.generation) require_file(*templates.generation, "generation template");
  if (templates.exemplar) require_file(*templates.exemplar, "exemplar template");
  if (templates.judge) require_file(*templates.judge, "judge template");
  if (human_csv) require_file(*human_csv, "human annotation CSV");

  std::set<std::string> ids;
  for (const auto& m : models) {
    if (m.id.empty()) throw InputError("config: every model needs an id");
    if (!ids.insert(m.id).second) throw InputError("config: duplicate model id '" + m.id + "'");
    if (m.profile.kind != BackendKind::chat_generation) {
      throw InputError("config: model '" + m.id + "' must be a chat_generation backend");
    }
  }
  auto need = [&](MetricKind m, const std::optional<BackendProfile>& p, const char* key) {
    if (std::find(metrics.begin(), metrics.end(), m) != metrics.end() && !p) {
      throw InputError(std::string("config: metric '") + std::string(to_string(m)) + "' needs a '" + key +
                       "' backend");
    }
  };
  need(MetricKind::acc_label_match, classifier, "classifier");
  need(MetricKind::judge, judge, "judge");
  need(MetricKind::nll_score, scorer, "scorer");
  need(MetricKind::embed_sim, embedding, "embedding");
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    for (const auto& d : j.value("datasets", json::array())) {
      DatasetConfig dc;
      dc.id = corpus::parse_dataset_id(d.value("id", std::string("custom")));
      dc.path = resolve(base_dir, d.at("path").get<std::string>());
      dc.format = dc.id == corpus::DatasetId::blended_skill_talk ? SourceFormat::bst : SourceFormat::daily_dialog;
      if (d.contains("format")) dc.format = parse_source_format(d.at("format").get<std::string>());
      dc.delimiter = d.value("delimiter", dc.delimiter);
      dc.id_prefix = d.value("name", std::string());
      c.datasets.push_back(std::move(dc));
    }
    c.slice_size = j.value("slice_size", c.slice_size);
    c.few_shot = j.value("few_shot", c.few_shot);
    if (j.contains("directions")) {
      c.directions.clear();
      for (const auto& d : j.at("directions")) c.directions.push_back(parse_direction(d.get<std::string>()));
    }
    for (const auto& m : j.value("models", json::array())) {
      ModelConfig mc;
      mc.profile = BackendProfile::from_json(m, BackendKind::chat_generation, base_dir);
      mc.id = m.value("id", mc.profile.model_name);
      c.models.push_back(std::move(mc));
    }
    auto backend = [&](const char* key, BackendKind kind) -> std::optional<BackendProfile> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return BackendProfile::from_json(j.at(key), kind, base_dir);
    };
    c.judge = backend("judge", BackendKind::judge);
    c.scorer = backend("scorer", BackendKind::logprob_scoring);
    c.classifier = backend("classifier", BackendKind::classifier);
    c.embedding = backend("embedding", BackendKind::embedding);
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& m : j.at("metrics")) {
        const auto k = parse_metric(m.get<std::string>());
        if (std::find(c.metrics.begin(), c.metrics.end(), k) == c.metrics.end()) c.metrics.push_back(k);
      }
    }
    if (j.contains("templates")) {
      const auto& t = j.at("templates");
      if (t.contains("generation")) c.templates.generation = resolve(base_dir, t.at("generation").get<std::string>());
      if (t.contains("exemplar")) c.templates.exemplar = resolve(base_dir, t.at("exemplar").get<std::string>());
      if (t.contains("judge")) c.templates.judge = resolve(base_dir, t.at("judge").get<std::string>());
    }
    c.cache_dir = resolve(base_dir, j.value("cache_dir", c.cache_dir.string()));
    c.use_cache = j.value("use_cache", true);
    c.output_dir = resolve(base_dir, j.value("output_dir", c.output_dir.string()));
    if (j.contains("human_csv") && !j.at("human_csv").is_null()) {
      c.human_csv = resolve(base_dir, j.at("human_csv").get<std::string>());
    }
    if (j.contains("formats")) {
      c.formats.clear();
      for (const auto& f : j.at("formats")) c.formats.push_back(report::parse_format(f.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  require_file(path, "config file");
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return from_json(j, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Stores

json to_json(const StyledResponse& r) {
  return json{{"sample_id", r.sample_id},
              {"dataset_id", r.dataset_id},
              {"model_id", r.model_id},
              {"task", std::string(to_string(r.style.task()))},
              {"direction", std::string(to_string(r.style.direction()))},
              {"response", r.response}};
}

StyledResponse response_from_json(const json& j) {
  try {
    StyledResponse r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.dataset_id = j.value("dataset_id", std::string());
    r.model_id = j.at("model_id").get<std::string>();
    r.style = StyleTask::make(parse_task(j.at("task").get<std::string>()),
                              parse_direction(j.at("direction").get<std::string>()));
    r.response = j.at("response").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed response row: ") + e.what());
  }
}

std::vector<StyledResponse> read_responses(const fs::path& path) {
  require_file(path, "response store");
  std::vector<StyledResponse> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(response_from_json(row));
  return out;
}

Dimension dimension_for(MetricKind m) noexcept {
  return m == MetricKind::acc_label_match ? Dimension::style_strength : Dimension::appropriateness;
}

std::vector<HumanScore> read_human_csv(const fs::path& path) {
  require_file(path, "human annotation CSV");
  const auto rows = csv::parse(io::read_file(path));
  if (rows.empty()) throw InputError(path.string() + ": empty file");
  const std::vector<std::string> expected{"sample_id", "model_id", "task", "direction", "dimension", "score",
                                          "annotator_id"};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[text::trim_copy(rows[0][i])] = i;
  for (const auto& name : expected) {
    if (!col.contains(name)) throw InputError(path.string() + ": missing column '" + name + "'");
  }

  using Key = std::tuple<std::string, std::string, Direction, Dimension>;
  std::map<Key, std::pair<double, std::size_t>> sums;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && text::trim(row[0]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(r + 1);
    if (row.size() < rows[0].size()) throw InputError(where + ": too few columns");
    auto cell = [&](const char* name) { return text::trim_copy(row[col.at(name)]); };
    const Direction d = parse_direction(cell("direction"));
    if (task_of(d) != parse_task(cell("task"))) throw InputError(where + ": direction does not belong to task");
    const std::string dim = cell("dimension");
    Dimension dimension;
    if (dim == "appropriateness") {
      dimension = Dimension::appropriateness;
    } else if (dim == "style_strength") {
      dimension = Dimension::style_strength;
    } else {
      throw InputError(where + ": unknown dimension '" + dim + "'");
    }
    double score = 0.0;
    try {
      std::size_t used = 0;
      const std::string s = cell("score");
      score = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw InputError(where + ": score is not a number");
    }
    if (!(score >= 0.0 && score <= 100.0)) throw InputError(where + ": score outside [0,100]");
    auto& acc = sums[{cell("sample_id"), cell("model_id"), d, dimension}];
    acc.first += score;
    ++acc.second;
  }
  std::vector<HumanScore> out;
  for (const auto& [k, v] : sums) {
    out.push_back(HumanScore{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k),
                             v.first / static_cast<double>(v.second)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

template <class F>
int guarded(std::ostream& log, const char* stage, F&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    log << stage << ": error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DegenerateInput& e) {
    log << stage << ": error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    log << stage << ": failed: " << e.what() << "\n";
    return kExitPartial;
  }
}

std::shared_ptr<ResponseCache> open_cache(const RunConfig& c) { return std::make_shared<ResponseCache>(c.cache_dir); }

std::string read_template(const std::optional<fs::path>& p, std::string_view fallback) {
  return p ? io::read_file(*p) : std::string(fallback);
}

prompting::GenerationTemplate generation_template(const RunConfig& c) {
  return prompting::GenerationTemplate::make(read_template(c.templates.generation, prompting::default_generation_body()),
                                             read_template(c.templates.exemplar, prompting::default_exemplar_format()));
}

prompting::JudgeTemplate judge_template(const RunConfig& c) {
  return prompting::JudgeTemplate::make(read_template(c.templates.judge, prompting::default_judge_body()));
}

std::vector<corpus::DialogueSample> load_samples(const RunConfig& c) {
  const auto path = c.output_dir / files::kSamples;
  if (!fs::is_regular_file(path)) throw InputError("sample store not found: " + path.string() + " (run ingest first)");
  return corpus::read_store(path);
}

bool selected(const RunConfig& c, MetricKind m) {
  return std::find(c.metrics.begin(), c.metrics.end(), m) != c.metrics.end();
}

bool selected(const RunConfig& c, Direction d) {
  return std::find(c.directions.begin(), c.directions.end(), d) != c.directions.end();
}

// Whitespace-only responses are treated like empty ones.
bool blank(std::string_view s) { return text::trim(s).empty(); }

std::string excerpt(std::string_view s, std::size_t n = 160) {
  return s.size() > n ? std::string(s.substr(0, n)) + "..." : std::string(s);
}

void print_backend_stats(std::ostream& log, const std::string& label, const BackendStats& s) {
  log << "  " << label << ": requests=" << s.network_requests << " cache_hits=" << s.cache_hits
      << " retries=" << s.retries << " file_lookups=" << s.file_lookups << "\n";
}

}  // namespace

int cmd_ingest(const RunConfig& config, std::ostream& log) {
  return guarded(log, "ingest", [&] {
    config.validate();
    if (config.datasets.empty()) throw InputError("config: no datasets");
    std::vector<corpus::DialogueSample> all;
    std::vector<json> exemplar_rows;
    std::set<std::string> seen;
    for (const auto& d : config.datasets) {
      corpus::IngestOptions opts{d.id, d.id_prefix};
      corpus::IngestResult res;
      switch (d.format) {
        case SourceFormat::daily_dialog:
          res = corpus::ingest_daily_dialog(io::read_lines(d.path), corpus::DelimiterRule{d.delimiter}, opts);
          break;
        case SourceFormat::bst:
          res = corpus::ingest_bst_text(io::read_file(d.path), opts);
          break;
        case SourceFormat::store:
          res.samples = corpus::read_store(d.path);
          break;
      }
      const auto slice = corpus::slice_eval(res.samples, config.slice_size, config.few_shot);
      for (const auto& s : slice.eval) {
        if (!seen.insert(s.sample_id).second) {
          throw InputError("duplicate sample id '" + s.sample_id + "' across datasets (set a distinct 'name')");
        }
        all.push_back(s);
      }
      for (const auto& e : slice.exemplars) {
        exemplar_rows.push_back({{"dataset_id", std::string(corpus::to_string(d.id))},
                                 {"query", e.query},
                                 {"response", e.response},
                                 {"source_dialogue_index", e.source_dialogue_index}});
      }
      log << "ingest: " << d.path.filename().string() << " (" << corpus::to_string(d.id) << "): ingested "
          << res.samples.size() << ", skipped " << res.skipped << ", eval " << slice.eval.size() << ", exemplars "
          << slice.exemplars.size() << "\n";
    }
    fs::create_directories(config.output_dir);
    io::write_file_atomic(config.output_dir / files::kSamples, corpus::to_store(all));
    io::write_file_atomic(config.output_dir / files::kExemplars, io::to_jsonl(exemplar_rows));
    log << "ingest: wrote " << all.size() << " samples\n";
    return kExitOk;
  });
}

int cmd_generate(const RunConfig& config, std::ostream& log) {
  return guarded(log, "generate", [&] {
    config.validate();
    if (config.models.empty()) throw InputError("config: no models");
    const auto samples = load_samples(config);
    const auto tmpl = generation_template(config);

    std::map<std::string, std::vector<corpus::FewShotExemplar>> exemplars;
    const auto ex_path = config.output_dir / files::kExemplars;
    if (fs::is_regular_file(ex_path)) {
      for (const auto& row : io::read_jsonl(ex_path)) {
        exemplars[row.at("dataset_id").get<std::string>()].push_back(
            corpus::FewShotExemplar{row.at("query").get<std::string>(), row.at("response").get<std::string>(),
                                    row.at("source_dialogue_index").get<std::size_t>()});
      }
    }

    struct Job {
      std::size_t sample;
      Direction direction;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (Direction d : config.directions) jobs.push_back({i, d});
    }

    auto cache = open_cache(config);
    std::vector<StyledResponse> out;
    std::size_t failed = 0;
    for (const auto& model : config.models) {
      BackendClient client(model.profile, cache, config.use_cache);
      struct Outcome {
        std::optional<StyledResponse> row;
        std::string error;
      };
      auto results = parallel_map(jobs.size(), model.profile.max_parallel, [&](std::size_t i) {
        const auto& s = samples[jobs[i].sample];
        const auto style = StyleTask::of(jobs[i].direction);
        const std::string ds(corpus::to_string(s.dataset_id));
        const auto ex_it = exemplars.find(ds);
        const std::span<const corpus::FewShotExemplar> ex =
            ex_it == exemplars.end() ? std::span<const corpus::FewShotExemplar>{} : ex_it->second;
        const auto prompt = prompting::build_generation_prompt(tmpl, style, ex, s.query);
        Outcome o;
        try {
          o.row = StyledResponse{s.sample_id, ds, model.id, style, text::trim_copy(client.generate(prompt))};
        } catch (const InputError&) {
          throw;
        } catch (const Error& e) {
          o.error = e.what();
        }
        return o;
      });
      std::size_t model_failed = 0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].row) {
          out.push_back(std::move(*results[i].row));
        } else {
          if (model_failed < 3) {
            log << "generate: " << model.id << " " << samples[jobs[i].sample].sample_id << "/"
                << to_string(jobs[i].direction) << ": " << excerpt(results[i].error) << "\n";
          }
          ++model_failed;
        }
      }
      failed += model_failed;
      log << "generate: " << model.id << ": " << (results.size() - model_failed) << "/" << results.size()
          << " responses\n";
      print_backend_stats(log, model.id, client.stats());
    }

    std::stable_sort(out.begin(), out.end(), [](const StyledResponse& a, const StyledResponse& b) {
      return std::tie(a.sample_id, a.model_id, a.style) < std::tie(b.sample_id, b.model_id, b.style);
    });
    std::vector<json> rows;
    rows.reserve(out.size());
    for (const auto& r : out) rows.push_back(to_json(r));
    fs::create_directories(config.output_dir);
    io::write_file_atomic(config.output_dir / files::kResponses, io::to_jsonl(rows));
    log << "generate: wrote " << out.size() << " responses, " << failed << " failed\n";
    return failed == 0 ? kExitOk : kExitPartial;
  });
}

namespace {

MetricRecord base_record(const StyledResponse& r, MetricKind m) {
  MetricRecord rec;
  rec.sample_id = r.sample_id;
  rec.dataset_id = r.dataset_id;
  rec.model_id = r.model_id;
  rec.style = r.style;
  rec.metric = m;
  return rec;
}

MetricRecord unscored(MetricRecord rec, const std::string& reason) {
  rec.status = RecordStatus::unscored;
  rec.value = 0.0;
  rec.detail["error"] = excerpt(reason);
  return rec;
}

json scores_meta(const RunConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) models.push_back({{"id", m.id}, {"model_name", m.profile.model_name}});
  json metrics = json::array();
  for (auto m : c.metrics) metrics.push_back(std::string(to_string(m)));
  auto name = [](const std::optional<BackendProfile>& p) { return p ? json(p->model_name) : json(nullptr); };
  return json{{"bleu", bleu::signature()},
              {"models", models},
              {"judge", name(c.judge)},
              {"scorer", name(c.scorer)},
              {"classifier", name(c.classifier)},
              {"embedding", name(c.embedding)},
              {"metrics", metrics},
              {"templates",
               {{"generation", generation_template(c).body.digest()},
                {"exemplar", generation_template(c).exemplar.digest()},
                {"judge", judge_template(c).body.digest()}}}};
}

}  // namespace

int cmd_score(const RunConfig& config, std::ostream& log) {
  return guarded(log, "score", [&] {
    config.validate();
    const auto samples = load_samples(config);
    std::map<std::string, const corpus::DialogueSample*> by_id;
    for (const auto& s : samples) by_id[s.sample_id] = &s;

    std::vector<StyledResponse> responses;
    for (auto& r : read_responses(config.output_dir / files::kResponses)) {
      if (!by_id.contains(r.sample_id)) throw InputError("response for unknown sample '" + r.sample_id + "'");
      if (selected(config, r.style.direction())) responses.push_back(std::move(r));
    }
    if (responses.empty()) throw InputError("no responses to score for the selected directions");

    auto cache = open_cache(config);
    std::vector<MetricRecord> records;
    std::size_t backend_failures = 0;

    if (selected(config, MetricKind::bleu)) {
      for (const auto& r : responses) {
        auto rec = base_record(r, MetricKind::bleu);
        const auto res = bleu::sentence_bleu_detail(r.response, by_id.at(r.sample_id)->reference);
        rec.value = res.score;
        if (res.degenerate) rec.detail["empty_response"] = true;
        records.push_back(std::move(rec));
      }
    }

    if (selected(config, MetricKind::acc_label_match)) {
      BackendClient client(*config.classifier, cache, config.use_cache);
      for (Task task : {Task::formality, Task::sentiment}) {
        std::vector<std::size_t> idx;
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < responses.size(); ++i) {
          if (responses[i].style.task() != task) continue;
          if (blank(responses[i].response)) {
            auto rec = base_record(responses[i], MetricKind::acc_label_match);
            rec.value = 0.0;
            rec.detail["empty_response"] = true;
            records.push_back(std::move(rec));
            continue;
          }
          idx.push_back(i);
          texts.push_back(responses[i].response);
        }
        if (texts.empty()) continue;
        try {
          const auto labels = client.classify(texts, task);
          for (std::size_t k = 0; k < idx.size(); ++k) {
            auto rec = base_record(responses[idx[k]], MetricKind::acc_label_match);
            rec.value = labels[k].label == responses[idx[k]].style.direction() ? 1.0 : 0.0;
            rec.detail["predicted"] = std::string(to_string(labels[k].label));
            rec.detail["confidence"] = labels[k].confidence;
            records.push_back(std::move(rec));
          }
        } catch (const InputError&) {
          throw;
        } catch (const Error& e) {
          ++backend_failures;
          log << "score: classifier (" << to_string(task) << "): " << excerpt(e.what()) << "\n";
          for (auto i : idx) records.push_back(unscored(base_record(responses[i], MetricKind::acc_label_match), e.what()));
        }
      }
      print_backend_stats(log, "classifier", client.stats());
    }

    if (selected(config, MetricKind::embed_sim)) {
      BackendClient client(*config.embedding, cache, config.use_cache);
      std::set<std::string> unique;
      for (const auto& r : responses) {
        if (blank(r.response)) continue;
        unique.insert(r.response);
        unique.insert(by_id.at(r.sample_id)->reference);
      }
      std::map<std::string, std::vector<double>> vectors;
      std::optional<std::string> failure;
      if (!unique.empty()) {
        const std::vector<std::string> texts(unique.begin(), unique.end());
        try {
          const auto vs = client.embed(texts);
          for (std::size_t i = 0; i < texts.size(); ++i) vectors[texts[i]] = vs[i];
        } catch (const InputError&) {
          throw;
        } catch (const Error& e) {
          ++backend_failures;
          failure = e.what();
          log << "score: embedding: " << excerpt(e.what()) << "\n";
        }
      }
      for (const auto& r : responses) {
        auto rec = base_record(r, MetricKind::embed_sim);
        if (blank(r.response)) {
          records.push_back(unscored(std::move(rec), "empty response"));
        } else if (failure) {
          records.push_back(unscored(std::move(rec), *failure));
        } else {
          try {
            rec.value = embedding_similarity(vectors.at(r.response), vectors.at(by_id.at(r.sample_id)->reference));
            records.push_back(std::move(rec));
          } catch (const DegenerateInput& e) {
            rec.status = RecordStatus::degenerate;
            rec.detail["error"] = e.what();
            records.push_back(std::move(rec));
          } catch (const InputError& e) {
            records.push_back(unscored(std::move(rec), e.what()));
          }
        }
      }
      print_backend_stats(log, "embedding", client.stats());
    }

    if (selected(config, MetricKind::judge)) {
      BackendClient client(*config.judge, cache, config.use_cache);
      const auto tmpl = judge_template(config);
      auto judged = parallel_map(responses.size(), config.judge->max_parallel, [&](std::size_t i) {
        const auto& r = responses[i];
        auto rec = base_record(r, MetricKind::judge);
        if (blank(r.response)) {
          rec.value = 0.0;
          rec.detail["empty_response"] = true;
          return std::make_pair(rec, false);
        }
        const auto prompt = prompting::build_judge_prompt(tmpl, by_id.at(r.sample_id)->query, r.response);
        try {
          const auto outcome = judge_with_retry([&](int attempt) { return client.judge(prompt, attempt); });
          rec.detail["attempts"] = outcome.attempts;
          if (!outcome.score) return std::make_pair(unscored(std::move(rec), "no score in judge output"), false);
          rec.value = outcome.score->value;
          if (outcome.score->clamped) rec.detail["clamped"] = true;
          return std::make_pair(rec, false);
        } catch (const InputError&) {
          throw;
        } catch (const Error& e) {
          return std::make_pair(unscored(std::move(rec), e.what()), true);
        }
      });
      std::size_t unparsed = 0;
      for (auto& [rec, backend_failed] : judged) {
        if (backend_failed) ++backend_failures;
        else if (rec.status == RecordStatus::unscored) ++unparsed;
        records.push_back(std::move(rec));
      }
      if (unparsed > 0) log << "score: judge: " << unparsed << " response(s) unscored after retry\n";
      print_backend_stats(log, "judge", client.stats());
    }

    if (selected(config, MetricKind::nll_score)) {
      BackendClient client(*config.scorer, cache, config.use_cache);
      auto scored = parallel_map(responses.size(), config.scorer->max_parallel, [&](std::size_t i) {
        const auto& r = responses[i];
        auto rec = base_record(r, MetricKind::nll_score);
        if (blank(r.response)) return std::make_pair(unscored(std::move(rec), "empty response"), false);
        try {
          const auto b = nll_appropriateness(by_id.at(r.sample_id)->query, r.response,
                                             [&](const std::string& t) { return client.score_logprobs(t); });
          rec.value = b.score;
          rec.detail = {{"mean_nll", b.mean_nll},
                        {"response_nll", b.response_nll},
                        {"response_tokens", b.response_token_count},
                        {"total_nll", b.total_nll}};
          if (b.degenerate) rec.status = RecordStatus::degenerate;
          return std::make_pair(rec, false);
        } catch (const DegenerateInput& e) {
          return std::make_pair(unscored(std::move(rec), e.what()), false);
        } catch (const InputError&) {
          throw;
        } catch (const Error& e) {
          return std::make_pair(unscored(std::move(rec), e.what()), true);
        }
      });
      for (auto& [rec, backend_failed] : scored) {
        if (backend_failed) ++backend_failures;
        records.push_back(std::move(rec));
      }
      print_backend_stats(log, "scorer", client.stats());
    }

    sort_records(records);
    fs::create_directories(config.output_dir);
    io::write_file_atomic(config.output_dir / files::kScores, records_to_jsonl(records));
    io::write_file_atomic(config.output_dir / files::kScoresCsv, records_to_csv(records));
    io::write_file_atomic(config.output_dir / files::kScoresMeta, scores_meta(config).dump(2) + "\n");

    // Coverage summary per metric.
    std::map<MetricKind, std::pair<std::size_t, std::size_t>> cov;
    for (const auto& r : records) {
      auto& c = cov[r.metric];
      c.first += r.status == RecordStatus::ok;
      ++c.second;
    }
    for (const auto& [m, c] : cov) {
      log << "score: " << to_string(m) << ": " << c.first << "/" << c.second << " scored ("
          << text::format_fixed(100.0 * static_cast<double>(c.first) / static_cast<double>(c.second), 1)
          << "% coverage)\n";
    }
    if (backend_failures > 0) log << "score: " << backend_failures << " backend failure(s)\n";
    return backend_failures == 0 ? kExitOk : kExitPartial;
  });
}

int cmd_correlate(const RunConfig& config, std::ostream& log) {
  return guarded(log, "correlate", [&] {
    config.validate();
    if (!config.human_csv) throw InputError("config: human_csv is required for correlate");
    const auto human = read_human_csv(*config.human_csv);
    const auto records = read_records(config.output_dir / files::kScores);

    std::map<std::tuple<std::string, std::string, Direction, Dimension>, double> h;
    for (const auto& s : human) h[{s.sample_id, s.model_id, s.direction, s.dimension}] = s.score;

    std::set<MetricKind> present;
    std::map<std::tuple<std::string, std::string, Direction, MetricKind>, double> m;
    for (const auto& r : records) {
      if (r.status != RecordStatus::ok) continue;
      present.insert(r.metric);
      m[{r.sample_id, r.model_id, r.style.direction(), r.metric}] = r.value;
    }

    report::CorrelationTable table;
    for (Direction d : config.directions) table.scopes.emplace_back(to_string(d));
    table.scopes.emplace_back("overall");

    std::size_t skipped = 0;
    for (auto kind : {stats::CorrKind::pearson, stats::CorrKind::kendall}) {
      for (MetricKind metric : kAllMetrics) {
        if (!present.contains(metric) || !selected(config, metric)) continue;
        const Dimension dim = dimension_for(metric);
        std::vector<stats::CorrelationReport> per_direction;
        for (Direction d : config.directions) {
          std::set<std::string> sample_ids;
          std::set<std::string> model_ids;
          for (const auto& s : human) {
            if (s.direction == d && s.dimension == dim) {
              sample_ids.insert(s.sample_id);
              model_ids.insert(s.model_id);
            }
          }
          if (sample_ids.empty()) continue;
          stats::ScoreMatrix matrix({sample_ids.begin(), sample_ids.end()}, {model_ids.begin(), model_ids.end()});
          for (std::size_t i = 0; i < matrix.samples(); ++i) {
            for (std::size_t j = 0; j < matrix.models(); ++j) {
              const auto& sid = matrix.sample_ids()[i];
              const auto& mid = matrix.model_ids()[j];
              auto hi = h.find({sid, mid, d, dim});
              auto mi = m.find({sid, mid, d, metric});
              if (hi != h.end() && mi != m.end()) matrix.set(i, j, hi->second, mi->second);
            }
          }
          auto rep = stats::sample_level_corr(matrix, kind);
          rep.scope = std::string(to_string(d));
          rep.metric = std::string(display_name(metric));
          skipped += rep.samples_skipped_degenerate;
          per_direction.push_back(rep);
          table.reports.push_back(std::move(rep));
        }
        if (!per_direction.empty()) {
          auto overall = stats::pool_reports(per_direction);
          overall.metric = std::string(display_name(metric));
          overall.kind = kind;
          table.reports.push_back(std::move(overall));
        }
      }
    }
    if (table.reports.empty()) throw InputError("no overlap between human annotations and metric records");
    fs::create_directories(config.output_dir);
    io::write_file_atomic(config.output_dir / files::kCorrelationCsv, report::correlation_csv(table));
    io::write_file_atomic(config.output_dir / files::kCorrelationMd, report::correlation_markdown(table));
    log << "correlate: " << table.reports.size() << " report cells, " << skipped
        << " degenerate sample row(s) skipped\n";
    return kExitOk;
  });
}

int cmd_report(const RunConfig& config, std::ostream& log) {
  return guarded(log, "report", [&] {
    config.validate();
    const auto path = config.output_dir / files::kScores;
    if (!fs::is_regular_file(path)) throw InputError("metric store not found: " + path.string());
    const auto records = read_records(path);
    if (records.empty()) throw InputError("metric store is empty: " + path.string());

    report::GroupingConfig grouping;
    grouping.directions = config.directions;
    grouping.metrics.clear();
    for (MetricKind m : {MetricKind::acc_label_match, MetricKind::judge, MetricKind::nll_score, MetricKind::bleu,
                         MetricKind::embed_sim}) {
      if (selected(config, m)) grouping.metrics.push_back(m);
    }
    const auto rows = report::build_leaderboard(records, grouping);

    report::Metadata meta;
    const auto meta_path = config.output_dir / files::kScoresMeta;
    if (fs::is_regular_file(meta_path)) {
      const json j = json::parse(io::read_file(meta_path));
      meta["bleu"] = j.value("bleu", std::string());
      for (const char* key : {"judge", "scorer", "classifier", "embedding"}) {
        if (j.contains(key) && j[key].is_string()) meta[key] = j[key].get<std::string>();
      }
      std::string models;
      for (const auto& mm : j.value("models", json::array())) {
        if (!models.empty()) models += ",";
        models += mm.value("id", std::string()) + "=" + mm.value("model_name", std::string());
      }
      meta["models"] = models;
      if (j.contains("templates")) {
        const auto& t = j["templates"];
        meta["templates"] = "generation=" + t.value("generation", std::string()) +
                            ",exemplar=" + t.value("exemplar", std::string()) + ",judge=" + t.value("judge", std::string());
      }
    } else {
      meta["bleu"] = bleu::signature();
    }

    fs::create_directories(config.output_dir);
    for (auto f : config.formats) {
      const auto out = config.output_dir / (std::string(files::kLeaderboard) + "." + std::string(report::extension(f)));
      io::write_file_atomic(out, report::emit(rows, grouping, f, meta));
      log << "report: wrote " << out.filename().string() << "\n";
    }
    return kExitOk;
  });
}

int cmd_run(const RunConfig& config, std::ostream& log) {
  int worst = kExitOk;
  auto step = [&](int code) {
    worst = std::max(worst, code);
    return code != kExitInput;
  };
  if (!step(cmd_ingest(config, log))) return kExitInput;
  if (!step(cmd_generate(config, log))) return kExitInput;
  if (!step(cmd_score(config, log))) return kExitInput;
  if (config.human_csv && !step(cmd_correlate(config, log))) return kExitInput;
  if (!step(cmd_report(config, log))) return kExitInput;
  return worst;
}

}  // namespace ctst::pipeline
