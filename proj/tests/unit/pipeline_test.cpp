#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ctst/csv.hpp"
#include "ctst/error.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/metrics.hpp"
#include "ctst/mockfarm.hpp"
#include "ctst/pipeline.hpp"
#include "unit/test_util.hpp"

using namespace ctst;
using namespace ctst::pipeline;
using nlohmann::json;

namespace {

json backend(const mock::MockServer& s, const std::string& model) {
  return json{{"base_url", s.base_url()}, {"model", model}, {"rate_limit", 10000}, {"max_parallel", 4},
              {"retry", {{"base_delay_ms", 1}, {"timeout_ms", 5000}}}};
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override { server.start(); }

  json base_config(std::size_t models = 1) const {
    json ms = json::array();
    for (std::size_t i = 0; i < models; ++i) {
      auto m = backend(server, "gen-" + std::to_string(i));
      m["id"] = "model-" + std::to_string(i);
      ms.push_back(m);
    }
    return json{{"datasets", json::array({{{"id", "daily_dialog"}, {"path", testutil::fixture("daily_dialog_sample.txt").string()}}})},
                {"slice_size", 3},
                {"few_shot", 5},
                {"models", ms},
                {"judge", backend(server, "mock-judge")},
                {"scorer", backend(server, "scorer")},
                {"classifier", backend(server, "cls")},
                {"embedding", backend(server, "emb")},
                {"metrics", {"acc", "judge", "nll", "bleu", "embed"}},
                {"cache_dir", "cache"},
                {"output_dir", "out"}};
  }

  RunConfig config(const json& j) const { return RunConfig::from_json(j, dir.path()); }

  std::string out(const std::string& name) const { return io::read_file(dir.path() / "out" / name); }

  int run(int (*stage)(const RunConfig&, std::ostream&), const RunConfig& c) {
    std::ostringstream log;
    const int code = stage(c, log);
    last_log = log.str();
    return code;
  }

  testutil::TempDir dir;
  mock::MockServer server{mock::Script{}};
  std::string last_log;
};

}  // namespace

TEST_F(PipelineTest, IngestWritesSliceAndExemplars) {
  const auto c = config(base_config());
  ASSERT_EQ(run(cmd_ingest, c), kExitOk) << last_log;
  EXPECT_EQ(io::parse_jsonl(out(files::kSamples), "s").size(), 3u);
  const auto ex = io::parse_jsonl(out(files::kExemplars), "e");
  ASSERT_EQ(ex.size(), 5u);
  EXPECT_EQ(ex.back()["source_dialogue_index"], 12);
  const auto first = out(files::kSamples);
  ASSERT_EQ(run(cmd_ingest, c), kExitOk);
  EXPECT_EQ(out(files::kSamples), first);
}

TEST_F(PipelineTest, InputErrorsExitTwo) {
  auto j = base_config();
  j["datasets"][0]["path"] = "does/not/exist.txt";
  EXPECT_EQ(run(cmd_ingest, config(j)), kExitInput);
  EXPECT_NE(last_log.find("exist.txt"), std::string::npos);

  auto big = base_config();
  big["slice_size"] = 12;  // overlaps the 5 exemplars
  EXPECT_EQ(run(cmd_ingest, config(big)), kExitInput);

  EXPECT_EQ(run(cmd_generate, config(base_config())), kExitInput);  // no sample store yet
  EXPECT_EQ(run(cmd_report, config(base_config())), kExitInput);

  auto no_judge = base_config();
  no_judge.erase("judge");
  EXPECT_THROW(config(no_judge).validate(), InputError);
}

TEST_F(PipelineTest, GenerateCoversEveryDirectionAndResumesFromCache) {
  const auto c = config(base_config());
  ASSERT_EQ(run(cmd_ingest, c), kExitOk);
  ASSERT_EQ(run(cmd_generate, c), kExitOk) << last_log;
  const auto responses = read_responses(dir.path() / "out" / files::kResponses);
  ASSERT_EQ(responses.size(), 12u);
  const auto first = out(files::kResponses);
  const auto requests = server.request_count("/v1/chat/completions");
  EXPECT_EQ(requests, 12u);

  ASSERT_EQ(run(cmd_generate, c), kExitOk);
  EXPECT_EQ(server.request_count("/v1/chat/completions"), requests);
  EXPECT_EQ(out(files::kResponses), first);

  auto filtered = base_config();
  filtered["directions"] = {"formal"};
  ASSERT_EQ(run(cmd_generate, config(filtered)), kExitOk);
  const auto only = read_responses(dir.path() / "out" / files::kResponses);
  ASSERT_EQ(only.size(), 3u);
  for (const auto& r : only) EXPECT_EQ(r.style.direction(), Direction::formal);
}

TEST_F(PipelineTest, ScoreNllOnlyIsReproducible) {
  auto j = base_config();
  j["metrics"] = {"nll"};
  const auto c = config(j);
  ASSERT_EQ(run(cmd_ingest, c), kExitOk);
  ASSERT_EQ(run(cmd_generate, c), kExitOk);
  ASSERT_EQ(run(cmd_score, c), kExitOk) << last_log;
  const auto records = read_records(dir.path() / "out" / files::kScores);
  ASSERT_EQ(records.size(), 12u);
  for (const auto& r : records) {
    EXPECT_EQ(r.metric, MetricKind::nll_score);
    EXPECT_EQ(r.status, RecordStatus::ok);
    EXPECT_GE(r.value, 25.0);
    EXPECT_LE(r.value, 100.0);
  }
  const auto first = out(files::kScores);
  const auto scorer_requests = server.request_count("/v1/score");
  j["use_cache"] = false;
  ASSERT_EQ(run(cmd_score, config(j)), kExitOk);
  EXPECT_EQ(out(files::kScores), first);
  EXPECT_EQ(server.request_count("/v1/score"), 2 * scorer_requests);
}

TEST_F(PipelineTest, AllMetricsAndAllFormats) {
  const auto c = config(base_config(2));
  ASSERT_EQ(run(cmd_ingest, c), kExitOk);
  ASSERT_EQ(run(cmd_generate, c), kExitOk);
  ASSERT_EQ(run(cmd_score, c), kExitOk) << last_log;
  const auto records = read_records(dir.path() / "out" / files::kScores);
  EXPECT_EQ(records.size(), 2u * 12u * 5u);
  ASSERT_EQ(run(cmd_report, c), kExitOk) << last_log;
  const auto md = out("leaderboard.md");
  EXPECT_NE(md.find("| Dataset | Model |"), std::string::npos);
  EXPECT_NE(md.find("model-1"), std::string::npos);
  EXPECT_NE(md.find("- bleu: `"), std::string::npos);
  EXPECT_TRUE(json::parse(out("leaderboard.json")).contains("rows"));
  EXPECT_FALSE(out("leaderboard.csv").empty());
}

TEST_F(PipelineTest, ScoreHandlesBlankResponses) {
  auto j = base_config();
  const auto c = config(j);
  ASSERT_EQ(run(cmd_ingest, c), kExitOk);
  const auto samples = corpus::read_store(dir.path() / "out" / files::kSamples);
  StyledResponse blank{samples[0].sample_id, "daily_dialog", "model-0", StyleTask::of(Direction::positive), "   "};
  io::write_file_atomic(dir.path() / "out" / files::kResponses, io::to_jsonl({to_json(blank)}));
  ASSERT_EQ(run(cmd_score, c), kExitOk) << last_log;
  std::map<MetricKind, MetricRecord> by;
  for (auto& r : read_records(dir.path() / "out" / files::kScores)) by[r.metric] = r;
  EXPECT_EQ(by.at(MetricKind::bleu).value, 0.0);
  EXPECT_EQ(by.at(MetricKind::acc_label_match).value, 0.0);
  EXPECT_EQ(by.at(MetricKind::judge).value, 0.0);
  EXPECT_EQ(by.at(MetricKind::nll_score).status, RecordStatus::unscored);
  EXPECT_EQ(by.at(MetricKind::embed_sim).status, RecordStatus::unscored);
}

TEST_F(PipelineTest, BackendFailureIsPartial) {
  mock::Script broken;
  broken.endpoints["/v1/score"].fallback = mock::CannedResponse{503, "down", 0};
  mock::MockServer bad(broken);
  bad.start();
  auto j = base_config();
  j["metrics"] = {"nll"};
  j["scorer"] = backend(bad, "scorer");
  j["scorer"]["retry"]["max_retries"] = 1;
  const auto c = config(j);
  ASSERT_EQ(run(cmd_ingest, c), kExitOk);
  ASSERT_EQ(run(cmd_generate, c), kExitOk);
  EXPECT_EQ(run(cmd_score, c), kExitPartial);
  const auto records = read_records(dir.path() / "out" / files::kScores);
  ASSERT_EQ(records.size(), 12u);
  for (const auto& r : records) EXPECT_EQ(r.status, RecordStatus::unscored);
}

namespace {

// Human CSV derived from the metric store; `transform` maps a metric value to a human score.
std::string human_from_scores(const std::vector<MetricRecord>& records, MetricKind metric,
                              const std::function<std::optional<double>(const MetricRecord&)>& transform) {
  std::string out = csv::format_row({"sample_id", "model_id", "task", "direction", "dimension", "score", "annotator_id"});
  for (const auto& r : records) {
    if (r.metric != metric || r.status != RecordStatus::ok) continue;
    const auto v = transform(r);
    if (!v) continue;
    // Two annotators straddling the target; their mean is the target.
    for (int a : {0, 1}) {
      const double s = std::clamp(*v + (a == 0 ? -0.5 : 0.5), 0.0, 100.0);
      out += csv::format_row({r.sample_id, r.model_id, std::string(to_string(r.style.task())),
                              std::string(to_string(r.style.direction())), "appropriateness", json(s).dump(),
                              "ann-" + std::to_string(a)});
    }
  }
  return out;
}

std::map<std::string, double> overall_values(const std::string& csv_text, const std::string& metric) {
  std::map<std::string, double> out;
  const auto rows = csv::parse(csv_text);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() >= 4 && rows[i][1] == metric && rows[i][2] == "overall" && !rows[i][3].empty()) {
      out[rows[i][0]] = std::stod(rows[i][3]);
    }
  }
  return out;
}

}  // namespace

TEST_F(PipelineTest, CorrelateSelfAgreementIsPerfect) {
  auto j = base_config(4);
  j["metrics"] = {"nll"};
  j["slice_size"] = 6;
  j["directions"] = {"formal", "informal"};
  ASSERT_EQ(run(cmd_ingest, config(j)), kExitOk);
  ASSERT_EQ(run(cmd_generate, config(j)), kExitOk);
  ASSERT_EQ(run(cmd_score, config(j)), kExitOk);
  const auto records = read_records(dir.path() / "out" / files::kScores);

  testutil::write(dir / "human.csv", human_from_scores(records, MetricKind::nll_score,
                                                        [](const MetricRecord& r) { return std::min(r.value, 99.5); }));
  j["human_csv"] = "human.csv";
  ASSERT_EQ(run(cmd_correlate, config(j)), kExitOk) << last_log;
  auto vals = overall_values(out(files::kCorrelationCsv), "NLL");
  ASSERT_EQ(vals.size(), 2u);
  for (const auto& [method, v] : vals) EXPECT_NEAR(v, 1.0, 1e-9) << method;
  EXPECT_NE(out(files::kCorrelationMd).find("| Method | Metric |"), std::string::npos);

  // Masking cells: drop one model's annotations for half the samples; still perfect on what remains.
  std::size_t n = 0;
  testutil::write(dir / "human.csv",
                  human_from_scores(records, MetricKind::nll_score, [&](const MetricRecord& r) -> std::optional<double> {
                    if (r.model_id == "model-0" && (n++ % 2 == 0)) return std::nullopt;
                    return std::min(r.value, 99.5);
                  }));
  ASSERT_EQ(run(cmd_correlate, config(j)), kExitOk) << last_log;
  vals = overall_values(out(files::kCorrelationCsv), "NLL");
  for (const auto& [method, v] : vals) EXPECT_NEAR(v, 1.0, 1e-9) << method;

  // Anti-correlated humans.
  testutil::write(dir / "human.csv", human_from_scores(records, MetricKind::nll_score,
                                                        [](const MetricRecord& r) { return 100.0 - r.value; }));
  ASSERT_EQ(run(cmd_correlate, config(j)), kExitOk);
  vals = overall_values(out(files::kCorrelationCsv), "NLL");
  for (const auto& [method, v] : vals) EXPECT_NEAR(v, -1.0, 1e-9) << method;
}

TEST_F(PipelineTest, RunChainsStages) {
  auto j = base_config(2);
  j["metrics"] = {"bleu", "judge"};
  std::ostringstream log;
  ASSERT_EQ(cmd_run(config(j), log), kExitOk) << log.str();
  for (const char* f : {files::kSamples, files::kResponses, files::kScores, files::kScoresCsv, files::kScoresMeta,
                        "leaderboard.md", "leaderboard.csv", "leaderboard.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / f)) << f;
  }
}

TEST(PipelineLists, ParseSelections) {
  EXPECT_EQ(parse_direction_list("all").size(), 4u);
  EXPECT_EQ(parse_direction_list("formal, negative"), (std::vector<Direction>{Direction::formal, Direction::negative}));
  EXPECT_EQ(parse_metric_list("acc,nll"),
            (std::vector<MetricKind>{MetricKind::acc_label_match, MetricKind::nll_score}));
  EXPECT_EQ(parse_format_list("md").size(), 1u);
  EXPECT_THROW(parse_direction_list("sideways"), InputError);
  EXPECT_THROW(parse_metric_list(""), InputError);
}
