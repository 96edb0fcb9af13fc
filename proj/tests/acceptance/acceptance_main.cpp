// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. Tolerances are fixed here and never relaxed at
// run time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acceptance/judge_cases.hpp"
#include "acceptance/leaderboard_fixture.hpp"
#include "ctst/backends.hpp"
#include "ctst/bleu.hpp"
#include "ctst/csv.hpp"
#include "ctst/error.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/judge_score.hpp"
#include "ctst/metrics.hpp"
#include "ctst/mockfarm.hpp"
#include "ctst/pipeline.hpp"
#include "ctst/report.hpp"
#include "ctst/stats.hpp"
#include "ctst/text.hpp"
#include "oracles/bleu_oracle.hpp"
#include "oracles/corr_oracle.hpp"

namespace fs = std::filesystem;
using namespace ctst;
using nlohmann::json;

namespace {

// --- pinned tolerances and budgets ---
constexpr double kNllTol = 1e-9;
constexpr double kLengthTol = 1e-9;
constexpr double kBleuTol = 0.01;
constexpr double kCorrTol = 1e-9;
constexpr double kSampleCorrTol = 1e-12;
constexpr double kKendallMargin = 0.5;
constexpr int kDirectionalSeeds = 100;
constexpr int kDirectionalRequired = 95;
constexpr double kHumanNoiseSd = 5.0;
constexpr double kBudgetNll = 5.0;
constexpr double kBudgetBleu = 10.0;
constexpr double kBudgetDirectional = 30.0;
constexpr double kBudgetPipeline = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

LogprobScorer synth_scorer(double nll, std::size_t token_len) {
  return [=](const std::string& text) {
    return parse_token_scores(mock::synth_logprobs(text, kResponseMarker, nll, token_len), text, LogBase::e);
  };
}

// Random text over an alphabet mixing ASCII and multi-byte code points.
std::string random_text(std::mt19937_64& rng, std::size_t codepoints) {
  static const std::vector<std::string> alphabet{"a", "b", "k", "z", " ", " ", ",", ".", "?", "!", "'",
                                                 "7", "\xC3\xA9", "\xC3\xB1", "\xE4\xB8\xAD", "\xF0\x9F\x98\x80"};
  std::string s;
  for (std::size_t i = 0; i < codepoints; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

// ---------------------------------------------------------------------------

Outcome nll_exactness() {
  Stopwatch sw;
  double worst = 0.0;
  // Fixed analytic cases.
  for (double nll : {0.25, 1.0, 2.0, 3.7, 4.0, 8.5}) {
    for (std::size_t tl : {1u, 2u, 3u, 5u}) {
      const double got = nll_appropriateness("How was the concert?", "It was loud but wonderful.", synth_scorer(nll, tl)).score;
      worst = std::max(worst, std::abs(got - 100.0 / nll));
    }
  }
  // Randomized partition fixtures.
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> nll_dist(0.1, 8.0);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const std::string query = random_text(rng, 1 + rng() % 40);
    std::string response = random_text(rng, 1 + rng() % 200);
    if (text::trim(response).empty()) response += "x";
    const double nll = nll_dist(rng);
    const std::size_t tl = 1 + rng() % 8;
    const std::string combined = nll_combined_text(query, response);
    const auto tokens = parse_token_scores(mock::synth_logprobs(combined, kResponseMarker, nll, tl), combined, LogBase::e);
    validate_token_partition(combined, tokens);
    const std::size_t start = nll_response_start(query);
    const std::size_t resp_cp = text::codepoint_length(response);
    std::size_t inside = 0;
    for (const auto& t : tokens) {
      if (t.start < start && t.end > start) ++violations;
      if (t.start >= start) ++inside;
    }
    if (inside != (resp_cp + tl - 1) / tl) ++violations;
    const auto b = nll_from_tokens(tokens, start);
    worst = std::max(worst, std::abs(b.score - 100.0 / nll));
    worst = std::max(worst, std::abs(b.mean_nll - nll));
  }
  const double secs = sw.seconds();
  const bool pass = worst <= kNllTol && violations == 0 && secs < kBudgetNll;
  return {pass, "max |err| " + fmt_sci(worst) + ", partition violations " + std::to_string(violations) + ", " +
                    fmt(secs) + " s"};
}

Outcome length_fairness() {
  double worst = 0.0;
  std::string scores;
  for (double nll : {0.5, 1.3, 2.0, 4.75}) {
    std::vector<double> got;
    for (std::size_t tokens : {3u, 30u, 300u}) {
      const std::size_t tl = 4;
      std::string response;
      for (std::size_t i = 0; i < tokens * tl; ++i) response += static_cast<char>('a' + i % 26);
      got.push_back(nll_appropriateness("Any plans tonight?", response, synth_scorer(nll, tl)).score);
    }
    for (double g : got) worst = std::max(worst, std::abs(g - got.front()));
    if (nll == 2.0) scores = fmt(got[0], 9) + "/" + fmt(got[1], 9) + "/" + fmt(got[2], 9);
  }
  return {worst <= kLengthTol, "max spread " + fmt_sci(worst) + " (nll=2: " + scores + ")"};
}

Outcome bleu_oracle_match() {
  Stopwatch sw;
  std::mt19937_64 rng(99);
  const std::vector<std::string> vocab{"I", "you", "we", "like", "love", "the", "a", "movie", "book", "dinner",
                                       "really", "not", "very", "good", "bad", "it's", "don't", ",", ".", "!",
                                       "?", "$5", "3.5", "well-known", "\"fine\""};
  auto sentence = [&] {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int k = 0; k < n; ++k) s += (k ? " " : "") + vocab[rng() % vocab.size()];
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::string h = sentence();
    std::string r = sentence();
    // Make about half the pairs share material so higher-order n-grams fire.
    if (i % 2 == 0) h = r.substr(0, r.size() / 2) + " " + h;
    worst = std::max(worst, std::abs(bleu::sentence_bleu(h, r) - oracle::sentence_bleu(h, r)));
  }
  int identity_misses = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string s = sentence();
    identity_misses += bleu::sentence_bleu(s, s) != 100.0;
  }
  const double secs = sw.seconds();
  const bool pass = worst <= kBleuTol && identity_misses == 0 && secs < kBudgetBleu;
  return {pass, "max |diff| " + fmt_sci(worst) + ", identity misses " + std::to_string(identity_misses) + "/50, " +
                    fmt(secs) + " s"};
}

bool same(const std::optional<double>& a, const std::optional<double>& b, double tol, double& worst) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  worst = std::max(worst, std::abs(*a - *b));
  return std::abs(*a - *b) <= tol;
}

Outcome correlation_oracle_match() {
  std::mt19937_64 rng(4242);
  double worst = 0.0;
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng() % 9;
    std::vector<double> x(n), y(n);
    // Small integer ranges force ties; every fifth case is continuous.
    const bool ties = i % 5 != 0;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = ties ? static_cast<double>(rng() % 4) : std::uniform_real_distribution<double>(-5, 5)(rng);
      y[k] = ties ? static_cast<double>(rng() % 4) : std::uniform_real_distribution<double>(-5, 5)(rng);
    }
    mismatches += !same(stats::pearson(x, y), oracle::pearson(x, y), kCorrTol, worst);
    mismatches += !same(stats::kendall_tau(x, y), oracle::kendall_tau_b(x, y), kCorrTol, worst);
  }

  // 50 x 4 matrix with some masked cells, against a plain per-sample loop.
  std::vector<std::string> sids, mids{"m0", "m1", "m2", "m3"};
  for (int s = 0; s < 50; ++s) sids.push_back("s" + std::to_string(s));
  stats::ScoreMatrix matrix(sids, mids);
  std::vector<std::vector<std::optional<std::pair<double, double>>>> cells(50, std::vector<std::optional<std::pair<double, double>>>(4));
  std::uniform_real_distribution<double> u(0, 100);
  for (std::size_t s = 0; s < 50; ++s) {
    for (std::size_t m = 0; m < 4; ++m) {
      if (rng() % 7 == 0) continue;
      const double h = u(rng);
      const double v = s % 10 == 3 ? 42.0 : u(rng);  // constant metric rows are degenerate
      matrix.set(s, m, h, v);
      cells[s][m] = std::make_pair(h, v);
    }
  }
  double sample_worst = 0.0;
  for (auto kind : {stats::CorrKind::pearson, stats::CorrKind::kendall}) {
    const auto rep = stats::sample_level_corr(matrix, kind);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t s = 0; s < 50; ++s) {
      std::vector<double> h, v;
      for (const auto& c : cells[s]) {
        if (c) {
          h.push_back(c->first);
          v.push_back(c->second);
        }
      }
      if (h.size() < 2) continue;
      const auto r = kind == stats::CorrKind::pearson ? oracle::pearson(h, v) : oracle::kendall_tau_b(h, v);
      if (!r) continue;
      sum += *r;
      ++used;
    }
    if (used != rep.samples_used || !rep.value) {
      ++mismatches;
      continue;
    }
    sample_worst = std::max(sample_worst, std::abs(*rep.value - sum / static_cast<double>(used)));
  }
  const bool pass = mismatches == 0 && worst <= kCorrTol && sample_worst <= kSampleCorrTol;
  return {pass, "vector max |diff| " + fmt_sci(worst) + ", matrix max |diff| " + fmt_sci(sample_worst) +
                    ", mismatches " + std::to_string(mismatches)};
}

Outcome directional_sanity() {
  Stopwatch sw;
  constexpr std::size_t kSamples = 200;
  constexpr std::size_t kModels = 4;
  std::vector<std::string> sids, mids;
  for (std::size_t s = 0; s < kSamples; ++s) sids.push_back("s" + std::to_string(s));
  for (std::size_t m = 0; m < kModels; ++m) mids.push_back("m" + std::to_string(m));

  int passed = 0;
  double min_gap = 1e9;
  for (int seed = 0; seed < kDirectionalSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::uniform_real_distribution<double> planted(1.0, 5.0);
    std::normal_distribution<double> noise(0.0, kHumanNoiseSd);
    std::uniform_real_distribution<double> random_metric(0.0, 100.0);
    stats::ScoreMatrix nll_m(sids, mids);
    stats::ScoreMatrix rnd_m(sids, mids);
    for (std::size_t s = 0; s < kSamples; ++s) {
      for (std::size_t m = 0; m < kModels; ++m) {
        const double nll = planted(rng);
        const double human = 100.0 - 20.0 * nll + noise(rng);
        std::string response = "reply";
        const std::size_t extra = rng() % 12;
        for (std::size_t w = 0; w < extra; ++w) response += " word";
        const double score = nll_appropriateness("what now?", response, synth_scorer(nll, 3)).score;
        nll_m.set(s, m, human, score);
        rnd_m.set(s, m, human, random_metric(rng));
      }
    }
    const auto a = stats::sample_level_corr(nll_m, stats::CorrKind::kendall);
    const auto b = stats::sample_level_corr(rnd_m, stats::CorrKind::kendall);
    const double gap = a.value.value_or(-1.0) - b.value.value_or(1.0);
    min_gap = std::min(min_gap, gap);
    passed += gap >= kKendallMargin;
  }
  const double secs = sw.seconds();
  const bool pass = passed >= kDirectionalRequired && secs < kBudgetDirectional;
  return {pass, std::to_string(passed) + "/" + std::to_string(kDirectionalSeeds) + " seeds with gap >= " +
                    fmt(kKendallMargin, 1) + " (min gap " + fmt(min_gap) + "), " + fmt(secs) + " s"};
}

Outcome judge_robustness() {
  int ok = 0;
  int total = 0;
  for (const auto& c : judge_cases::kResolved) {
    ++total;
    try {
      const auto s = extract_judge_score(c.output);
      ok += s.value == c.value && s.clamped == c.clamped && s.from_score_line == c.score_line;
    } catch (const Error&) {
    }
  }
  for (const char* s : judge_cases::kUnparseable) {
    ++total;
    try {
      (void)extract_judge_score(s);
    } catch (const ParseError&) {
      ++ok;
    }
  }
  // Retry path: an unparseable first answer triggers exactly one re-query.
  ++total;
  std::vector<int> asked;
  const auto retried = judge_with_retry([&](int attempt) {
    asked.push_back(attempt);
    return std::string(attempt == 0 ? "No idea." : "Score: 61");
  });
  ok += retried.score && retried.score->value == 61 && asked == std::vector<int>{0, 1};
  ++total;
  asked.clear();
  const auto failed = judge_with_retry([&](int attempt) {
    asked.push_back(attempt);
    return std::string("N/A");
  });
  ok += !failed.score && failed.attempts == 2 && asked == std::vector<int>{0, 1};
  return {ok == total && total >= 20, std::to_string(ok) + "/" + std::to_string(total) + " cases conform"};
}

// --- end-to-end determinism ---

json backend_json(const mock::MockServer& s, const std::string& model) {
  return json{{"base_url", s.base_url()}, {"model", model}, {"rate_limit", 5000}, {"max_parallel", 4},
              {"retry", {{"base_delay_ms", 1}, {"timeout_ms", 10000}}}};
}

mock::Script determinism_script() {
  mock::Script script;
  // A transient failure at the head of two endpoints exercises the retry path.
  script.endpoints["/v1/chat/completions"].sequence = {{503, "warming up", 0}};
  script.endpoints["/v1/score"].sequence = {{500, "busy", 0}, {429, "slow down", 0}};
  return script;
}

json pipeline_config(const mock::MockServer& server, const fs::path& root) {
  json models = json::array();
  for (const char* m : {"alpha-7b", "beta-13b", "gamma-6b"}) {
    auto j = backend_json(server, std::string("gen-") + m);
    j["id"] = m;
    models.push_back(j);
  }
  return json{
      {"datasets",
       json::array({{{"id", "daily_dialog"}, {"path", (fs::path(CTST_FIXTURES_DIR) / "daily_dialog_sample.txt").string()}},
                    {{"id", "blended_skill_talk"},
                     {"format", "bst"},
                     {"path", (fs::path(CTST_FIXTURES_DIR) / "bst_sample.json").string()}}})},
      {"slice_size", 4},
      {"few_shot", 5},
      {"models", models},
      {"judge", backend_json(server, "mock-judge")},
      {"scorer", backend_json(server, "mock-scorer")},
      {"classifier", backend_json(server, "mock-classifier")},
      {"embedding", backend_json(server, "mock-embedder")},
      {"metrics", {"acc", "judge", "nll", "bleu", "embed"}},
      {"cache_dir", (root / "cache").string()},
      {"output_dir", (root / "out").string()},
      {"human_csv", (root / "human.csv").string()}};
}

// Deterministic annotations for every (sample, model, direction, dimension), two annotators each.
std::string human_csv(const std::vector<corpus::DialogueSample>& samples) {
  std::string out = csv::format_row({"sample_id", "model_id", "task", "direction", "dimension", "score", "annotator_id"});
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  auto next = [&] {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>((state >> 33) % 101);
  };
  for (const auto& s : samples) {
    for (const char* m : {"alpha-7b", "beta-13b", "gamma-6b"}) {
      for (Direction d : kAllDirections) {
        for (const char* dim : {"appropriateness", "style_strength"}) {
          for (const char* ann : {"a1", "a2"}) {
            out += csv::format_row({s.sample_id, m, std::string(to_string(task_of(d))), std::string(to_string(d)), dim,
                                    json(next()).dump(), ann});
          }
        }
      }
    }
  }
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files[e.path().filename().string()] = io::read_file(e.path());
  }
  return files;
}

struct TempRoot {
  TempRoot() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("ctst-acceptance-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempRoot() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path path;
};

Outcome end_to_end_determinism() {
  Stopwatch sw;
  TempRoot tmp;
  std::vector<std::map<std::string, std::string>> outputs;
  std::size_t cold_requests = 0;
  std::size_t duplicate_bodies = 0;
  std::size_t warm_requests = 0;
  std::string failure;

  for (int run = 0; run < 3; ++run) {
    const fs::path root = tmp.path / ("run" + std::to_string(run));
    fs::create_directories(root);
    mock::MockServer server(determinism_script());
    server.start();
    const json cfg_json = pipeline_config(server, root);

    // Annotations are keyed on sample ids, which ingest assigns deterministically.
    {
      auto probe = cfg_json;
      probe.erase("human_csv");
      probe["output_dir"] = (root / "probe").string();
      std::ostringstream log;
      if (pipeline::cmd_ingest(pipeline::RunConfig::from_json(probe, root), log) != pipeline::kExitOk) {
        return {false, "ingest failed: " + log.str()};
      }
      io::write_file_atomic(root / "human.csv", human_csv(corpus::read_store(root / "probe" / pipeline::files::kSamples)));
    }

    const auto config = pipeline::RunConfig::from_json(cfg_json, root);
    std::ostringstream log;
    const int code = pipeline::cmd_run(config, log);
    if (code != pipeline::kExitOk) return {false, "cold run " + std::to_string(run) + " exited " + std::to_string(code) + ": " + log.str()};
    outputs.push_back(snapshot(root / "out"));

    const auto cold_log = server.request_log();
    if (run == 0) cold_requests = cold_log.size();
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : cold_log) {
      if (r.status == 200 && !seen.insert({r.path, r.body}).second) ++duplicate_bodies;
    }

    if (run == 2) {
      // Warm rerun against the same cache and server: every call must be a cache hit.
      const std::size_t before = server.request_count();
      std::ostringstream warm_log;
      const int warm = pipeline::cmd_run(config, warm_log);
      warm_requests = server.request_count() - before;
      if (warm != pipeline::kExitOk) return {false, "warm run exited " + std::to_string(warm)};
      if (snapshot(root / "out") != outputs.back()) failure = "warm rerun changed outputs";
    }
  }

  std::size_t differing = 0;
  for (const auto& [name, content] : outputs[0]) {
    for (std::size_t i = 1; i < outputs.size(); ++i) {
      auto it = outputs[i].find(name);
      if (it == outputs[i].end() || it->second != content) ++differing;
    }
  }
  const std::size_t file_count = outputs[0].size();
  const double secs = sw.seconds();
  const bool pass = failure.empty() && differing == 0 && file_count >= 10 && warm_requests == 0 &&
                    duplicate_bodies == 0 && secs < kBudgetPipeline;
  return {pass, std::to_string(file_count) + " files x 3 cold runs, " + std::to_string(differing) +
                    " differing; cold requests " + std::to_string(cold_requests) + ", duplicate bodies " +
                    std::to_string(duplicate_bodies) + ", warm requests " + std::to_string(warm_requests) +
                    (failure.empty() ? "" : ", " + failure) + ", " + fmt(secs) + " s"};
}

Outcome leaderboard_shape() {
  const auto rows = report::build_leaderboard(fixture::leaderboard_records(), fixture::leaderboard_grouping());
  const auto grouping = fixture::leaderboard_grouping();
  const auto meta = fixture::leaderboard_metadata();
  int mismatched = 0;
  std::string missing;
  for (auto [f, name] : {std::pair{report::Format::markdown, "leaderboard_3model.md"},
                         std::pair{report::Format::csv, "leaderboard_3model.csv"},
                         std::pair{report::Format::json, "leaderboard_3model.json"}}) {
    const fs::path golden = fs::path(CTST_GOLDEN_DIR) / name;
    if (!fs::exists(golden)) {
      missing += std::string(" ") + name;
      ++mismatched;
      continue;
    }
    mismatched += report::emit(rows, grouping, f, meta) != io::read_file(golden);
  }

  // Column structure: per task, ACC% / Judge / NLL for each direction, plus coverage.
  const std::string md = report::emit(rows, grouping, report::Format::markdown, meta);
  const std::string header = md.substr(0, md.find('\n'));
  std::vector<std::string> cols;
  for (auto& c : text::split(header, "|")) {
    auto t = text::trim_copy(c);
    if (!t.empty()) cols.push_back(t);
  }
  std::vector<std::string> expected_cols{"Dataset", "Model"};
  for (const char* style : {"Formal", "Informal", "Positive", "Negative"}) {
    for (const char* metric : {"ACC%", "Judge", "NLL"}) expected_cols.push_back(std::string(style) + " " + metric);
  }
  for (const char* metric : {"ACC%", "Judge", "NLL"}) expected_cols.push_back(std::string(metric) + " cov%");
  const bool columns_ok = cols == expected_cols;

  // One-decimal rendering in every numeric cell.
  const std::regex one_decimal(R"(^(\*\*)?-?\d+\.\d(\*\*)?$|^-$)");
  int bad_cells = 0;
  std::istringstream lines(md);
  std::string line;
  int row_no = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("|", 0) != 0) continue;
    if (++row_no <= 2) continue;  // header and separator
    const auto cells = text::split(line, "|");
    for (std::size_t i = 3; i + 1 < cells.size(); ++i) {
      bad_cells += !std::regex_match(text::trim_copy(cells[i]), one_decimal);
    }
  }
  const json j = json::parse(report::emit(rows, grouping, report::Format::json, meta));
  bool coverage_ok = !j.at("rows").empty();
  for (const auto& r : j.at("rows")) coverage_ok = coverage_ok && r.contains("coverage");
  const bool pass = mismatched == 0 && columns_ok && bad_cells == 0 && coverage_ok && row_no == 5;
  return {pass, std::to_string(3 - mismatched) + "/3 golden files match" +
                    (missing.empty() ? "" : " (missing:" + missing + ")") + ", columns " +
                    (columns_ok ? "ok" : "WRONG") + ", non-1dp cells " + std::to_string(bad_cells) + ", coverage " +
                    (coverage_ok ? "present" : "MISSING")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"nll exactness", nll_exactness},
      {"length fairness", length_fairness},
      {"bleu oracle equivalence", bleu_oracle_match},
      {"correlation oracle equivalence", correlation_oracle_match},
      {"directional sanity", directional_sanity},
      {"judge extraction robustness", judge_robustness},
      {"end-to-end determinism", end_to_end_determinism},
      {"leaderboard shape", leaderboard_shape},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed;
}
