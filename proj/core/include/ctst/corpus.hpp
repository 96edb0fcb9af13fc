#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctst::corpus {

enum class DatasetId { daily_dialog, blended_skill_talk, custom };

std::string_view to_string(DatasetId id) noexcept;
DatasetId parse_dataset_id(std::string_view s);

// One single-turn context: the first speaker turn and the reply to it.
// query and reference are trimmed and never empty.
struct DialogueSample {
  std::string sample_id;
  DatasetId dataset_id = DatasetId::custom;
  std::string query;
  std::string reference;

  friend bool operator==(const DialogueSample&, const DialogueSample&) = default;
};

// Style-free demonstration pair for few-shot prompting. source_dialogue_index is
// the 0-based position of the sample in the ingested corpus.
struct FewShotExemplar {
  std::string query;
  std::string response;
  std::size_t source_dialogue_index = 0;

  friend bool operator==(const FewShotExemplar&, const FewShotExemplar&) = default;
};

struct DelimiterRule {
  std::string token = "__eou__";
};

struct IngestResult {
  std::vector<DialogueSample> samples;
  std::size_t skipped = 0;  // dialogues with fewer than two non-empty turns
};

// Prefix used in sample ids ("dd-000001"); empty selects the dataset default.
struct IngestOptions {
  DatasetId dataset_id = DatasetId::daily_dialog;
  std::string id_prefix;
};

// One dialogue per line, turns separated by the delimiter token.
IngestResult ingest_daily_dialog(std::span<const std::string> raw_lines, const DelimiterRule& rule,
                                 IngestOptions options = {});

// Records are objects carrying either "turns": [string | {"text": string}, ...]
// or the ParlAI-style "dialog": [[speaker, text], ...].
IngestResult ingest_bst(const nlohmann::json& records,
                        IngestOptions options = {DatasetId::blended_skill_talk, {}});

// Accepts a JSON array of records or JSONL.
IngestResult ingest_bst_text(std::string_view content,
                             IngestOptions options = {DatasetId::blended_skill_talk, {}});

struct EvalSlice {
  std::vector<DialogueSample> eval;
  std::vector<FewShotExemplar> exemplars;
};

inline constexpr std::size_t kDefaultFewShot = 5;

// First n samples in corpus order plus exemplars from the last `few_shot`
// samples. The two index ranges must be disjoint.
EvalSlice slice_eval(std::span<const DialogueSample> samples, std::size_t n,
                     std::size_t few_shot = kDefaultFewShot);

nlohmann::json to_json(const DialogueSample& s);
DialogueSample sample_from_json(const nlohmann::json& j);

// Normalized JSONL sample store.
std::string to_store(std::span<const DialogueSample> samples);
std::vector<DialogueSample> parse_store(std::string_view content, const std::string& source_name);
std::vector<DialogueSample> read_store(const std::filesystem::path& path);

}  // namespace ctst::corpus
