#include "ctst/corpus.hpp"

#include <cstdio>

#include "ctst/error.hpp"
#include "ctst/jsonl.hpp"
#include "ctst/text.hpp"

namespace ctst::corpus {

using nlohmann::json;

std::string_view to_string(DatasetId id) noexcept {
  switch (id) {
    case DatasetId::daily_dialog: return "daily_dialog";
    case DatasetId::blended_skill_talk: return "blended_skill_talk";
    case DatasetId::custom: return "custom";
  }
  return "custom";
}

DatasetId parse_dataset_id(std::string_view s) {
  if (s == "daily_dialog") return DatasetId::daily_dialog;
  if (s == "blended_skill_talk") return DatasetId::blended_skill_talk;
  if (s == "custom") return DatasetId::custom;
  throw InputError("unknown dataset id '" + std::string(s) + "'");
}

namespace {

std::string default_prefix(DatasetId id) {
  switch (id) {
    case DatasetId::daily_dialog: return "dd";
    case DatasetId::blended_skill_talk: return "bst";
    case DatasetId::custom: return "custom";
  }
  return "custom";
}

std::string make_id(const std::string& prefix, std::size_t one_based) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", one_based);
  return prefix + "-" + buf;
}

// Shared first-two-turns rule. Returns false when the dialogue is skipped.
bool emit_sample(const std::vector<std::string>& turns, const IngestOptions& opt,
                 const std::string& prefix, std::size_t one_based, IngestResult& out) {
  std::vector<std::string> kept;
  for (const auto& t : turns) {
    auto trimmed = text::trim(t);
    if (!trimmed.empty()) kept.emplace_back(trimmed);
    if (kept.size() == 2) break;
  }
  if (kept.size() < 2) {
    ++out.skipped;
    return false;
  }
  out.samples.push_back(
      DialogueSample{make_id(prefix, one_based), opt.dataset_id, std::move(kept[0]), std::move(kept[1])});
  return true;
}

}  // namespace

IngestResult ingest_daily_dialog(std::span<const std::string> raw_lines, const DelimiterRule& rule,
                                 IngestOptions options) {
  if (raw_lines.empty()) throw InputError("empty corpus input");
  if (rule.token.empty()) throw InputError("turn delimiter must not be empty");
  const std::string prefix = options.id_prefix.empty() ? default_prefix(options.dataset_id) : options.id_prefix;

  IngestResult out;
  for (std::size_t i = 0; i < raw_lines.size(); ++i) {
    const std::string& line = raw_lines[i];
    if (auto bad = text::find_invalid_utf8(line)) {
      throw InputError("line " + std::to_string(i + 1) + ": invalid UTF-8 at byte " + std::to_string(*bad));
    }
    emit_sample(text::split(line, rule.token), options, prefix, i + 1, out);
  }
  return out;
}

namespace {

std::vector<std::string> turns_of(const json& record, std::size_t index) {
  auto fail = [&](const std::string& why) {
    return InputError("record " + std::to_string(index) + ": " + why);
  };
  if (!record.is_object()) throw fail("not an object");
  std::vector<std::string> turns;
  if (auto it = record.find("turns"); it != record.end()) {
    if (!it->is_array()) throw fail("'turns' is not a list");
    for (const auto& t : *it) {
      if (t.is_string()) {
        turns.push_back(t.get<std::string>());
      } else if (t.is_object() && t.contains("text") && t["text"].is_string()) {
        turns.push_back(t["text"].get<std::string>());
      } else {
        throw fail("unsupported turn entry");
      }
    }
    return turns;
  }
  if (auto it = record.find("dialog"); it != record.end()) {
    if (!it->is_array()) throw fail("'dialog' is not a list");
    for (const auto& t : *it) {
      if (t.is_array() && t.size() == 2 && t[1].is_string()) {
        turns.push_back(t[1].get<std::string>());
      } else if (t.is_string()) {
        turns.push_back(t.get<std::string>());
      } else {
        throw fail("unsupported dialog entry");
      }
    }
    return turns;
  }
  throw fail("missing turn list");
}

}  // namespace

IngestResult ingest_bst(const json& records, IngestOptions options) {
  if (!records.is_array()) throw InputError("BST input must be a list of records");
  if (records.empty()) throw InputError("empty corpus input");
  const std::string prefix = options.id_prefix.empty() ? default_prefix(options.dataset_id) : options.id_prefix;
  IngestResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto turns = turns_of(records[i], i);
    for (const auto& t : turns) {
      if (text::find_invalid_utf8(t)) {
        throw InputError("record " + std::to_string(i) + ": invalid UTF-8");
      }
    }
    emit_sample(turns, options, prefix, i + 1, out);
  }
  return out;
}

IngestResult ingest_bst_text(std::string_view content, IngestOptions options) {
  if (auto bad = text::find_invalid_utf8(content)) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < *bad; ++i) line += content[i] == '\n';
    throw InputError("line " + std::to_string(line) + ": invalid UTF-8");
  }
  auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw InputError("empty corpus input");
  json records;
  if (content[first] == '[') {
    try {
      records = json::parse(content);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("invalid BST JSON: ") + e.what());
    }
  } else {
    records = json::array();
    for (auto& r : io::parse_jsonl(content, "bst")) records.push_back(std::move(r));
  }
  return ingest_bst(records, std::move(options));
}

EvalSlice slice_eval(std::span<const DialogueSample> samples, std::size_t n, std::size_t few_shot) {
  if (n == 0) throw InputError("eval slice size must be a positive integer");
  if (n > samples.size()) {
    throw InputError("eval slice of " + std::to_string(n) + " requested but only " +
                     std::to_string(samples.size()) + " samples are available");
  }
  const std::size_t shots = std::min(few_shot, samples.size());
  const std::size_t first_shot = samples.size() - shots;
  if (shots > 0 && first_shot < n) {
    throw InputError("few-shot exemplars (samples " + std::to_string(first_shot + 1) + "-" +
                     std::to_string(samples.size()) + ") overlap the eval slice (samples 1-" + std::to_string(n) +
                     "); need at least " + std::to_string(n + shots) + " samples or a smaller slice");
  }
  EvalSlice slice;
  slice.eval.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = first_shot; i < samples.size(); ++i) {
    slice.exemplars.push_back(FewShotExemplar{samples[i].query, samples[i].reference, i});
  }
  return slice;
}

json to_json(const DialogueSample& s) {
  return json{{"sample_id", s.sample_id},
              {"dataset_id", std::string(to_string(s.dataset_id))},
              {"query", s.query},
              {"reference", s.reference}};
}

DialogueSample sample_from_json(const json& j) {
  try {
    DialogueSample s{j.at("sample_id").get<std::string>(), parse_dataset_id(j.at("dataset_id").get<std::string>()),
                     j.at("query").get<std::string>(), j.at("reference").get<std::string>()};
    if (text::trim(s.query).empty() || text::trim(s.reference).empty()) {
      throw InputError("sample '" + s.sample_id + "' has empty text");
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed sample record: ") + e.what());
  }
}

std::string to_store(std::span<const DialogueSample> samples) {
  std::vector<json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(to_json(s));
  return io::to_jsonl(rows);
}

std::vector<DialogueSample> parse_store(std::string_view content, const std::string& source_name) {
  std::vector<DialogueSample> out;
  for (const auto& row : io::parse_jsonl(content, source_name)) out.push_back(sample_from_json(row));
  return out;
}

std::vector<DialogueSample> read_store(const std::filesystem::path& path) {
  return parse_store(io::read_file(path), path.string());
}

}  // namespace ctst::corpus
