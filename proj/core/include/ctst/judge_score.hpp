#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace ctst {

struct JudgeScore {
  int value = 0;        // always within [0, 100]
  bool clamped = false;  // the stated score was outside [0, 100]
  bool from_score_line = false;
};

// Extraction rules, in order:
//  1. The last "Score: <integer>" (case-insensitive, optional markdown
//     asterisks after the colon). Values outside [0, 100] are clamped and
//     flagged; a decimal after "Score:" does not count as a score line.
//  2. Otherwise the last standalone integer within [0, 100]. Digits glued to
//     letters ("7b", "GPT4"), hyphenated tokens ("GPT-4"), negatives,
//     decimals, and denominators ("out of 100", "/100") are ignored.
// Throws ParseError when neither rule yields a value.
JudgeScore extract_judge_score(std::string_view raw_judge_output);

struct JudgeOutcome {
  std::optional<JudgeScore> score;  // nullopt: unscored after the retry
  int attempts = 0;
  std::string last_output;
};

// Asks the judge (attempt 0), and once more (attempt 1) if nothing can be
// extracted. Backend errors propagate.
JudgeOutcome judge_with_retry(const std::function<std::string(int attempt)>& ask);

}  // namespace ctst
