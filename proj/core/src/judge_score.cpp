#include "ctst/judge_score.hpp"

#include <cctype>
#include <regex>

#include "ctst/error.hpp"
#include "ctst/text.hpp"

namespace ctst {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }

std::optional<JudgeScore> from_score_line(std::string_view raw) {
  static const std::regex kScoreLine(R"(\bscore\s*:\s*\**\s*(-?\d+)(\.\d+)?)", std::regex::icase);
  std::optional<JudgeScore> last;
  const std::string s(raw);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kScoreLine); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[2].matched) continue;  // decimals are not valid grades
    const std::string digits = m[1].str();
    JudgeScore js;
    js.from_score_line = true;
    const bool negative = digits.front() == '-';
    std::string magnitude = negative ? digits.substr(1) : digits;
    magnitude.erase(0, std::min(magnitude.find_first_not_of('0'), magnitude.size() - 1));
    if (negative) {
      js.value = 0;
      js.clamped = magnitude != "0";
    } else if (magnitude.size() > 3 || std::stoi(magnitude) > 100) {
      js.value = 100;
      js.clamped = true;
    } else {
      js.value = std::stoi(magnitude);
    }
    last = js;
  }
  return last;
}

bool is_denominator(std::string_view s, std::size_t begin) {
  std::size_t i = begin;
  while (i > 0 && (s[i - 1] == ' ' || s[i - 1] == '\t')) --i;
  if (i > 0 && s[i - 1] == '/') return true;
  constexpr std::string_view kOutOf = "out of";
  if (i >= kOutOf.size() && text::to_lower(s.substr(i - kOutOf.size(), kOutOf.size())) == kOutOf) {
    return i == kOutOf.size() || !is_alnum(s[i - kOutOf.size() - 1]);
  }
  return false;
}

std::optional<JudgeScore> from_standalone_integer(std::string_view s) {
  std::optional<JudgeScore> last;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    const std::size_t b = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    const std::size_t e = i;

    if (b > 0) {
      const char p = s[b - 1];
      if (is_alpha(p)) continue;
      if ((p == '.' || p == ',') && b >= 2 && is_digit(s[b - 2])) continue;
      if (p == '-') continue;  // negative number or hyphenated token
    }
    if (e < s.size()) {
      const char n = s[e];
      if (is_alpha(n)) continue;
      if ((n == '.' || n == ',') && e + 1 < s.size() && is_digit(s[e + 1])) continue;
    }
    if (e - b > 3) continue;
    const int v = std::stoi(std::string(s.substr(b, e - b)));
    if (v > 100) continue;
    if (is_denominator(s, b)) continue;
    last = JudgeScore{v, false, false};
  }
  return last;
}

}  // namespace

JudgeScore extract_judge_score(std::string_view raw) {
  if (auto s = from_score_line(raw)) return *s;
  if (auto s = from_standalone_integer(raw)) return *s;
  std::string excerpt(raw.substr(0, 80));
  throw ParseError("no score found in judge output: \"" + excerpt + (raw.size() > 80 ? "...\"" : "\""));
}

JudgeOutcome judge_with_retry(const std::function<std::string(int attempt)>& ask) {
  JudgeOutcome out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    out.last_output = ask(attempt);
    out.attempts = attempt + 1;
    try {
      out.score = extract_judge_score(out.last_output);
      return out;
    } catch (const ParseError&) {
    }
  }
  return out;
}

}  // namespace ctst
