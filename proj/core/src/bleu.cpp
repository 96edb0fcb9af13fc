#include "ctst/bleu.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "ctst/error.hpp"
#include "ctst/text.hpp"

namespace ctst::bleu {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// [{-~[-` -&(-+:-@/]
bool is_split_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x7B && u <= 0x7E) || (u >= 0x5B && u <= 0x60) || (u >= 0x20 && u <= 0x26) ||
         (u >= 0x28 && u <= 0x2B) || (u >= 0x3A && u <= 0x40) || u == 0x2F;
}

// Byte length of a whitespace character at s[i] (Python str.isspace set), 0 if none.
std::size_t whitespace_len(std::string_view s, std::size_t i) {
  const auto u = static_cast<unsigned char>(s[i]);
  if ((u >= 0x09 && u <= 0x0D) || (u >= 0x1C && u <= 0x20)) return 1;
  if (u == 0xC2 && i + 1 < s.size()) {
    const auto v = static_cast<unsigned char>(s[i + 1]);
    if (v == 0x85 || v == 0xA0) return 2;
  }
  if ((u == 0xE1 || u == 0xE2 || u == 0xE3) && i + 2 < s.size()) {
    const auto v = static_cast<unsigned char>(s[i + 1]);
    const auto w = static_cast<unsigned char>(s[i + 2]);
    if (u == 0xE1 && v == 0x9A && w == 0x80) return 3;                       // U+1680
    if (u == 0xE2 && v == 0x80 && ((w >= 0x80 && w <= 0x8A) || w == 0xA8 || w == 0xA9 || w == 0xAF)) return 3;
    if (u == 0xE2 && v == 0x81 && w == 0x9F) return 3;                       // U+205F
    if (u == 0xE3 && v == 0x80 && w == 0x80) return 3;                       // U+3000
  }
  return 0;
}

// Each regex stage is a fixed-width pattern, so a left-to-right scan that
// skips past every match reproduces re.sub's non-overlapping semantics.
std::string split_punct(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 2);
  for (char c : s) {
    if (is_split_punct(c)) {
      out.push_back(' ');
      out.push_back(c);
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// ([^0-9])([\.,]) -> "\1 \2 "
std::string split_period_comma_after(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 16);
  for (std::size_t i = 0; i < s.size();) {
    if (i + 1 < s.size() && !is_digit(s[i]) && (s[i + 1] == '.' || s[i + 1] == ',')) {
      out.push_back(s[i]);
      out.push_back(' ');
      out.push_back(s[i + 1]);
      out.push_back(' ');
      i += 2;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

// ([\.,])([^0-9]) -> " \1 \2"
std::string split_period_comma_before(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 16);
  for (std::size_t i = 0; i < s.size();) {
    if (i + 1 < s.size() && (s[i] == '.' || s[i] == ',') && !is_digit(s[i + 1])) {
      out.push_back(' ');
      out.push_back(s[i]);
      out.push_back(' ');
      out.push_back(s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

// ([0-9])(-) -> "\1 \2 "
std::string split_dash_after_digit(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 16);
  for (std::size_t i = 0; i < s.size();) {
    if (i + 1 < s.size() && is_digit(s[i]) && s[i + 1] == '-') {
      out.push_back(s[i]);
      out.push_back(' ');
      out.push_back('-');
      out.push_back(' ');
      i += 2;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size();) {
    if (const std::size_t w = whitespace_len(s, i)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      i += w;
    } else {
      cur.push_back(s[i++]);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string preprocess(std::string_view line) {
  std::string s(line);
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  s = split_punct(" " + s + " ");
  s = split_period_comma_after(s);
  s = split_period_comma_before(s);
  return split_dash_after_digit(s);
}

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(const std::vector<std::string>& toks, int n) {
  NgramCounts counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');  // unit separator: never survives tokenization
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

std::vector<std::string> tokens_13a(std::string_view line) { return split_whitespace(preprocess(line)); }

std::string tokenize_13a(std::string_view line) {
  std::string out;
  for (const auto& t : tokens_13a(line)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

BleuResult sentence_bleu_detail(std::string_view hypothesis, std::string_view reference) {
  const auto ref = tokens_13a(reference);
  if (ref.empty()) throw InputError("sentence_bleu: reference must be non-empty");
  const auto hyp = tokens_13a(hypothesis);

  BleuResult r;
  r.hyp_len = static_cast<int>(hyp.size());
  r.ref_len = static_cast<int>(ref.size());
  if (hyp.empty()) {
    r.degenerate = true;
    return r;
  }

  bool any_match = false;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const auto h = count_ngrams(hyp, n);
    const auto rc = count_ngrams(ref, n);
    int correct = 0;
    for (const auto& [gram, c] : h) {
      if (auto it = rc.find(gram); it != rc.end()) correct += std::min(c, it->second);
    }
    r.correct[n - 1] = correct;
    r.total[n - 1] = std::max(0, r.hyp_len - n + 1);
    any_match = any_match || correct > 0;
  }

  r.brevity_penalty = 1.0;
  if (r.hyp_len < r.ref_len) r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_len) / r.hyp_len);
  if (!any_match) return r;

  double smooth = 1.0;
  double log_sum = 0.0;
  int effective = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (r.total[n] == 0) break;
    effective = n + 1;
    double p;
    if (r.correct[n] == 0) {
      smooth *= 2.0;
      p = 1.0 / (smooth * r.total[n]);
    } else {
      p = static_cast<double>(r.correct[n]) / r.total[n];
    }
    r.precisions[n] = 100.0 * p;
    log_sum += std::log(p);
  }
  // Fractions rather than percentages, so a perfect match is exactly 100.
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / effective);
  return r;
}

double sentence_bleu(std::string_view hypothesis, std::string_view reference) {
  return sentence_bleu_detail(hypothesis, reference).score;
}

std::string signature() { return "nrefs:1|case:mixed|eff:yes|tok:13a|smooth:exp|ngram:4"; }

}  // namespace ctst::bleu
