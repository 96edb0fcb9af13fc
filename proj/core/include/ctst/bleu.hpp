#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace ctst::bleu {

inline constexpr int kMaxOrder = 4;

// mteval-v13a tokenization as implemented by SacreBLEU's "13a" tokenizer:
// entity unescaping, punctuation split, period/comma split unless adjacent
// to digits, dash split after digits, whitespace collapse.
std::string tokenize_13a(std::string_view line);
std::vector<std::string> tokens_13a(std::string_view line);

struct BleuResult {
  double score = 0.0;  // [0, 100]
  bool degenerate = false;  // empty hypothesis
  std::array<int, kMaxOrder> correct{};
  std::array<int, kMaxOrder> total{};
  std::array<double, kMaxOrder> precisions{};  // percent, smoothed
  double brevity_penalty = 0.0;
  int hyp_len = 0;
  int ref_len = 0;
};

// Sentence-level BLEU against one reference: 4-gram, case-sensitive, 13a
// tokens, exponential (NIST) smoothing of zero-match orders, effective order.
// Throws InputError on an empty reference.
BleuResult sentence_bleu_detail(std::string_view hypothesis, std::string_view reference);
double sentence_bleu(std::string_view hypothesis, std::string_view reference);

// Settings string carried into reports, e.g. "nrefs:1|case:mixed|eff:yes|tok:13a|smooth:exp|ngram:4".
std::string signature();

}  // namespace ctst::bleu
