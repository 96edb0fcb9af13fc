#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "ctst/bleu.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> make_pairs(std::size_t words) {
  std::mt19937 rng(1);
  const std::vector<std::string> vocab{"I",    "really", "enjoyed", "the", "show", ",",   "thanks", "for",
                                       "asking", ".",    "it's",    "a",   "fine", "day", "don't",  "worry"};
  std::vector<std::pair<std::string, std::string>> out;
  for (int i = 0; i < 64; ++i) {
    std::string h, r;
    for (std::size_t k = 0; k < words; ++k) {
      h += (k ? " " : "") + vocab[rng() % vocab.size()];
      r += (k ? " " : "") + vocab[rng() % vocab.size()];
    }
    out.emplace_back(h, r);
  }
  return out;
}

void BM_SentenceBleu(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [h, r] = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(ctst::bleu::sentence_bleu(h, r));
  }
}
BENCHMARK(BM_SentenceBleu)->Arg(8)->Arg(32)->Arg(128);

void BM_Tokenize13a(benchmark::State& state) {
  const std::string line = "Well, \"that's\" $5.50 - isn't it? (I'd say 1,000 times!) <br> &amp; more...";
  for (auto _ : state) benchmark::DoNotOptimize(ctst::bleu::tokenize_13a(line));
}
BENCHMARK(BM_Tokenize13a);

}  // namespace
