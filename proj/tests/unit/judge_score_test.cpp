#include <gtest/gtest.h>

#include "acceptance/judge_cases.hpp"
#include "ctst/error.hpp"
#include "ctst/judge_score.hpp"

using namespace ctst;
using judge_cases::Case;

namespace {

class JudgeExtraction : public ::testing::TestWithParam<Case> {};

}  // namespace

TEST_P(JudgeExtraction, ResolvesDocumentedPattern) {
  const auto& c = GetParam();
  const auto s = extract_judge_score(c.output);
  EXPECT_EQ(s.value, c.value) << c.output;
  EXPECT_EQ(s.clamped, c.clamped) << c.output;
  EXPECT_EQ(s.from_score_line, c.score_line) << c.output;
}

INSTANTIATE_TEST_SUITE_P(Suite, JudgeExtraction, ::testing::ValuesIn(judge_cases::kResolved),
                         [](const auto& info) { return "case" + std::to_string(info.index); });

TEST(JudgeExtraction, NothingExtractableIsParseError) {
  for (const char* s : judge_cases::kUnparseable) EXPECT_THROW(extract_judge_score(s), ParseError) << s;
}

TEST(JudgeExtraction, OutputAlwaysWithinRange) {
  for (int v = -300; v <= 300; v += 7) {
    const auto s = extract_judge_score("Score: " + std::to_string(v));
    EXPECT_GE(s.value, 0);
    EXPECT_LE(s.value, 100);
  }
}

TEST(JudgeRetry, SecondAttemptAfterUnparseableOutput) {
  std::vector<int> attempts;
  const auto out = judge_with_retry([&](int attempt) {
    attempts.push_back(attempt);
    return attempt == 0 ? std::string("Great response!") : std::string("Score: 77");
  });
  ASSERT_TRUE(out.score.has_value());
  EXPECT_EQ(out.score->value, 77);
  EXPECT_EQ(out.attempts, 2);
  EXPECT_EQ(attempts, (std::vector<int>{0, 1}));
}

TEST(JudgeRetry, UnscoredAfterTwoFailures) {
  int calls = 0;
  const auto out = judge_with_retry([&](int) {
    ++calls;
    return std::string("no idea");
  });
  EXPECT_FALSE(out.score.has_value());
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(out.last_output, "no idea");
}

TEST(JudgeRetry, FirstSuccessStops) {
  int calls = 0;
  const auto out = judge_with_retry([&](int) {
    ++calls;
    return std::string("Score: 12");
  });
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(out.score->value, 12);
}

TEST(JudgeRetry, BackendErrorsPropagate) {
  EXPECT_THROW(judge_with_retry([](int) -> std::string { throw BackendError(503, "down"); }), BackendError);
}
