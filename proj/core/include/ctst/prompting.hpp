#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctst/corpus.hpp"
#include "ctst/style.hpp"

namespace ctst::prompting {

// Named slots recognised in template text as {style}, {query}, {response}
// and {exemplars}. Any other brace text is literal.
enum class Slot { style, query, response, exemplars };

struct SlotValues {
  std::string_view style;
  std::string_view query;
  std::string_view response;
  std::string_view exemplars;
};

// Parsed template. Rendering is single-pass: substituted values are never
// re-scanned, so braces inside queries or responses come out verbatim.
class Template {
 public:
  static Template parse(std::string source);

  std::size_t count(Slot slot) const noexcept { return counts_[static_cast<std::size_t>(slot)]; }
  std::string render(const SlotValues& values) const;
  const std::string& source() const noexcept { return source_; }
  // Short content digest, embedded in report signatures.
  std::string digest() const;

 private:
  std::string source_;
  std::vector<std::variant<std::string, Slot>> parts_;
  std::array<std::size_t, 4> counts_{};
};

// Generation prompt: `body` holds exactly one {style} and one {query} and at
// most one {exemplars}; `exemplar` is repeated per few-shot pair and must be
// style-free ({query} and {response} once each).
struct GenerationTemplate {
  Template body;
  Template exemplar;

  static GenerationTemplate make(std::string body, std::string exemplar);
  static GenerationTemplate defaults();
};

// Judge prompt: exactly one {query} and one {response}.
struct JudgeTemplate {
  Template body;

  static JudgeTemplate make(std::string body);
  static JudgeTemplate defaults();
};

std::string_view default_generation_body();
std::string_view default_exemplar_format();
std::string_view default_judge_body();

std::string build_generation_prompt(const GenerationTemplate& tmpl, StyleTask style,
                                    std::span<const corpus::FewShotExemplar> exemplars, std::string_view query);

std::string build_judge_prompt(const JudgeTemplate& tmpl, std::string_view query, std::string_view response);

}  // namespace ctst::prompting
