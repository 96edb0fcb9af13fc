#include "ctst/prompting.hpp"

#include "ctst/error.hpp"
#include "ctst/text.hpp"

namespace ctst::prompting {

namespace {

constexpr std::array<std::pair<std::string_view, Slot>, 4> kSlotNames = {{
    {"{style}", Slot::style},
    {"{query}", Slot::query},
    {"{response}", Slot::response},
    {"{exemplars}", Slot::exemplars},
}};

std::string_view slot_name(Slot s) { return kSlotNames[static_cast<std::size_t>(s)].first; }

void require(const Template& t, Slot s, std::size_t lo, std::size_t hi, std::string_view which) {
  const std::size_t n = t.count(s);
  if (n < lo || n > hi) {
    std::string want = lo == hi ? "exactly " + std::to_string(lo) : "at most " + std::to_string(hi);
    throw InputError("template validation: " + std::string(which) + " must contain " + want + " " +
                     std::string(slot_name(s)) + " slot(s), found " + std::to_string(n));
  }
}

}  // namespace

Template Template::parse(std::string source) {
  Template t;
  t.source_ = std::move(source);
  std::string_view s = t.source_;
  std::string literal;
  std::size_t i = 0;
  while (i < s.size()) {
    bool matched = false;
    if (s[i] == '{') {
      for (const auto& [name, slot] : kSlotNames) {
        if (s.substr(i, name.size()) == name) {
          if (!literal.empty()) t.parts_.emplace_back(std::move(literal));
          literal.clear();
          t.parts_.emplace_back(slot);
          ++t.counts_[static_cast<std::size_t>(slot)];
          i += name.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) literal.push_back(s[i++]);
  }
  if (!literal.empty()) t.parts_.emplace_back(std::move(literal));
  return t;
}

std::string Template::render(const SlotValues& values) const {
  std::string out;
  for (const auto& part : parts_) {
    if (const auto* lit = std::get_if<std::string>(&part)) {
      out += *lit;
      continue;
    }
    switch (std::get<Slot>(part)) {
      case Slot::style: out += values.style; break;
      case Slot::query: out += values.query; break;
      case Slot::response: out += values.response; break;
      case Slot::exemplars: out += values.exemplars; break;
    }
  }
  return out;
}

std::string Template::digest() const { return text::sha256_hex(source_).substr(0, 12); }

std::string_view default_generation_body() {
  return "Below are short exchanges between a Speaker and a Responder. "
         "Write the Responder's reply to the final message in a {style} style. "
         "Reply with a single message and nothing else.\n\n"
         "{exemplars}"
         "###Speaker: {query}\n"
         "###Response:";
}

std::string_view default_exemplar_format() {
  return "###Speaker: {query}\n"
         "###Response: {response}\n\n";
}

std::string_view default_judge_body() {
  return "You are grading a reply in a two-person conversation.\n"
         "Rate how appropriate the Response is as a reply to the Speaker. "
         "An appropriate reply is coherent with what the Speaker said and fluent.\n"
         "Use a scale from 0 (completely inappropriate) to 100 (perfectly appropriate).\n\n"
         "###Speaker: {query}\n"
         "###Response: {response}\n\n"
         "Explain your judgement in one or two sentences. "
         "End with a final line of the form \"Score: <integer>\".";
}

GenerationTemplate GenerationTemplate::make(std::string body, std::string exemplar) {
  GenerationTemplate g{Template::parse(std::move(body)), Template::parse(std::move(exemplar))};
  require(g.body, Slot::style, 1, 1, "generation template");
  require(g.body, Slot::query, 1, 1, "generation template");
  require(g.body, Slot::exemplars, 0, 1, "generation template");
  require(g.body, Slot::response, 0, 0, "generation template");
  require(g.exemplar, Slot::query, 1, 1, "exemplar template");
  require(g.exemplar, Slot::response, 1, 1, "exemplar template");
  require(g.exemplar, Slot::style, 0, 0, "exemplar template");
  require(g.exemplar, Slot::exemplars, 0, 0, "exemplar template");
  return g;
}

GenerationTemplate GenerationTemplate::defaults() {
  return make(std::string(default_generation_body()), std::string(default_exemplar_format()));
}

JudgeTemplate JudgeTemplate::make(std::string body) {
  JudgeTemplate j{Template::parse(std::move(body))};
  require(j.body, Slot::query, 1, 1, "judge template");
  require(j.body, Slot::response, 1, 1, "judge template");
  require(j.body, Slot::style, 0, 0, "judge template");
  require(j.body, Slot::exemplars, 0, 0, "judge template");
  return j;
}

JudgeTemplate JudgeTemplate::defaults() { return make(std::string(default_judge_body())); }

std::string build_generation_prompt(const GenerationTemplate& tmpl, StyleTask style,
                                    std::span<const corpus::FewShotExemplar> exemplars, std::string_view query) {
  std::string block;
  for (const auto& ex : exemplars) {
    block += tmpl.exemplar.render(SlotValues{.style = {}, .query = ex.query, .response = ex.response, .exemplars = {}});
  }
  return tmpl.body.render(SlotValues{
      .style = style_word(style.direction()), .query = query, .response = {}, .exemplars = block});
}

std::string build_judge_prompt(const JudgeTemplate& tmpl, std::string_view query, std::string_view response) {
  if (text::trim(response).empty()) throw InputError("judge prompt requires a non-empty response");
  return tmpl.body.render(SlotValues{.style = {}, .query = query, .response = response, .exemplars = {}});
}

}  // namespace ctst::prompting
