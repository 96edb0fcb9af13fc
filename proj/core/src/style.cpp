#include "ctst/style.hpp"

#include "ctst/error.hpp"

namespace ctst {

Task task_of(Direction d) noexcept {
  return (d == Direction::formal || d == Direction::informal) ? Task::formality : Task::sentiment;
}

std::array<Direction, 2> directions_of(Task t) noexcept {
  if (t == Task::formality) return {Direction::formal, Direction::informal};
  return {Direction::positive, Direction::negative};
}

StyleTask StyleTask::make(Task task, Direction direction) {
  if (task_of(direction) != task) {
    throw InputError("direction '" + std::string(to_string(direction)) + "' does not belong to task '" +
                     std::string(to_string(task)) + "'");
  }
  return StyleTask(task, direction);
}

StyleTask StyleTask::of(Direction direction) { return StyleTask(task_of(direction), direction); }

std::string_view to_string(Task t) noexcept {
  return t == Task::formality ? "formality" : "sentiment";
}

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::formal: return "formal";
    case Direction::informal: return "informal";
    case Direction::positive: return "positive";
    case Direction::negative: return "negative";
  }
  return "?";
}

std::string_view style_word(Direction d) noexcept {
  switch (d) {
    case Direction::formal: return "Formal";
    case Direction::informal: return "Informal";
    case Direction::positive: return "Positive";
    case Direction::negative: return "Negative";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "formality") return Task::formality;
  if (s == "sentiment") return Task::sentiment;
  throw InputError("unknown style task '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  throw InputError("unknown style direction '" + std::string(s) + "'");
}

}  // namespace ctst
