#pragma once

#include <array>
#include <string>
#include <string_view>

namespace ctst {

enum class Task { formality, sentiment };
enum class Direction { formal, informal, positive, negative };

inline constexpr std::array<Direction, 4> kAllDirections = {
    Direction::formal, Direction::informal, Direction::positive, Direction::negative};

// A (task, direction) pair. Construction via make() enforces that the
// direction belongs to the task.
class StyleTask {
 public:
  static StyleTask make(Task task, Direction direction);
  static StyleTask of(Direction direction);

  Task task() const noexcept { return task_; }
  Direction direction() const noexcept { return direction_; }

  friend bool operator==(const StyleTask&, const StyleTask&) = default;
  friend auto operator<=>(const StyleTask&, const StyleTask&) = default;

 private:
  StyleTask(Task t, Direction d) : task_(t), direction_(d) {}
  Task task_;
  Direction direction_;
};

Task task_of(Direction d) noexcept;
std::array<Direction, 2> directions_of(Task t) noexcept;

std::string_view to_string(Task t) noexcept;
std::string_view to_string(Direction d) noexcept;
// Capitalized form substituted into the generation prompt ("Formal", ...).
std::string_view style_word(Direction d) noexcept;

Task parse_task(std::string_view s);
Direction parse_direction(std::string_view s);

}  // namespace ctst
