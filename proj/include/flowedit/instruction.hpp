#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowedit {

enum class Task { move_to_mode, reflect_axis, translate_offset };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);

// Edit directives share one global code space so a code alone identifies the
// task and its argument:
//   0..3  move to mode (upper-right, upper-left, lower-left, lower-right)
//   4..5  reflect across the x axis / the y axis
//   6..9  translate by +4x, -4x, +4y, -4y
inline constexpr int kCodeCount = 10;
Task task_of(int code);
bool valid_code(int code);

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::array<Point, 4> kModeCenters = {
    Point{2.0, 2.0}, Point{-2.0, 2.0}, Point{-2.0, -2.0}, Point{2.0, -2.0}};
inline constexpr double kModeStd = 0.25;
inline constexpr double kTranslateStep = 4.0;

// Fixed toy vocabulary.
std::span<const std::string_view> vocabulary();
int token_id(std::string_view word);

struct Instruction {
  int code = 0;
  std::vector<int> tokens;
};

// Every instruction is 11 tokens and states its arguments twice, six
// positions apart, so no window of up to six tokens can erase them.
Instruction make_instruction(int code);
// Recovers the code from a token sequence; throws on undecodable input.
int decode_code(std::span<const int> tokens);
std::string render_tokens(std::span<const int> tokens);

}  // namespace flowedit
