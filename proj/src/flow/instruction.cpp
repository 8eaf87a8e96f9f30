#include "flowedit/instruction.hpp"

#include <algorithm>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

constexpr std::array<std::string_view, 23> kVocab = {
    "move", "point", "to",   "mode", "upper", "lower",  "left",   "right",
    "reflect", "across", "x", "y",   "axis",  "shift",  "by",     "plus",
    "minus", "four", "the",  "target", "is",  "keep",   "now"};

std::array<std::string_view, 2> move_args(int code) {
  switch (code) {
    case 0: return {"upper", "right"};
    case 1: return {"upper", "left"};
    case 2: return {"lower", "left"};
    default: return {"lower", "right"};
  }
}

std::array<std::string_view, 2> translate_args(int code) {
  switch (code) {
    case 6: return {"plus", "x"};
    case 7: return {"minus", "x"};
    case 8: return {"plus", "y"};
    default: return {"minus", "y"};
  }
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::move_to_mode: return "move-to-mode";
    case Task::reflect_axis: return "reflect-axis";
    case Task::translate_offset: return "translate-offset";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::move_to_mode, Task::reflect_axis, Task::translate_offset})
    if (task_name(t) == name) return t;
  fail(ErrorCode::invalid_argument, "unknown task '" + std::string(name) + "'");
}

bool valid_code(int code) { return code >= 0 && code < kCodeCount; }

Task task_of(int code) {
  require(valid_code(code), ErrorCode::invalid_argument, "invalid instruction code " + std::to_string(code));
  if (code < 4) return Task::move_to_mode;
  if (code < 6) return Task::reflect_axis;
  return Task::translate_offset;
}

std::span<const std::string_view> vocabulary() { return kVocab; }

int token_id(std::string_view word) {
  auto it = std::find(kVocab.begin(), kVocab.end(), word);
  require(it != kVocab.end(), ErrorCode::invalid_argument, "unknown token '" + std::string(word) + "'");
  return static_cast<int>(it - kVocab.begin());
}

Instruction make_instruction(int code) {
  std::array<std::string_view, 11> words;
  switch (task_of(code)) {
    case Task::move_to_mode: {
      auto [v, h] = move_args(code);
      words = {"move", "the", "point", v, h, "mode", "now", "target", "is", v, h};
      break;
    }
    case Task::reflect_axis: {
      const std::string_view axis = code == 4 ? "x" : "y";
      words = {"reflect", "the", "point", axis, "axis", "across", "now", "target", "is", axis, "axis"};
      break;
    }
    case Task::translate_offset: {
      auto [sign, axis] = translate_args(code);
      words = {"shift", "the", "point", sign, axis, "by", "four", "target", "is", sign, axis};
      break;
    }
  }
  Instruction out{code, {}};
  for (auto w : words) out.tokens.push_back(token_id(w));
  return out;
}

int decode_code(std::span<const int> tokens) {
  require(!tokens.empty() && tokens.size() <= 32, ErrorCode::invalid_argument, "instruction length must be in [1, 32]");
  for (int t : tokens)
    require(t >= 0 && t < static_cast<int>(kVocab.size()), ErrorCode::invalid_argument,
            "token id " + std::to_string(t) + " outside vocabulary");
  auto has = [&](std::string_view w) {
    const int id = token_id(w);
    return std::find(tokens.begin(), tokens.end(), id) != tokens.end();
  };
  const std::string_view verb = kVocab[static_cast<std::size_t>(tokens[0])];
  if (verb == "move") {
    for (int code = 0; code < 4; ++code) {
      auto [v, h] = move_args(code);
      if (has(v) && has(h)) return code;
    }
  } else if (verb == "reflect") {
    if (has("x")) return 4;
    if (has("y")) return 5;
  } else if (verb == "shift") {
    for (int code = 6; code < 10; ++code) {
      auto [sign, axis] = translate_args(code);
      if (has(sign) && has(axis)) return code;
    }
  }
  fail(ErrorCode::invalid_argument, "cannot decode instruction '" + render_tokens(tokens) + "'");
}

std::string render_tokens(std::span<const int> tokens) {
  std::string out;
  for (int t : tokens) {
    if (!out.empty()) out += ' ';
    if (t >= 0 && t < static_cast<int>(kVocab.size()))
      out += kVocab[static_cast<std::size_t>(t)];
    else
      out += "<" + std::to_string(t) + ">";
  }
  return out;
}

}  // namespace flowedit
