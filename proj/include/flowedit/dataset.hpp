#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "flowedit/instruction.hpp"

namespace flowedit {

struct EditInstance {
  Point source;
  Instruction instruction;
  // Ground-truth edit result; only used for pretraining.
  Point target;
};

Point nearest_mode_center(Point p);

// Ground-truth transform for an instruction code.
Point apply_edit(Point source, int code);

// Draws `count` instances of one task. Sources come from the four-mode
// mixture; codes are drawn uniformly among those valid for the source
// (translations always land on another mode). Deterministic in `seed`.
std::vector<EditInstance> synth_dataset(Task task, std::size_t count, std::uint64_t seed);

// Line format, one instance per line:
//   source_x source_y code tok,tok,...,tok target_x target_y
// Floats are written with 17 significant digits; lines starting with '#' are
// comments.
void write_dataset(std::ostream& out, const std::vector<EditInstance>& data);
std::vector<EditInstance> read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const std::vector<EditInstance>& data);
std::vector<EditInstance> load_dataset(const std::filesystem::path& path);

}  // namespace flowedit
