#include "flowedit/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowedit/error.hpp"
#include "flowedit/rng.hpp"

namespace flowedit {

Point nearest_mode_center(Point p) {
  Point best = kModeCenters[0];
  double best_d = std::hypot(p.x - best.x, p.y - best.y);
  for (const Point& c : kModeCenters) {
    const double d = std::hypot(p.x - c.x, p.y - c.y);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

Point apply_edit(Point source, int code) {
  switch (task_of(code)) {
    case Task::move_to_mode: {
      const Point from = nearest_mode_center(source);
      const Point to = kModeCenters[static_cast<std::size_t>(code)];
      return {to.x + (source.x - from.x), to.y + (source.y - from.y)};
    }
    case Task::reflect_axis:
      return code == 4 ? Point{source.x, -source.y} : Point{-source.x, source.y};
    case Task::translate_offset:
      switch (code) {
        case 6: return {source.x + kTranslateStep, source.y};
        case 7: return {source.x - kTranslateStep, source.y};
        case 8: return {source.x, source.y + kTranslateStep};
        default: return {source.x, source.y - kTranslateStep};
      }
  }
  return source;
}

std::vector<EditInstance> synth_dataset(Task task, std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(task)}));
  std::vector<EditInstance> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const auto mode = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 3)(rng));
    const Point center = kModeCenters[mode];
    const Point source{center.x + kModeStd * standard_normal(rng), center.y + kModeStd * standard_normal(rng)};
    int code = 0;
    switch (task) {
      case Task::move_to_mode:
        code = std::uniform_int_distribution<int>(0, 3)(rng);
        break;
      case Task::reflect_axis:
        code = std::uniform_int_distribution<int>(4, 5)(rng);
        break;
      case Task::translate_offset: {
        const int along_x = center.x < 0 ? 6 : 7;
        const int along_y = center.y < 0 ? 8 : 9;
        code = std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? along_x : along_y;
        break;
      }
    }
    out.push_back({source, make_instruction(code), apply_edit(source, code)});
  }
  return out;
}

void write_dataset(std::ostream& out, const std::vector<EditInstance>& data) {
  out << "# flowedit dataset v1\n# source_x source_y code tokens target_x target_y\n";
  out.precision(17);
  for (const auto& e : data) {
    out << e.source.x << ' ' << e.source.y << ' ' << e.instruction.code << ' ';
    for (std::size_t i = 0; i < e.instruction.tokens.size(); ++i)
      out << (i ? "," : "") << e.instruction.tokens[i];
    out << ' ' << e.target.x << ' ' << e.target.y << '\n';
  }
}

std::vector<EditInstance> read_dataset(std::istream& in) {
  std::vector<EditInstance> data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    EditInstance e;
    std::string tokens;
    fields >> e.source.x >> e.source.y >> e.instruction.code >> tokens >> e.target.x >> e.target.y;
    require(static_cast<bool>(fields), ErrorCode::io, "dataset line " + std::to_string(line_no) + " is malformed");
    std::istringstream tok_stream(tokens);
    std::string tok;
    while (std::getline(tok_stream, tok, ',')) {
      int id = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      require(ec == std::errc() && ptr == tok.data() + tok.size(), ErrorCode::io,
              "dataset line " + std::to_string(line_no) + " has a bad token id");
      e.instruction.tokens.push_back(id);
    }
    require(decode_code(e.instruction.tokens) == e.instruction.code, ErrorCode::io,
            "dataset line " + std::to_string(line_no) + ": tokens do not encode the stated code");
    data.push_back(std::move(e));
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const std::vector<EditInstance>& data) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write dataset '" + path.string() + "'");
  write_dataset(out, data);
}

std::vector<EditInstance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot read dataset '" + path.string() + "'");
  return read_dataset(in);
}

}  // namespace flowedit
