#include "flowedit/metrics.hpp"

#include <sstream>

#include "flowedit/error.hpp"

namespace flowedit {

std::string metrics_header(bool dense) {
  std::string h = "iteration,mean_reward,objective,kl,reward_queries,step_evals,wall_ms";
  if (dense) h += ",r,k";
  return h;
}

std::string metrics_line(const MetricsRow& row, bool dense) {
  std::ostringstream out;
  out.precision(17);
  out << row.iteration << ',' << row.mean_reward << ',' << row.objective << ',' << row.kl << ','
      << row.reward_queries << ',' << row.step_evals << ',' << row.wall_ms;
  if (dense) {
    out << ',';
    for (std::size_t b = 0; b < row.starts.size(); ++b) out << (b ? ";" : "") << row.starts[b];
    out << ',' << row.k;
  }
  return out.str();
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool dense) : out_(path, std::ios::binary), dense_(dense) {
  require(out_.good(), ErrorCode::io, "cannot write metrics " + path.string());
  out_ << metrics_header(dense) << '\n';
  out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << metrics_line(row, dense_) << '\n';
  out_.flush();
  require(out_.good(), ErrorCode::io, "failed writing metrics row");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

}  // namespace

std::vector<CurvePoint> read_curve(const std::filesystem::path& metrics_csv) {
  std::ifstream in(metrics_csv);
  require(in.good(), ErrorCode::io, "cannot open metrics " + metrics_csv.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::io, "empty metrics file " + metrics_csv.string());
  const std::vector<std::string> header = split(line, ',');
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(ErrorCode::io, metrics_csv.string() + ": missing column " + std::string(name));
  };
  const std::size_t c_it = column("iteration"), c_q = column("reward_queries"), c_e = column("step_evals"),
                    c_r = column("mean_reward");
  std::vector<CurvePoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    require(f.size() >= header.size() - 1, ErrorCode::io, metrics_csv.string() + ": short row");
    try {
      points.push_back({std::stoull(f[c_it]), std::stoull(f[c_q]), std::stoull(f[c_e]), std::stod(f[c_r])});
    } catch (const std::exception&) {
      fail(ErrorCode::io, metrics_csv.string() + ": unparsable row '" + line + "'");
    }
  }
  return points;
}

void export_curves(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out) {
  require(!run_dirs.empty(), ErrorCode::invalid_argument, "export-curves needs at least one run directory");
  std::ostringstream text;
  text.precision(17);
  text << "run,iteration,reward_queries,step_evals,mean_reward\n";
  for (const auto& dir : run_dirs) {
    const std::string run = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    for (const CurvePoint& p : read_curve(dir / "metrics.csv"))
      text << run << ',' << p.iteration << ',' << p.reward_queries << ',' << p.step_evals << ',' << p.mean_reward
           << '\n';
  }
  std::ofstream file(out, std::ios::binary);
  require(file.good(), ErrorCode::io, "cannot write " + out.string());
  file << text.str();
}

}  // namespace flowedit
