#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "flowedit/training.hpp"

namespace flowedit {

// iteration,mean_reward,objective,kl,reward_queries,step_evals,wall_ms
// plus r,k for dense runs (r lists one start index per instance, ';'-joined).
std::string metrics_header(bool dense);
std::string metrics_line(const MetricsRow& row, bool dense);

// Append-only writer flushed after every row.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, bool dense);
  void write(const MetricsRow& row);

 private:
  std::ofstream out_;
  bool dense_;
};

struct CurvePoint {
  std::size_t iteration = 0;
  std::uint64_t reward_queries = 0;
  std::uint64_t step_evals = 0;
  double mean_reward = 0;
};

std::vector<CurvePoint> read_curve(const std::filesystem::path& metrics_csv);

// One CSV with columns run,iteration,reward_queries,step_evals,mean_reward.
// `run` is the name of each run directory; each must hold metrics.csv.
void export_curves(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out);

}  // namespace flowedit
