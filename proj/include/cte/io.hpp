#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cte/generators.hpp"
#include "cte/proxy.hpp"

namespace cte::io {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kBoundsFormatVersion = 1;

// One stored CTE with its provenance.
struct CteRecord {
  Cte cte;
  CriterionVector criteria;
  double rho = 0.0;
  WeightVector weights;
};

struct DatasetHeader {
  std::string generator;
  uint64_t master_seed = 0;
  NormalizationBounds bounds;
  std::string generator_config_json;  // config echo, verbatim JSON
  std::string env_json;
  std::string reward_id;
  double policy_temperature = 0.5;
  bool weights_sampled = false;
  WeightVector weights;  // fixed weights when not sampled
  int n_records = 0;
};

struct DatasetFile {
  DatasetHeader header;
  std::vector<CteRecord> records;
};

// Line-oriented dataset: a header record followed by one record per CTE.
// Writers are atomic (temp file + rename); readers validate format version
// and the frozen feature-column order.
void save_dataset(const std::string& path, const DatasetFile& data);
DatasetFile load_dataset(const std::string& path);

// Feature extraction over stored records; the stored averages serve as
// labels, so no reward model is needed.
Dataset dataset_from_records(const DatasetFile& data);

void save_bounds(const std::string& path, const NormalizationBounds& bounds);
NormalizationBounds load_bounds(const std::string& path);

void save_reward_model(const std::string& path, const MlpRewardModel& model);
std::unique_ptr<MlpRewardModel> load_reward_model(const std::string& path);

void save_proxy_model(const std::string& path, const ProxyModel& model);
ProxyModel load_proxy_model(const std::string& path);

// Writes content to path via a temporary file and rename.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Minimal CSV quoting: cells containing separators or quotes get wrapped.
std::string csv_escape(const std::string& cell);

// Side-by-side playback of both trajectories with per-step ground-truth
// rewards and the stored averages.
std::string render_cte(const CteRecord& record);

}  // namespace cte::io
