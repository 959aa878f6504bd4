#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "mvecf/holdings.hpp"

namespace mvecf {

using json = nlohmann::json;

// Fully populated default experiment configuration (synthetic source,
// Appendix-style hyperparameter defaults).
json default_config();

// Deep-merges user settings onto the defaults. Unknown keys and type
// mismatches raise ConfigError.
json resolve_config(const json& user);
json load_config_file(const std::string& path);

// Applies `--dotted.name value` style overrides onto a resolved config.
void apply_override(json& config, const std::string& dotted_key, const std::string& value);

// FNV-1a of the canonical dump; stable across runs.
std::string config_hash(const json& config);

// Ingested/generated data for one run.
struct DataBundle {
  SubDataset ds;
};

DataBundle build_data(const json& config);

// End-to-end run: data -> split -> fit -> recommend -> evaluate -> write.
// Writes report.json, per_user.csv, loss_trace.csv, model.txt, manifest.json
// (plus relabeled.csv for the sampled-BPR model) into out_dir and returns the
// report. Errors are rethrown with the failing pipeline stage prepended and
// an INCOMPLETE marker is left in out_dir.
json run_experiment(const json& config);

// Data + fit only; writes model.txt, loss_trace.csv, and manifest.json.
void run_fit(const json& config);

// Grid over sweep.lambda_mv x sweep.gamma in the listed order; one
// sub-directory per combination plus summary_table.csv in out_dir.
json run_sweep(const json& config);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mvecf
