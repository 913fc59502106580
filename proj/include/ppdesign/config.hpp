#pragma once

#include <string>

#include "ppdesign/denoiser.hpp"
#include "ppdesign/schedules.hpp"
#include "ppdesign/training.hpp"

namespace ppdesign {

/// Everything a run needs, parsed from a flat sectioned key/value file.
/// Flags may override individual fields after parsing.
struct RunConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;  // the seed is mandatory; CLI enforces it

    ScheduleSpec seq_schedule{ScheduleKind::Cosine, 100, 0.01, 1e-4, 0.1, 2.0};
    ScheduleSpec struct_schedule{ScheduleKind::Sigmoid, 100, 0.01, 1e-4, 0.1, 2.0};
    DenoiserConfig model;
    TrainConfig train;

    // guidance block (the fragment library itself is loaded separately)
    int guid_k = 4;
    int guid_n_init = 10;
    bool guid_seq = false;
    bool guid_struct = false;
    std::string fragments_path;

    // paths block
    std::string data_path;
    std::string out_dir = "out";
    std::string checkpoint_path;

    /// Cross-field consistency (shared T, schedule bounds, model shape).
    void validate() const;
};

/// Parses the sectioned `key = value` format; unknown sections or keys are
/// configuration errors.
RunConfig parse_run_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// The defaults (or any config) in the same format `parse_run_config_text`
/// reads; `--dump-defaults` prints this.
std::string dump_run_config(const RunConfig& config);

}  // namespace ppdesign
