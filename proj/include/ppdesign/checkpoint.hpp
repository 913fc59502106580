#pragma once

#include <string>
#include <utility>

#include "ppdesign/denoiser.hpp"
#include "ppdesign/schedules.hpp"

namespace ppdesign {

/// Everything needed to resume or sample from a trained model, next to the
/// weights themselves.
struct CheckpointMeta {
    int format_version = 1;
    std::uint64_t alphabet_hash = 0;
    double s_norm = 10.0;   // coordinate normalization scale (angstroms)
    double mu_knn = 0.0;    // training-set neighbor-distance statistic (normalized units)
    long step = 0;          // optimizer steps completed
    DenoiserConfig config;
    ScheduleSpec seq_schedule;
    ScheduleSpec struct_schedule;
};

/// A checkpoint is two files sharing a stem:
///   <stem>.manifest  plain-text key/value lines, then one `tensor <name>
///                    <rows> <cols>` line per tensor in parameter order
///   <stem>.bin       the tensors as little-endian 32-bit floats, row-major,
///                    concatenated in manifest order
void save_checkpoint(const std::string& path_stem, const CheckpointMeta& meta,
                     const DenoiserParams& params);

std::pair<CheckpointMeta, DenoiserParams> load_checkpoint(const std::string& path_stem);

/// The manifest text for a checkpoint (what `inspect` prints).
std::string manifest_text(const CheckpointMeta& meta, const DenoiserParams& params);

}  // namespace ppdesign
