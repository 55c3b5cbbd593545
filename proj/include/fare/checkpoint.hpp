#pragma once

#include "fare/container.hpp"
#include "fare/detection.hpp"

namespace fare {

// Checkpoint layout, little-endian:
//   magic "FARC" | version u32 | stage u32 | model-config echo |
//   flags u32 (bit0 normalizer, bit1 threshold) | records | sections
// Each section is a name plus an embedded float64 container holding one
// parameter tensor, written in canonical parameter order so that
// load-then-save reproduces the file byte for byte.

enum class CheckpointStage : std::uint32_t {
    pp_trained = 1,
    ip_trained = 2,
};

const char* checkpoint_stage_name(CheckpointStage stage);

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const FareModel& model,
                     CheckpointStage stage, const std::optional<ScoreNormalizer>& normalizer,
                     const std::optional<OodThreshold>& threshold);

struct LoadedCheckpoint {
    FareModel model;
    CheckpointStage stage = CheckpointStage::pp_trained;
    std::optional<ScoreNormalizer> normalizer;
    std::optional<OodThreshold> threshold;
};

// expected_config guards against evaluating a checkpoint under a different
// network geometry: any mismatch in shape-affecting keys is a hard error.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const ModelConfig& expected_config);

}  // namespace fare
