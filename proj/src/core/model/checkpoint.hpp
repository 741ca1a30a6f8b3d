#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/model/model.hpp"
#include "core/tensor/adam.hpp"

namespace pixelrep {

struct TrainerState {
    int64_t step = 0;
    double best_val_ppl = 0;
    std::vector<std::pair<int64_t, double>> history;  // (step, valid ppl)
    std::string src_vocab_hash;
    std::string tgt_vocab_hash;
};

// Checkpoint directory layout:
//   config.json, trainer.json
//   params/manifest.json + params/<name>.bin        raw little-endian f32
//   optimizer/state.json + optimizer/<i>.{m,v}.bin  when optimizer given
void save_checkpoint(const std::string& dir, Model<float>& model, const TrainerState& state,
                     const AdamState<float>* optimizer);

struct LoadedCheckpoint {
    std::unique_ptr<Model<float>> model;
    TrainerState state;
    std::unique_ptr<AdamState<float>> optimizer;  // null if absent on disk
};

LoadedCheckpoint load_checkpoint(const std::string& dir, bool with_optimizer = false);

}  // namespace pixelrep
