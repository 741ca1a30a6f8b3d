#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "core/pixeltok/window.hpp"

namespace pixelrep {

enum class SourceMode { Pixel, Subword };

std::string to_string(SourceMode m);
SourceMode source_mode_from_string(const std::string& s);

struct ModelConfig {
    SourceMode source_mode = SourceMode::Pixel;
    int64_t enc_layers = 6;
    int64_t dec_layers = 6;
    int64_t d_model = 512;
    int64_t ff_width = 1024;
    int64_t heads = 8;
    double dropout = 0.1;
    double label_smoothing = 0.2;
    int64_t v_src = 0;  // subword mode only; pixel models are vocabulary-free
    int64_t v_tgt = 5000;
    WindowConfig window;
    int64_t conv_channels = 8;
    bool tied_output = false;
    int64_t max_positions = 1024;

    void validate() const;
    bool pixel() const { return source_mode == SourceMode::Pixel; }

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// Closed-form parameter accounting; must agree with the instantiated model
// tensor-for-tensor.
struct ParamCounts {
    int64_t source_embedder = 0;
    int64_t target_embedding = 0;
    int64_t output_projection = 0;
    int64_t encoder = 0;
    int64_t decoder = 0;
    int64_t final_norms = 0;

    int64_t total() const {
        return source_embedder + target_embedding + output_projection + encoder + decoder +
               final_norms;
    }
};

ParamCounts count_params(const ModelConfig& cfg);

}  // namespace pixelrep
