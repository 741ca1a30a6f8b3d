#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/textimage/render.hpp"

namespace pixelrep {

struct WindowConfig {
    int h = 32;  // window height, equals the render canvas height
    int w = 32;  // window width
    int s = 16;  // stride

    void validate() const;
};

// Ordered fixed-size windows cut from one sentence image.
struct TokenSequence {
    std::vector<std::vector<float>> windows;  // each h*w row-major
    int n_tokens = 0;
    int source_width = 0;
};

struct PixelBatch {
    int batch = 0;
    int t_max = 0;
    int h = 0, w = 0;
    std::vector<float> data;     // [batch, t_max, h, w]
    std::vector<uint8_t> pad_mask;  // [batch, t_max], 1 = padding token
    std::vector<std::string> lang_tags;

    const float* window(int b, int t) const {
        return data.data() + (size_t(b) * size_t(t_max) + size_t(t)) * size_t(h) * size_t(w);
    }
    bool is_pad(int b, int t) const { return pad_mask[size_t(b) * size_t(t_max) + size_t(t)] != 0; }
};

// 1 if width <= w, otherwise ceil((width - w) / s) + 1; window k starts at k*s
int window_count(int width, const WindowConfig& cfg);

TokenSequence tokenize(const SentenceImage& img, const WindowConfig& cfg);

PixelBatch collate(const std::vector<TokenSequence>& seqs, const std::vector<std::string>& tags,
                   const WindowConfig& cfg);

}  // namespace pixelrep
