#include "core/pixeltok/window.hpp"

#include <algorithm>

#include "core/util/error.hpp"

namespace pixelrep {

void WindowConfig::validate() const {
    require(h > 0 && w > 0, ErrorCode::Config, "window dimensions must be positive");
    require(s > 0 && s <= w, ErrorCode::Config, "stride ", s, " must satisfy 0 < s <= w (w=", w,
            ")");
}

int window_count(int width, const WindowConfig& cfg) {
    cfg.validate();
    require(width >= 1, ErrorCode::InvalidArgument, "width must be >= 1, got ", width);
    if (width <= cfg.w) return 1;
    return int((width - cfg.w + cfg.s - 1) / cfg.s) + 1;
}

TokenSequence tokenize(const SentenceImage& img, const WindowConfig& cfg) {
    cfg.validate();
    require(img.height == cfg.h, ErrorCode::Config, "image height ", img.height,
            " does not match window height ", cfg.h);
    TokenSequence seq;
    seq.source_width = img.width;
    seq.n_tokens = window_count(img.width, cfg);
    seq.windows.reserve(size_t(seq.n_tokens));
    for (int k = 0; k < seq.n_tokens; ++k) {
        int start = k * cfg.s;
        std::vector<float> win(size_t(cfg.h) * size_t(cfg.w), 0.0f);
        int cols = std::min(cfg.w, img.width - start);
        for (int r = 0; r < cfg.h; ++r) {
            for (int c = 0; c < cols; ++c) {
                win[size_t(r) * size_t(cfg.w) + size_t(c)] = img.at(r, start + c);
            }
        }
        seq.windows.push_back(std::move(win));
    }
    return seq;
}

PixelBatch collate(const std::vector<TokenSequence>& seqs, const std::vector<std::string>& tags,
                   const WindowConfig& cfg) {
    require(!seqs.empty(), ErrorCode::InvalidArgument, "cannot collate an empty batch");
    require(tags.empty() || tags.size() == seqs.size(), ErrorCode::InvalidArgument,
            "tag count mismatch");
    PixelBatch b;
    b.batch = int(seqs.size());
    b.h = cfg.h;
    b.w = cfg.w;
    for (const auto& s : seqs) b.t_max = std::max(b.t_max, s.n_tokens);
    const size_t win_px = size_t(cfg.h) * size_t(cfg.w);
    for (const auto& s : seqs) {
        require(!s.windows.empty() && s.windows[0].size() == win_px, ErrorCode::InvalidArgument,
                "window size does not match batch config");
    }
    b.data.assign(size_t(b.batch) * size_t(b.t_max) * win_px, 0.0f);
    b.pad_mask.assign(size_t(b.batch) * size_t(b.t_max), 1);
    b.lang_tags = tags;
    for (size_t i = 0; i < seqs.size(); ++i) {
        const auto& s = seqs[i];
        for (int t = 0; t < s.n_tokens; ++t) {
            std::copy(s.windows[size_t(t)].begin(), s.windows[size_t(t)].end(),
                      b.data.begin() + (i * size_t(b.t_max) + size_t(t)) * win_px);
            b.pad_mask[i * size_t(b.t_max) + size_t(t)] = 0;
        }
    }
    return b;
}

}  // namespace pixelrep
