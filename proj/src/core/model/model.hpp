#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/model/config.hpp"
#include "core/tensor/ops.hpp"
#include "core/tensor/tensor.hpp"
#include "core/util/rng.hpp"

namespace pixelrep {

// One prepared training/inference batch. Pixel batches carry only the real
// (non-pad) windows plus a gather map; index M (one past the last real
// window) selects the shared blank-window embedding for pad slots.
template <typename T>
struct Batch {
    int64_t bsz = 0;
    int64_t src_len = 0;
    int64_t tgt_len = 0;

    Tensor<T> windows;            // [M,1,h,w], pixel mode
    std::vector<int64_t> gather;  // bsz*src_len values in [0, M]

    std::vector<int64_t> src_ids;  // bsz*src_len, subword mode

    std::vector<uint8_t> src_pad;  // bsz*src_len, 1 = pad

    std::vector<int64_t> tgt_in;   // bsz*tgt_len, BOS-shifted
    std::vector<int64_t> tgt_out;  // bsz*tgt_len, PAD where ignored
    std::vector<std::string> langs;

    int64_t real_src_tokens = 0;
    int64_t real_tgt_tokens = 0;
};

template <typename T>
class Model {
public:
    Model(ModelConfig cfg, Rng init_rng);

    const ModelConfig& config() const { return cfg_; }

    // [B, Ts, d_model]: conv block or embedding matrix, plus sinusoidal
    // position encodings and input dropout
    Tensor<T> embed_source(const Batch<T>& batch, bool training, Rng& rng);

    Tensor<T> encode(const Tensor<T>& src, const uint8_t* src_pad, bool training, Rng& rng);

    // teacher-forced logits [B, Tt, V_tgt]
    Tensor<T> decode(const Tensor<T>& memory, const uint8_t* src_pad, int64_t src_len,
                     const std::vector<int64_t>& tgt_in, int64_t tgt_len, bool training,
                     Rng& rng);

    Tensor<T> loss(const Batch<T>& batch, bool training, Rng& rng);

    // label-smoothing-free mean negative log likelihood, for perplexity
    double eval_nll(const Batch<T>& batch);

    // post-projection vectors of the conv block for raw windows [M,1,h,w],
    // running-statistics normalization
    Tensor<T> pixel_embed_windows(const Tensor<T>& windows, bool training);
    // post-ReLU conv feature activations [M, ch, h-2, w]
    Tensor<T> pixel_conv_activations(const Tensor<T>& windows);

    // mean over non-pad positions of the source-side vectors the encoder sees
    std::vector<T> mean_pooled_repr(const Batch<T>& batch);

    std::vector<std::pair<std::string, Tensor<T>>>& named_params() { return params_; }
    std::vector<Tensor<T>> param_tensors();
    int64_t parameter_count() const;
    void zero_grads();

    Tensor<T> source_embedding_table() { return src_table_; }
    BatchNormState<T>& bn_state() { return bn_state_; }

    // subword only: append rows for an expanded vocabulary, mean-initialized
    // with small seeded noise; existing rows are untouched
    void expand_source_vocab(int64_t new_v_src, Rng& rng);

    // named parameters whose gradients constitute the source embedder
    bool is_source_embedder_param(const std::string& name) const;

private:
    struct AttentionParams {
        Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
    };
    struct LayerParams {
        Tensor<T> ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
        AttentionParams self_attn, cross_attn;
        Tensor<T> ff_w1, ff_b1, ff_w2, ff_b2;
        bool has_cross = false;
    };

    Tensor<T> param(const std::string& name, Shape shape);
    void init_params(Rng& rng);
    Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
    Tensor<T> attention(const Tensor<T>& xq, const Tensor<T>& xkv, const uint8_t* key_pad,
                        bool causal, const AttentionParams& p, bool training, Rng& rng);
    Tensor<T> add_positions(const Tensor<T>& x);
    Tensor<T> blank_window_embedding();
    Tensor<T> conv_block(const Tensor<T>& windows, bool training, bool bn_update);
    Tensor<T> output_logits(const Tensor<T>& h);

    ModelConfig cfg_;
    std::vector<std::pair<std::string, Tensor<T>>> params_;

    // pixel embedder
    Tensor<T> conv_w_, conv_b_, bn_g_, bn_b_, proj_w_, proj_b_;
    BatchNormState<T> bn_state_;
    // subword embedder
    Tensor<T> src_table_;

    Tensor<T> tgt_table_;
    Tensor<T> out_w_, out_b_;
    Tensor<T> enc_final_g_, enc_final_b_, dec_final_g_, dec_final_b_;
    std::vector<LayerParams> enc_layers_, dec_layers_;

    std::vector<T> pe_;  // [max_positions, d_model]
};

using ModelF = Model<float>;

}  // namespace pixelrep
