#include "core/model/model.hpp"

#include <cmath>

#include "core/subword/vocab.hpp"
#include "core/util/error.hpp"

namespace pixelrep {

namespace {

template <typename T>
void fill_gauss(Tensor<T>& t, Rng& rng, double std_dev) {
    for (auto& v : t.values()) v = T(rng.gauss() * std_dev);
}

template <typename T>
void fill_uniform(Tensor<T>& t, Rng& rng, double limit) {
    for (auto& v : t.values()) v = T(rng.uniform(-limit, limit));
}

}  // namespace

template <typename T>
Tensor<T> Model<T>::param(const std::string& name, Shape shape) {
    Tensor<T> t(std::move(shape), T(0), /*requires_grad=*/true);
    params_.emplace_back(name, t);
    return t;
}

template <typename T>
Model<T>::Model(ModelConfig cfg, Rng init_rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int64_t d = cfg_.d_model;

    auto xavier = [&](Tensor<T>& t, int64_t fan_in, int64_t fan_out) {
        fill_uniform(t, init_rng, std::sqrt(6.0 / double(fan_in + fan_out)));
    };

    if (cfg_.pixel()) {
        const int64_t ch = cfg_.conv_channels;
        const int64_t flat = ch * (cfg_.window.h - 2) * cfg_.window.w;
        conv_w_ = param("src.conv.w", {ch, 1, 3, 1});
        fill_gauss(conv_w_, init_rng, std::sqrt(2.0 / 3.0));
        conv_b_ = param("src.conv.b", {ch});
        bn_g_ = param("src.bn.g", {ch});
        std::fill(bn_g_.values().begin(), bn_g_.values().end(), T(1));
        bn_b_ = param("src.bn.b", {ch});
        proj_w_ = param("src.proj.w", {flat, d});
        xavier(proj_w_, flat, d);
        proj_b_ = param("src.proj.b", {d});
        bn_state_.init(ch);
    } else {
        src_table_ = param("src.table", {cfg_.v_src, d});
        fill_gauss(src_table_, init_rng, 1.0 / std::sqrt(double(d)));
    }

    tgt_table_ = param("tgt.table", {cfg_.v_tgt, d});
    fill_gauss(tgt_table_, init_rng, 1.0 / std::sqrt(double(d)));
    if (!cfg_.tied_output) {
        out_w_ = param("out.w", {d, cfg_.v_tgt});
        xavier(out_w_, d, cfg_.v_tgt);
        out_b_ = param("out.b", {cfg_.v_tgt});
    }

    auto make_attention = [&](const std::string& prefix) {
        AttentionParams a;
        a.wq = param(prefix + ".wq", {d, d});
        xavier(a.wq, d, d);
        a.bq = param(prefix + ".bq", {d});
        a.wk = param(prefix + ".wk", {d, d});
        xavier(a.wk, d, d);
        a.bk = param(prefix + ".bk", {d});
        a.wv = param(prefix + ".wv", {d, d});
        xavier(a.wv, d, d);
        a.bv = param(prefix + ".bv", {d});
        a.wo = param(prefix + ".wo", {d, d});
        xavier(a.wo, d, d);
        a.bo = param(prefix + ".bo", {d});
        return a;
    };
    auto make_norm = [&](const std::string& name, Tensor<T>& g, Tensor<T>& b) {
        g = param(name + ".g", {d});
        std::fill(g.values().begin(), g.values().end(), T(1));
        b = param(name + ".b", {d});
    };
    auto make_layer = [&](const std::string& prefix, bool cross) {
        LayerParams l;
        l.has_cross = cross;
        make_norm(prefix + ".ln1", l.ln1_g, l.ln1_b);
        l.self_attn = make_attention(prefix + (cross ? ".self" : ".attn"));
        if (cross) {
            make_norm(prefix + ".ln2", l.ln2_g, l.ln2_b);
            l.cross_attn = make_attention(prefix + ".cross");
            make_norm(prefix + ".ln3", l.ln3_g, l.ln3_b);
        } else {
            make_norm(prefix + ".ln2", l.ln2_g, l.ln2_b);
        }
        l.ff_w1 = param(prefix + ".ff.w1", {d, cfg_.ff_width});
        xavier(l.ff_w1, d, cfg_.ff_width);
        l.ff_b1 = param(prefix + ".ff.b1", {cfg_.ff_width});
        l.ff_w2 = param(prefix + ".ff.w2", {cfg_.ff_width, d});
        xavier(l.ff_w2, cfg_.ff_width, d);
        l.ff_b2 = param(prefix + ".ff.b2", {d});
        return l;
    };

    for (int64_t i = 0; i < cfg_.enc_layers; ++i)
        enc_layers_.push_back(make_layer("enc." + std::to_string(i), false));
    for (int64_t i = 0; i < cfg_.dec_layers; ++i)
        dec_layers_.push_back(make_layer("dec." + std::to_string(i), true));
    make_norm("enc.final", enc_final_g_, enc_final_b_);
    make_norm("dec.final", dec_final_g_, dec_final_b_);

    pe_.resize(size_t(cfg_.max_positions) * size_t(d));
    for (int64_t pos = 0; pos < cfg_.max_positions; ++pos) {
        for (int64_t i = 0; i < d; i += 2) {
            double angle = double(pos) / std::pow(10000.0, double(i) / double(d));
            pe_[size_t(pos * d + i)] = T(std::sin(angle));
            if (i + 1 < d) pe_[size_t(pos * d + i + 1)] = T(std::cos(angle));
        }
    }
}

template <typename T>
Tensor<T> Model<T>::linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    int64_t in = x.dim(x.ndim() - 1);
    int64_t rows = x.numel() / in;
    Tensor<T> flat = ops::reshape(x, {rows, in});
    Tensor<T> y = ops::matmul(flat, w);
    if (b.defined()) y = ops::add(y, b);
    Shape out_shape = x.shape();
    out_shape.back() = w.dim(1);
    return ops::reshape(y, out_shape);
}

template <typename T>
Tensor<T> Model<T>::attention(const Tensor<T>& xq, const Tensor<T>& xkv, const uint8_t* key_pad,
                              bool causal, const AttentionParams& p, bool training, Rng& rng) {
    const int64_t B = xq.dim(0), Tq = xq.dim(1), d = cfg_.d_model;
    const int64_t Tk = xkv.dim(1);
    const int64_t H = cfg_.heads, dh = d / H;

    Tensor<T> q = linear(xq, p.wq, p.bq);
    Tensor<T> k = linear(xkv, p.wk, p.bk);
    Tensor<T> v = linear(xkv, p.wv, p.bv);
    Tensor<T> q4 = ops::permute(ops::reshape(q, {B, Tq, H, dh}), {0, 2, 1, 3});
    Tensor<T> k4t = ops::permute(ops::reshape(k, {B, Tk, H, dh}), {0, 2, 3, 1});
    Tensor<T> v4 = ops::permute(ops::reshape(v, {B, Tk, H, dh}), {0, 2, 1, 3});

    Tensor<T> scores = ops::scale(ops::matmul(q4, k4t), T(1.0 / std::sqrt(double(dh))));
    Tensor<T> attn = ops::attention_softmax(scores, key_pad, causal);
    attn = ops::dropout(attn, cfg_.dropout, rng, training);
    Tensor<T> ctx = ops::matmul(attn, v4);  // [B,H,Tq,dh]
    ctx = ops::reshape(ops::permute(ctx, {0, 2, 1, 3}), {B, Tq, d});
    return linear(ctx, p.wo, p.bo);
}

template <typename T>
Tensor<T> Model<T>::add_positions(const Tensor<T>& x) {
    const int64_t B = x.dim(0), L = x.dim(1), d = x.dim(2);
    require(L <= cfg_.max_positions, ErrorCode::InvalidArgument, "sequence length ", L,
            " exceeds max_positions ", cfg_.max_positions);
    std::vector<T> tile(size_t(B * L * d));
    for (int64_t b = 0; b < B; ++b)
        std::copy_n(pe_.data(), size_t(L * d), tile.data() + b * L * d);
    return ops::add(x, Tensor<T>::from({B, L, d}, std::move(tile)));
}

template <typename T>
Tensor<T> Model<T>::conv_block(const Tensor<T>& windows, bool training, bool bn_update) {
    require(cfg_.pixel(), ErrorCode::InvalidArgument, "conv block on a subword model");
    require(windows.ndim() == 4 && windows.dim(1) == 1 && windows.dim(2) == cfg_.window.h &&
                windows.dim(3) == cfg_.window.w,
            ErrorCode::InvalidArgument, "window batch shape ", shape_str(windows.shape()),
            " does not match config [*,1,", cfg_.window.h, ",", cfg_.window.w, "]");
    Tensor<T> c = ops::conv2d(windows, conv_w_, conv_b_);
    Tensor<T> n = ops::batchnorm2d(c, bn_g_, bn_b_, bn_state_, training && bn_update);
    Tensor<T> r = ops::relu(n);
    const int64_t M = windows.dim(0);
    Tensor<T> flat = ops::reshape(r, {M, r.numel() / M});
    return ops::add(ops::matmul(flat, proj_w_), proj_b_);
}

template <typename T>
Tensor<T> Model<T>::blank_window_embedding() {
    Tensor<T> blank({1, 1, cfg_.window.h, cfg_.window.w});
    return conv_block(blank, /*training=*/false, /*bn_update=*/false);
}

template <typename T>
Tensor<T> Model<T>::pixel_embed_windows(const Tensor<T>& windows, bool training) {
    return conv_block(windows, training, training);
}

template <typename T>
Tensor<T> Model<T>::pixel_conv_activations(const Tensor<T>& windows) {
    require(cfg_.pixel(), ErrorCode::InvalidArgument, "conv activations on a subword model");
    Tensor<T> c = ops::conv2d(windows, conv_w_, conv_b_);
    Tensor<T> n = ops::batchnorm2d(c, bn_g_, bn_b_, bn_state_, false);
    return ops::relu(n);
}

template <typename T>
Tensor<T> Model<T>::embed_source(const Batch<T>& batch, bool training, Rng& rng) {
    const int64_t B = batch.bsz, Ts = batch.src_len, d = cfg_.d_model;
    Tensor<T> x;
    if (cfg_.pixel()) {
        require(batch.windows.defined(), ErrorCode::InvalidArgument, "batch has no windows");
        require(int64_t(batch.gather.size()) == B * Ts, ErrorCode::InvalidArgument,
                "gather map size mismatch");
        // blank first so its normalization sees pre-update running statistics
        Tensor<T> blank = blank_window_embedding();
        Tensor<T> real = conv_block(batch.windows, training, training);
        Tensor<T> table = ops::concat<T>({real, blank}, 0);
        x = ops::reshape(ops::embedding_lookup(table, batch.gather), {B, Ts, d});
    } else {
        require(int64_t(batch.src_ids.size()) == B * Ts, ErrorCode::InvalidArgument,
                "src_ids size mismatch");
        x = ops::reshape(ops::embedding_lookup(src_table_, batch.src_ids), {B, Ts, d});
        x = ops::scale(x, T(std::sqrt(double(d))));
    }
    x = add_positions(x);
    return ops::dropout(x, cfg_.dropout, rng, training);
}

template <typename T>
Tensor<T> Model<T>::encode(const Tensor<T>& src, const uint8_t* src_pad, bool training,
                           Rng& rng) {
    Tensor<T> x = src;
    for (const auto& l : enc_layers_) {
        Tensor<T> h = ops::layernorm(x, l.ln1_g, l.ln1_b);
        Tensor<T> a = attention(h, h, src_pad, false, l.self_attn, training, rng);
        x = ops::add(x, ops::dropout(a, cfg_.dropout, rng, training));
        Tensor<T> h2 = ops::layernorm(x, l.ln2_g, l.ln2_b);
        Tensor<T> f = linear(ops::relu(linear(h2, l.ff_w1, l.ff_b1)), l.ff_w2, l.ff_b2);
        x = ops::add(x, ops::dropout(f, cfg_.dropout, rng, training));
    }
    return ops::layernorm(x, enc_final_g_, enc_final_b_);
}

template <typename T>
Tensor<T> Model<T>::output_logits(const Tensor<T>& h) {
    if (cfg_.tied_output) {
        Tensor<T> wt = ops::permute(tgt_table_, {1, 0});  // [d, V]
        int64_t d = h.dim(h.ndim() - 1);
        int64_t rows = h.numel() / d;
        Tensor<T> y = ops::matmul(ops::reshape(h, {rows, d}), wt);
        Shape out_shape = h.shape();
        out_shape.back() = cfg_.v_tgt;
        return ops::reshape(y, out_shape);
    }
    return linear(h, out_w_, out_b_);
}

template <typename T>
Tensor<T> Model<T>::decode(const Tensor<T>& memory, const uint8_t* src_pad, int64_t src_len,
                           const std::vector<int64_t>& tgt_in, int64_t tgt_len, bool training,
                           Rng& rng) {
    (void)src_len;
    const int64_t B = memory.dim(0), d = cfg_.d_model;
    require(int64_t(tgt_in.size()) == B * tgt_len, ErrorCode::InvalidArgument,
            "tgt_in size mismatch");
    std::vector<uint8_t> tgt_pad(tgt_in.size());
    for (size_t i = 0; i < tgt_in.size(); ++i)
        tgt_pad[i] = tgt_in[i] == int64_t(Vocabulary::kPad) ? 1 : 0;

    Tensor<T> x = ops::reshape(ops::embedding_lookup(tgt_table_, tgt_in), {B, tgt_len, d});
    x = ops::scale(x, T(std::sqrt(double(d))));
    x = add_positions(x);
    x = ops::dropout(x, cfg_.dropout, rng, training);

    for (const auto& l : dec_layers_) {
        Tensor<T> h = ops::layernorm(x, l.ln1_g, l.ln1_b);
        Tensor<T> a = attention(h, h, tgt_pad.data(), true, l.self_attn, training, rng);
        x = ops::add(x, ops::dropout(a, cfg_.dropout, rng, training));
        Tensor<T> h2 = ops::layernorm(x, l.ln2_g, l.ln2_b);
        Tensor<T> c = attention(h2, memory, src_pad, false, l.cross_attn, training, rng);
        x = ops::add(x, ops::dropout(c, cfg_.dropout, rng, training));
        Tensor<T> h3 = ops::layernorm(x, l.ln3_g, l.ln3_b);
        Tensor<T> f = linear(ops::relu(linear(h3, l.ff_w1, l.ff_b1)), l.ff_w2, l.ff_b2);
        x = ops::add(x, ops::dropout(f, cfg_.dropout, rng, training));
    }
    x = ops::layernorm(x, dec_final_g_, dec_final_b_);
    return output_logits(x);
}

template <typename T>
Tensor<T> Model<T>::loss(const Batch<T>& batch, bool training, Rng& rng) {
    Tensor<T> src = embed_source(batch, training, rng);
    Tensor<T> mem = encode(src, batch.src_pad.data(), training, rng);
    Tensor<T> logits =
        decode(mem, batch.src_pad.data(), batch.src_len, batch.tgt_in, batch.tgt_len, training, rng);
    Tensor<T> flat = ops::reshape(logits, {batch.bsz * batch.tgt_len, cfg_.v_tgt});
    return ops::cross_entropy_label_smoothed(flat, batch.tgt_out, T(cfg_.label_smoothing),
                                             int64_t(Vocabulary::kPad));
}

template <typename T>
double Model<T>::eval_nll(const Batch<T>& batch) {
    Tape<T>* prev = Tape<T>::current();
    Tape<T>::current() = nullptr;
    Rng rng(0);
    Tensor<T> src = embed_source(batch, false, rng);
    Tensor<T> mem = encode(src, batch.src_pad.data(), false, rng);
    Tensor<T> logits =
        decode(mem, batch.src_pad.data(), batch.src_len, batch.tgt_in, batch.tgt_len, false, rng);
    Tensor<T> flat = ops::reshape(logits, {batch.bsz * batch.tgt_len, cfg_.v_tgt});
    Tensor<T> nll = ops::cross_entropy_label_smoothed(flat, batch.tgt_out, T(0),
                                                      int64_t(Vocabulary::kPad));
    Tape<T>::current() = prev;
    return double(nll.item());
}

template <typename T>
std::vector<T> Model<T>::mean_pooled_repr(const Batch<T>& batch) {
    Tape<T>* prev = Tape<T>::current();
    Tape<T>::current() = nullptr;
    const int64_t d = cfg_.d_model;
    std::vector<T> pooled(size_t(d), T(0));
    int64_t count = 0;
    if (cfg_.pixel()) {
        Tensor<T> vecs = conv_block(batch.windows, false, false);  // [M, d]
        for (int64_t m = 0; m < vecs.dim(0); ++m) {
            for (int64_t j = 0; j < d; ++j) pooled[size_t(j)] += vecs.data()[m * d + j];
            ++count;
        }
    } else {
        for (size_t i = 0; i < batch.src_ids.size(); ++i) {
            if (batch.src_pad[i]) continue;
            const T* row = src_table_.data() + batch.src_ids[i] * d;
            for (int64_t j = 0; j < d; ++j) pooled[size_t(j)] += row[j];
            ++count;
        }
    }
    Tape<T>::current() = prev;
    require(count > 0, ErrorCode::InvalidArgument, "no non-pad source positions to pool");
    for (auto& v : pooled) v /= T(count);
    return pooled;
}

template <typename T>
std::vector<Tensor<T>> Model<T>::param_tensors() {
    std::vector<Tensor<T>> out;
    out.reserve(params_.size());
    for (auto& [name, t] : params_) out.push_back(t);
    return out;
}

template <typename T>
int64_t Model<T>::parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

template <typename T>
void Model<T>::zero_grads() {
    for (auto& [name, t] : params_) t.zero_grad();
}

template <typename T>
void Model<T>::expand_source_vocab(int64_t new_v_src, Rng& rng) {
    require(!cfg_.pixel(), ErrorCode::InvalidArgument, "pixel models are vocabulary-free");
    const int64_t old_v = cfg_.v_src, d = cfg_.d_model;
    require(new_v_src >= old_v, ErrorCode::InvalidArgument, "vocabulary cannot shrink: ", old_v,
            " -> ", new_v_src);
    if (new_v_src == old_v) return;
    Tensor<T> grown({new_v_src, d}, T(0), /*requires_grad=*/true);
    std::copy_n(src_table_.data(), size_t(old_v * d), grown.data());
    std::vector<double> mean(size_t(d), 0.0);
    for (int64_t r = 0; r < old_v; ++r)
        for (int64_t j = 0; j < d; ++j) mean[size_t(j)] += double(src_table_.data()[r * d + j]);
    for (auto& m : mean) m /= double(old_v);
    for (int64_t r = old_v; r < new_v_src; ++r)
        for (int64_t j = 0; j < d; ++j)
            grown.data()[r * d + j] = T(mean[size_t(j)] + 0.01 * rng.gauss());
    src_table_ = grown;
    for (auto& [name, t] : params_) {
        if (name == "src.table") t = grown;
    }
    cfg_.v_src = new_v_src;
}

template <typename T>
bool Model<T>::is_source_embedder_param(const std::string& name) const {
    return name.rfind("src.", 0) == 0;
}

template class Model<float>;
template class Model<double>;

}  // namespace pixelrep
