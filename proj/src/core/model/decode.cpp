#include "core/model/decode.hpp"

#include <algorithm>
#include <cmath>

#include "core/subword/vocab.hpp"
#include "core/util/error.hpp"

namespace pixelrep {

namespace {

template <typename T>
std::vector<double> last_row_log_probs(const Tensor<T>& logits, int64_t tgt_len, int64_t v) {
    const T* row = logits.data() + (tgt_len - 1) * v;
    double mx = double(row[0]);
    for (int64_t j = 1; j < v; ++j) mx = std::max(mx, double(row[j]));
    double se = 0;
    for (int64_t j = 0; j < v; ++j) se += std::exp(double(row[j]) - mx);
    double lse = mx + std::log(se);
    std::vector<double> lp(static_cast<size_t>(v));
    for (int64_t j = 0; j < v; ++j) lp[size_t(j)] = double(row[j]) - lse;
    return lp;
}

struct Hyp {
    std::vector<int64_t> ids;  // starts with BOS
    double logp = 0;
    bool finished = false;

    double normalized() const {
        size_t generated = ids.size() - 1;
        return generated == 0 ? -1e30 : logp / double(generated);
    }
};

template <typename T>
std::vector<double> step_log_probs(Model<T>& model, const Tensor<T>& memory,
                                   const uint8_t* src_pad, int64_t src_len,
                                   const std::vector<int64_t>& prefix) {
    Rng rng(0);
    Tensor<T> logits = model.decode(memory, src_pad, src_len, prefix, int64_t(prefix.size()),
                                    false, rng);
    return last_row_log_probs(logits, int64_t(prefix.size()), model.config().v_tgt);
}

template <typename T>
Hyp greedy_rollout(Model<T>& model, const Tensor<T>& memory, const uint8_t* src_pad,
                   int64_t src_len, int max_len) {
    Hyp h;
    h.ids = {int64_t(Vocabulary::kBos)};
    for (int step = 0; step < max_len; ++step) {
        auto lp = step_log_probs(model, memory, src_pad, src_len, h.ids);
        int64_t best = int64_t(Vocabulary::kEos);
        double best_lp = -1e30;
        for (int64_t j = 0; j < int64_t(lp.size()); ++j) {
            if (j == int64_t(Vocabulary::kPad) || j == int64_t(Vocabulary::kBos)) continue;
            if (lp[size_t(j)] > best_lp) {
                best_lp = lp[size_t(j)];
                best = j;
            }
        }
        h.ids.push_back(best);
        h.logp += best_lp;
        if (best == int64_t(Vocabulary::kEos)) {
            h.finished = true;
            break;
        }
    }
    return h;
}

Translation to_translation(const Hyp& h) {
    Translation t;
    t.score = h.normalized();
    for (size_t i = 1; i < h.ids.size(); ++i) {
        if (h.ids[i] == int64_t(Vocabulary::kEos)) break;
        t.ids.push_back(h.ids[i]);
    }
    return t;
}

}  // namespace

template <typename T>
Translation translate(Model<T>& model, const Batch<T>& source, int beam, int max_len) {
    require(source.bsz == 1, ErrorCode::InvalidArgument, "translate expects a single sentence");
    require(source.src_len > 0 && source.real_src_tokens > 0, ErrorCode::InvalidArgument,
            "empty source");
    require(beam >= 1, ErrorCode::InvalidArgument, "beam must be >= 1");
    require(max_len >= 1, ErrorCode::InvalidArgument, "max_len must be >= 1");

    Tape<T>* prev = Tape<T>::current();
    Tape<T>::current() = nullptr;
    Rng rng(0);
    Tensor<T> src = model.embed_source(source, false, rng);
    Tensor<T> memory = model.encode(src, source.src_pad.data(), false, rng);
    const uint8_t* pad = source.src_pad.data();

    Hyp greedy = greedy_rollout(model, memory, pad, source.src_len, max_len);
    Translation best = to_translation(greedy);
    if (beam == 1) {
        Tape<T>::current() = prev;
        return best;
    }

    std::vector<Hyp> hyps{Hyp{{int64_t(Vocabulary::kBos)}, 0.0, false}};
    for (int step = 0; step < max_len; ++step) {
        std::vector<Hyp> cands;
        bool any_open = false;
        for (const auto& h : hyps) {
            if (h.finished) {
                cands.push_back(h);
                continue;
            }
            any_open = true;
            auto lp = step_log_probs(model, memory, pad, source.src_len, h.ids);
            // top `beam` continuations of this hypothesis
            std::vector<int64_t> order(lp.size());
            for (size_t j = 0; j < lp.size(); ++j) order[j] = int64_t(j);
            std::partial_sort(order.begin(), order.begin() + std::min<size_t>(lp.size(), size_t(beam) + 2),
                              order.end(),
                              [&](int64_t a, int64_t b) { return lp[size_t(a)] > lp[size_t(b)]; });
            int taken = 0;
            for (int64_t j : order) {
                if (j == int64_t(Vocabulary::kPad) || j == int64_t(Vocabulary::kBos)) continue;
                Hyp nh = h;
                nh.ids.push_back(j);
                nh.logp += lp[size_t(j)];
                nh.finished = j == int64_t(Vocabulary::kEos);
                cands.push_back(std::move(nh));
                if (++taken >= beam) break;
            }
        }
        if (!any_open) break;
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Hyp& a, const Hyp& b) { return a.normalized() > b.normalized(); });
        if (int64_t(cands.size()) > beam) cands.resize(size_t(beam));
        hyps = std::move(cands);
    }

    for (const auto& h : hyps) {
        Translation t = to_translation(h);
        if (t.score > best.score) best = t;
    }
    Tape<T>::current() = prev;
    return best;
}

template Translation translate<float>(Model<float>&, const Batch<float>&, int, int);
template Translation translate<double>(Model<double>&, const Batch<double>&, int, int);

}  // namespace pixelrep
