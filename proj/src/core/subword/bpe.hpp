#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/subword/vocab.hpp"

namespace pixelrep {

struct MergeRule {
    std::string left, right;
    std::string merged() const { return left + right; }
};

// Greedy pairwise BPE over whitespace-pretokenized words. Each word gets a
// leading boundary-marker symbol; merges apply rightmost-first within a word.
class SegmenterModel {
public:
    static const std::string kMarker;  // U+2581

    std::vector<MergeRule> merges;
    std::vector<std::string> alphabet;  // sorted initial symbols, marker included
    Vocabulary vocab;                   // specials + alphabet + merge outputs

    static SegmenterModel train(const std::vector<std::string>& corpus, uint32_t target_size);
    static SegmenterModel train_weighted(const std::map<std::string, double>& word_freqs,
                                         uint32_t target_size);

    std::vector<std::string> encode_pieces(const std::string& text) const;
    std::vector<uint32_t> encode(const std::string& text) const;  // no BOS/EOS
    std::string decode(const std::vector<uint32_t>& ids) const;

    void save(const std::string& path) const;
    static SegmenterModel load(const std::string& path);

private:
    void rebuild_index() const;
    mutable std::map<std::pair<std::string, std::string>, uint32_t> rank_;  // lazily built
    mutable bool rank_built_ = false;
};

// Temperature-weighted joint training over per-language corpora: language l
// contributes word frequencies scaled by p_l * N / n_l so that T=1 reduces to
// plain concatenation.
SegmenterModel build_joint(const std::map<std::string, std::vector<std::string>>& corpora,
                           uint32_t total_size, double temperature);

// Set union of per-model vocabularies; ids assigned by (model order, id order).
Vocabulary build_union(const std::vector<SegmenterModel>& models);

struct ExpandPlan {
    uint32_t old_size = 0;
    uint32_t new_size = 0;
    std::vector<std::string> new_tokens;  // appended in id order
};

// Appends addition-only tokens to base; existing ids never move.
ExpandPlan expand_vocabulary(Vocabulary& base, const Vocabulary& addition);

std::map<std::string, double> count_words(const std::vector<std::string>& corpus);

}  // namespace pixelrep
