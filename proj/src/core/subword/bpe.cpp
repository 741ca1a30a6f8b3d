#include "core/subword/bpe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "core/util/error.hpp"
#include "core/util/io.hpp"
#include "core/util/utf8.hpp"

namespace pixelrep {

const std::string SegmenterModel::kMarker = "\xE2\x96\x81";  // ▁

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

// marker symbol followed by one symbol per code point
std::vector<std::string> symbolize(const std::string& word) {
    std::vector<std::string> syms{SegmenterModel::kMarker};
    for (char32_t cp : utf8_decode(word)) syms.push_back(utf8_encode(cp));
    return syms;
}

// rightmost-first, non-overlapping application of one merge rule
void apply_merge(std::vector<std::string>& syms, const std::string& left,
                 const std::string& right, const std::string& merged) {
    for (int i = int(syms.size()) - 2; i >= 0; --i) {
        if (syms[size_t(i)] == left && syms[size_t(i) + 1] == right) {
            syms[size_t(i)] = merged;
            syms.erase(syms.begin() + i + 1);
            --i;
        }
    }
}

struct PairCount {
    double freq = 0;
};

}  // namespace

std::map<std::string, double> count_words(const std::vector<std::string>& corpus) {
    std::map<std::string, double> freqs;
    for (const auto& line : corpus) {
        for (const auto& w : split_ws(line)) freqs[w] += 1.0;
    }
    return freqs;
}

SegmenterModel SegmenterModel::train(const std::vector<std::string>& corpus,
                                     uint32_t target_size) {
    require(!corpus.empty(), ErrorCode::InvalidArgument, "training corpus is empty");
    auto freqs = count_words(corpus);
    require(!freqs.empty(), ErrorCode::InvalidArgument, "training corpus has no words");
    return train_weighted(freqs, target_size);
}

SegmenterModel SegmenterModel::train_weighted(const std::map<std::string, double>& word_freqs,
                                              uint32_t target_size) {
    require(!word_freqs.empty(), ErrorCode::InvalidArgument, "training corpus is empty");

    std::vector<std::vector<std::string>> words;
    std::vector<double> wfreq;
    std::map<std::string, double> alpha_set;
    for (const auto& [w, f] : word_freqs) {
        auto syms = symbolize(w);
        for (const auto& s : syms) alpha_set[s] += f;
        words.push_back(std::move(syms));
        wfreq.push_back(f);
    }

    SegmenterModel model;
    for (const auto& [s, f] : alpha_set) model.alphabet.push_back(s);  // map order = sorted
    require(target_size > model.alphabet.size() + 4, ErrorCode::InvalidArgument,
            "target size ", target_size, " must exceed alphabet (", model.alphabet.size(),
            ") plus 4 specials");

    model.vocab = Vocabulary::with_specials();
    for (const auto& s : model.alphabet) model.vocab.add(s);

    using Pair = std::pair<std::string, std::string>;
    std::map<Pair, double> counts;
    auto bump = [&](const std::vector<std::string>& syms, double f) {
        for (size_t i = 0; i + 1 < syms.size(); ++i)
            counts[{syms[i], syms[i + 1]}] += f;
    };
    for (size_t i = 0; i < words.size(); ++i) bump(words[i], wfreq[i]);

    while (model.vocab.size() < target_size) {
        // highest frequency, ties to the lexicographically smallest pair
        // (std::map iterates pairs in that order already)
        const Pair* best = nullptr;
        double best_freq = 0;
        for (const auto& [p, f] : counts) {
            if (f > best_freq) {
                best_freq = f;
                best = &p;
            }
        }
        if (!best || best_freq < 2.0) break;
        Pair chosen = *best;
        std::string merged = chosen.first + chosen.second;
        for (size_t i = 0; i < words.size(); ++i) {
            auto& syms = words[i];
            bool has = false;
            for (size_t k = 0; k + 1 < syms.size(); ++k) {
                if (syms[k] == chosen.first && syms[k + 1] == chosen.second) {
                    has = true;
                    break;
                }
            }
            if (!has) continue;
            for (size_t k = 0; k + 1 < syms.size(); ++k)
                counts[{syms[k], syms[k + 1]}] -= wfreq[i];
            apply_merge(syms, chosen.first, chosen.second, merged);
            bump(syms, wfreq[i]);
        }
        counts.erase(chosen);
        model.merges.push_back({chosen.first, chosen.second});
        model.vocab.add(merged);
    }
    return model;
}

void SegmenterModel::rebuild_index() const {
    rank_.clear();
    for (uint32_t r = 0; r < merges.size(); ++r)
        rank_.emplace(std::make_pair(merges[r].left, merges[r].right), r);
    rank_built_ = true;
}

std::vector<std::string> SegmenterModel::encode_pieces(const std::string& text) const {
    if (!rank_built_) rebuild_index();
    std::vector<std::string> out;
    for (const auto& w : split_ws(text)) {
        auto syms = symbolize(w);
        for (;;) {
            uint32_t best_rank = UINT32_MAX;
            for (size_t i = 0; i + 1 < syms.size(); ++i) {
                auto it = rank_.find({syms[i], syms[i + 1]});
                if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
            }
            if (best_rank == UINT32_MAX) break;
            const MergeRule& r = merges[best_rank];
            apply_merge(syms, r.left, r.right, r.merged());
        }
        out.insert(out.end(), syms.begin(), syms.end());
    }
    return out;
}

std::vector<uint32_t> SegmenterModel::encode(const std::string& text) const {
    std::vector<uint32_t> ids;
    for (const auto& p : encode_pieces(text)) ids.push_back(vocab.id(p));
    return ids;
}

std::string SegmenterModel::decode(const std::vector<uint32_t>& ids) const {
    std::string joined;
    for (uint32_t id : ids) {
        if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
        if (id == Vocabulary::kUnk) {
            joined += "\xE2\x81\x87";  // U+2047, stands in for lost content
            continue;
        }
        joined += vocab.token(id);
    }
    std::string out;
    size_t i = 0;
    while (i < joined.size()) {
        if (joined.compare(i, kMarker.size(), kMarker) == 0) {
            if (!out.empty()) out += ' ';
            i += kMarker.size();
        } else {
            out += joined[i++];
        }
    }
    return out;
}

void SegmenterModel::save(const std::string& path) const {
    std::ostringstream os;
    os << "pixelrep-bpe 1 alphabet=" << alphabet.size() << " merges=" << merges.size()
       << " vocab=" << vocab.size() << "\n";
    for (const auto& m : merges) os << "M " << m.left << " " << m.right << "\n";
    for (uint32_t id = 0; id < vocab.size(); ++id) os << "V " << id << " " << vocab.token(id) << "\n";
    write_text_file(path, os.str());
}

SegmenterModel SegmenterModel::load(const std::string& path) {
    auto lines = read_lines(path);
    require(!lines.empty(), ErrorCode::Io, "empty segmenter file: ", path);
    std::istringstream hdr(lines[0]);
    std::string magic;
    int version = 0;
    hdr >> magic >> version;
    require(magic == "pixelrep-bpe" && version == 1, ErrorCode::Io,
            "unrecognized segmenter file: ", path);
    size_t n_alpha = 0, n_merges = 0, n_vocab = 0;
    std::string field;
    while (hdr >> field) {
        auto eq = field.find('=');
        require(eq != std::string::npos, ErrorCode::Io, "bad header field: ", field);
        size_t v = size_t(std::stoull(field.substr(eq + 1)));
        auto key = field.substr(0, eq);
        if (key == "alphabet") n_alpha = v;
        else if (key == "merges") n_merges = v;
        else if (key == "vocab") n_vocab = v;
    }
    SegmenterModel m;
    size_t ln = 1;
    for (size_t i = 0; i < n_merges; ++i, ++ln) {
        require(ln < lines.size(), ErrorCode::Io, "truncated segmenter file");
        std::istringstream is(lines[ln]);
        std::string tag;
        MergeRule r;
        is >> tag >> r.left >> r.right;
        require(tag == "M" && !r.left.empty() && !r.right.empty(), ErrorCode::Io,
                "bad merge line ", ln);
        m.merges.push_back(r);
    }
    for (size_t i = 0; i < n_vocab; ++i, ++ln) {
        require(ln < lines.size(), ErrorCode::Io, "truncated segmenter file");
        std::istringstream is(lines[ln]);
        std::string tag, tok;
        uint32_t id;
        is >> tag >> id >> tok;
        require(tag == "V" && id == m.vocab.size(), ErrorCode::Io, "bad vocab line ", ln);
        m.vocab.add(tok);
        if (id >= 4 && id < 4 + n_alpha) m.alphabet.push_back(tok);
    }
    require(m.vocab.size() == n_vocab, ErrorCode::Io, "vocab count mismatch in ", path);
    return m;
}

SegmenterModel build_joint(const std::map<std::string, std::vector<std::string>>& corpora,
                           uint32_t total_size, double temperature) {
    require(total_size > 0, ErrorCode::InvalidArgument, "joint vocabulary size must be positive");
    require(!corpora.empty(), ErrorCode::InvalidArgument, "no corpora given");
    require(temperature >= 1.0, ErrorCode::InvalidArgument, "temperature must be >= 1");

    double total = 0;
    std::map<std::string, double> sizes;
    for (const auto& [lang, lines] : corpora) {
        sizes[lang] = double(lines.size());
        total += double(lines.size());
    }
    require(total > 0, ErrorCode::InvalidArgument, "all corpora are empty");

    double norm = 0;
    std::map<std::string, double> share;
    for (const auto& [lang, n] : sizes) {
        if (n == 0) continue;
        share[lang] = std::pow(n / total, 1.0 / temperature);
        norm += share[lang];
    }
    std::map<std::string, double> word_freqs;
    for (const auto& [lang, lines] : corpora) {
        if (sizes[lang] == 0) continue;
        double w = (share[lang] / norm) * total / sizes[lang];
        for (const auto& [word, f] : count_words(lines)) word_freqs[word] += w * f;
    }
    return SegmenterModel::train_weighted(word_freqs, total_size);
}

Vocabulary build_union(const std::vector<SegmenterModel>& models) {
    require(!models.empty(), ErrorCode::InvalidArgument, "no models to union");
    Vocabulary v = Vocabulary::with_specials();
    for (const auto& m : models) {
        for (uint32_t id = 4; id < m.vocab.size(); ++id) v.add(m.vocab.token(id));
    }
    return v;
}

ExpandPlan expand_vocabulary(Vocabulary& base, const Vocabulary& addition) {
    ExpandPlan plan;
    plan.old_size = base.size();
    for (uint32_t id = 4; id < addition.size(); ++id) {
        const std::string& tok = addition.token(id);
        if (!base.contains(tok)) {
            base.add(tok);
            plan.new_tokens.push_back(tok);
        }
    }
    plan.new_size = base.size();
    return plan;
}

}  // namespace pixelrep
