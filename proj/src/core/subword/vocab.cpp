#include "core/subword/vocab.hpp"

#include "core/util/io.hpp"

namespace pixelrep {

Vocabulary Vocabulary::with_specials() {
    Vocabulary v;
    v.add("<pad>");
    v.add("<s>");
    v.add("</s>");
    v.add("<unk>");
    return v;
}

uint32_t Vocabulary::add(const std::string& tok) {
    auto it = id_of_.find(tok);
    if (it != id_of_.end()) return it->second;
    uint32_t id = uint32_t(token_of_.size());
    id_of_.emplace(tok, id);
    token_of_.push_back(tok);
    return id;
}

uint64_t Vocabulary::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : token_of_) {
        h ^= fnv1a64(t);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace pixelrep
