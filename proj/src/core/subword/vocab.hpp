#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace pixelrep {

// Token inventory with fixed special ids at 0..3.
class Vocabulary {
public:
    static constexpr uint32_t kPad = 0;
    static constexpr uint32_t kBos = 1;
    static constexpr uint32_t kEos = 2;
    static constexpr uint32_t kUnk = 3;

    static Vocabulary with_specials();

    uint32_t size() const { return uint32_t(token_of_.size()); }
    bool contains(const std::string& tok) const { return id_of_.count(tok) != 0; }
    uint32_t id(const std::string& tok) const {
        auto it = id_of_.find(tok);
        return it == id_of_.end() ? kUnk : it->second;
    }
    const std::string& token(uint32_t id) const { return token_of_.at(id); }
    const std::vector<std::string>& tokens() const { return token_of_; }

    // appends; returns the id (existing id if already present)
    uint32_t add(const std::string& tok);

    uint64_t fingerprint() const;

private:
    std::unordered_map<std::string, uint32_t> id_of_;
    std::vector<std::string> token_of_;
};

}  // namespace pixelrep
