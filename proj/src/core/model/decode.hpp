#pragma once

#include <vector>

#include "core/model/model.hpp"

namespace pixelrep {

struct Translation {
    std::vector<int64_t> ids;  // without BOS/EOS
    double score = 0;          // length-normalized log probability
};

// Greedy when beam == 1; otherwise length-normalized beam search whose
// candidate pool always includes the greedy rollout.
template <typename T>
Translation translate(Model<T>& model, const Batch<T>& source, int beam, int max_len);

}  // namespace pixelrep
