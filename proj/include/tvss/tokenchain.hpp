#pragma once

#include <utility>
#include <vector>

#include "tvss/types.hpp"

namespace tvss {

// Chain position equals window index: the id for window w is x_w.
struct ChainHeads {
    Digest x{};
    Digest r{};
    int64_t index = 0;
    bool operator==(const ChainHeads&) const = default;
};

ChainHeads step(const ChainHeads& h);
// Rolls forward to `index` without keeping ids. Throws if index < h.index.
ChainHeads roll_to(const ChainHeads& h, int64_t index);

std::pair<std::vector<Digest>, ChainHeads> extend(const ChainHeads& heads, int64_t n);

RevealPair reveal_for(const ChainHeads& heads_at, int64_t revoke_index, int64_t batch_end);

std::vector<Digest> derive_revoked(const RevealPair& pair);

// Id at window w of a revealed chain; w must lie in [first_index, last_index].
Digest derive_at(const RevealPair& pair, int64_t w);

bool linkable(const Digest& id_a, const Digest& id_b);

}  // namespace tvss
