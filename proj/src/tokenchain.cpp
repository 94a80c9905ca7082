#include "tvss/tokenchain.hpp"

#include <stdexcept>

namespace tvss {

ChainHeads step(const ChainHeads& h) {
    return ChainHeads{hash_pair(h.x, h.r), hash(h.r), h.index + 1};
}

ChainHeads roll_to(const ChainHeads& h, int64_t index) {
    if (index < h.index) throw std::invalid_argument("chain heads cannot roll backwards");
    ChainHeads cur = h;
    while (cur.index < index) cur = step(cur);
    return cur;
}

std::pair<std::vector<Digest>, ChainHeads> extend(const ChainHeads& heads, int64_t n) {
    if (n < 0) throw std::invalid_argument("negative extension");
    std::vector<Digest> ids;
    ids.reserve(static_cast<size_t>(n));
    ChainHeads cur = heads;
    for (int64_t i = 0; i < n; ++i) {
        cur = step(cur);
        ids.push_back(cur.x);
    }
    return {std::move(ids), cur};
}

RevealPair reveal_for(const ChainHeads& heads_at, int64_t revoke_index, int64_t batch_end) {
    if (heads_at.index != revoke_index - 1) throw std::invalid_argument("heads not at revoke_index - 1");
    if (batch_end < revoke_index) throw std::invalid_argument("batch ends before revocation");
    return RevealPair{heads_at.x, heads_at.r, revoke_index, batch_end};
}

std::vector<Digest> derive_revoked(const RevealPair& pair) {
    if (pair.last_index < pair.first_index) return {};
    ChainHeads h{pair.x_prev, pair.r_prev, pair.first_index - 1};
    return extend(h, pair.last_index - pair.first_index + 1).first;
}

Digest derive_at(const RevealPair& pair, int64_t w) {
    if (w < pair.first_index || w > pair.last_index) throw std::out_of_range("window outside revealed range");
    ChainHeads h{pair.x_prev, pair.r_prev, pair.first_index - 1};
    return roll_to(h, w).x;
}

bool linkable(const Digest& id_a, const Digest& id_b) { return hash(id_a) == id_b; }

}  // namespace tvss
