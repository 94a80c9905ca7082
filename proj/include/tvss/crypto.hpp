#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tvss {

using Bytes = std::vector<uint8_t>;
using Digest = std::array<uint8_t, 32>;
using Signature = std::array<uint8_t, 64>;
using VerificationKey = std::array<uint8_t, 32>;
using Seed = std::array<uint8_t, 32>;

using ByteView = std::span<const uint8_t>;

struct DigestHash {
    size_t operator()(const Digest& d) const noexcept {
        size_t h = 0;
        for (int i = 0; i < 8; ++i) h = (h << 8) | d[i];
        return h;
    }
};

struct SigningKeyPair {
    Seed seed{};
    VerificationKey vk{};
    std::array<uint8_t, 64> sk{};  // libsodium expanded form: seed || vk
};

// Must run once before anything else touches libsodium. Idempotent.
void crypto_init();

Digest hash(ByteView input);
Digest hash(std::string_view input);
Digest hash_pair(const Digest& a, const Digest& b);

SigningKeyPair keygen(const Seed& seed);
Signature sign(const SigningKeyPair& key, ByteView msg);
// Never throws; wrong sizes or invalid points simply fail.
bool verify(ByteView vk, ByteView msg, ByteView sig);

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex);  // throws std::invalid_argument

template <size_t N>
std::array<uint8_t, N> array_from_hex(std::string_view hex) {
    Bytes b = from_hex(hex);
    if (b.size() != N) throw std::invalid_argument("hex length mismatch");
    std::array<uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

class Entropy {
public:
    virtual ~Entropy() = default;
    virtual Seed next() = 0;
    uint64_t next_u64();
};

class OsEntropy final : public Entropy {
public:
    Seed next() override;
};

// Block i is SHA-256(seed || i as 8-byte big-endian).
class SeededEntropy final : public Entropy {
public:
    explicit SeededEntropy(uint64_t seed);
    explicit SeededEntropy(const Seed& seed) : seed_(seed) {}
    Seed next() override;

private:
    Seed seed_{};
    uint64_t counter_ = 0;
};

std::unique_ptr<Entropy> make_entropy(std::optional<uint64_t> seed);

// Independent sub-stream seed: first 8 bytes of H(be64(seed) || label).
uint64_t derive_seed(uint64_t seed, std::string_view label);

}  // namespace tvss
