#include "tvss/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

namespace tvss {

void crypto_init() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
    });
}

Digest hash(ByteView input) {
    Digest out{};
    crypto_hash_sha256(out.data(), input.data(), input.size());
    return out;
}

Digest hash(std::string_view input) {
    return hash(ByteView(reinterpret_cast<const uint8_t*>(input.data()), input.size()));
}

Digest hash_pair(const Digest& a, const Digest& b) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, a.data(), a.size());
    crypto_hash_sha256_update(&st, b.data(), b.size());
    Digest out{};
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

SigningKeyPair keygen(const Seed& seed) {
    crypto_init();
    SigningKeyPair kp;
    kp.seed = seed;
    crypto_sign_seed_keypair(kp.vk.data(), kp.sk.data(), seed.data());
    return kp;
}

Signature sign(const SigningKeyPair& key, ByteView msg) {
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), key.sk.data());
    return sig;
}

bool verify(ByteView vk, ByteView msg, ByteView sig) {
    if (vk.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES) return false;
    crypto_init();
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), vk.data()) == 0;
}

std::string to_hex(ByteView b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (uint8_t c : b) {
        s.push_back(digits[c >> 4]);
        s.push_back(digits[c & 15]);
    }
    return s;
}

static int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2) throw std::invalid_argument("odd hex length");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit");
        out[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return out;
}

uint64_t Entropy::next_u64() {
    Seed s = next();
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | s[i];
    return v;
}

Seed OsEntropy::next() {
    crypto_init();
    Seed s{};
    randombytes_buf(s.data(), s.size());
    return s;
}

SeededEntropy::SeededEntropy(uint64_t seed) {
    uint8_t buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(seed >> (56 - 8 * i));
    seed_ = hash(ByteView(buf, 8));
}

Seed SeededEntropy::next() {
    uint8_t buf[40];
    std::memcpy(buf, seed_.data(), 32);
    for (int i = 0; i < 8; ++i) buf[32 + i] = static_cast<uint8_t>(counter_ >> (56 - 8 * i));
    ++counter_;
    return hash(ByteView(buf, sizeof buf));
}

std::unique_ptr<Entropy> make_entropy(std::optional<uint64_t> seed) {
    if (seed) return std::make_unique<SeededEntropy>(*seed);
    return std::make_unique<OsEntropy>();
}

uint64_t derive_seed(uint64_t seed, std::string_view label) {
    Bytes in(8);
    for (int i = 0; i < 8; ++i) in[i] = uint8_t(seed >> (56 - 8 * i));
    in.insert(in.end(), label.begin(), label.end());
    Digest d = hash(in);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
    return v;
}

}  // namespace tvss
