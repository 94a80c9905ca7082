#pragma once

#include <random>

#include "tvss/codec.hpp"

// Random instances for codec properties.
namespace gen {

using namespace tvss;

template <size_t N>
std::array<uint8_t, N> arr(std::mt19937_64& g) {
    std::array<uint8_t, N> a{};
    for (auto& b : a) b = uint8_t(g());
    return a;
}

inline TimeWindow tw(std::mt19937_64& g) {
    const int64_t len = 60 * int64_t(1 + g() % 60);
    const int64_t idx = int64_t(g() % 10'000'000);
    return TimeWindow{idx, idx * len, (idx + 1) * len};
}

inline EnrollmentCert ec(std::mt19937_64& g) { return {arr<32>(g), arr<64>(g)}; }
inline TokenContent content(std::mt19937_64& g) { return {arr<32>(g), tw(g)}; }
inline Token token(std::mt19937_64& g) { return {content(g), arr<64>(g)}; }
inline RsuCert rsu_cert(std::mt19937_64& g) { return {g(), arr<32>(g), arr<8>(g), arr<64>(g)}; }
inline PseudonymCertBody body(std::mt19937_64& g) { return {arr<32>(g), arr<8>(g), tw(g)}; }
inline PseudonymCert pc(std::mt19937_64& g) { return {body(g), arr<64>(g), rsu_cert(g)}; }
inline RevokeNotice notice(std::mt19937_64& g) {
    return {{arr<32>(g), arr<32>(g), int64_t(g() % 1000), int64_t(1000 + g() % 1000)}, arr<64>(g)};
}
inline PcrlEntry entry(std::mt19937_64& g) { return {arr<32>(g), arr<8>(g), int64_t(g() >> 2)}; }
inline PcrlSnapshot snapshot(std::mt19937_64& g) {
    PcrlSnapshot s;
    s.region = arr<8>(g);
    s.window_index = int64_t(g() % 100000);
    s.entries.resize(g() % 5);
    for (auto& e : s.entries) e = arr<32>(g);
    std::sort(s.entries.begin(), s.entries.end());
    s.sigma = arr<64>(g);
    return s;
}
inline TokenReport report(std::mt19937_64& g) {
    return {arr<32>(g), g(), arr<8>(g), int64_t(g() % 100000), arr<32>(g), g()};
}

}  // namespace gen
