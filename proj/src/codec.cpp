#include "tvss/codec.hpp"

namespace tvss {

RegionId region_from_u64(uint64_t v) {
    RegionId r{};
    for (int i = 0; i < 8; ++i) r[i] = static_cast<uint8_t>(v >> (56 - 8 * i));
    return r;
}

uint64_t region_to_u64(const RegionId& r) {
    uint64_t v = 0;
    for (uint8_t b : r) v = (v << 8) | b;
    return v;
}

void Writer::u32(uint32_t v) {
    for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void Writer::u64(uint64_t v) {
    for (int i = 7; i >= 0; --i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void Writer::bytes(ByteView b) {
    if (b.size() > 0xffffffffu) throw CodecError("field too long");
    u32(static_cast<uint32_t>(b.size()));
    raw(b);
}

uint8_t Reader::u8() {
    need(1);
    return b_[pos_++];
}

uint32_t Reader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | b_[pos_++];
    return v;
}

uint64_t Reader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | b_[pos_++];
    return v;
}

Bytes Reader::bytes() {
    uint32_t n = u32();
    need(n);
    Bytes out(b_.begin() + pos_, b_.begin() + pos_ + n);
    pos_ += n;
    return out;
}

void Reader::expect_tag(uint8_t t) {
    uint8_t got = u8();
    if (got != t) throw CodecError("unexpected type tag " + std::to_string(got));
}

uint8_t Reader::peek() const {
    need(1);
    return b_[pos_];
}

// --- encoders ---

void put(Writer& w, const TimeWindow& v) {
    w.u8(tag::TimeWindow);
    w.i64(v.start_s);
    w.i64(v.end_s);
}

static void put_body(Writer& w, const EnrollmentCert& v) {
    w.u8(tag::EnrollmentCert);
    w.bytes(v.vk);
}

void put(Writer& w, const EnrollmentCert& v) {
    put_body(w, v);
    w.bytes(v.sigma);
}

void put(Writer& w, const TokenContent& v) {
    w.u8(tag::TokenContent);
    w.bytes(v.id);
    put(w, v.tw);
}

void put(Writer& w, const Token& v) {
    w.u8(tag::Token);
    put(w, v.content);
    w.bytes(v.sigma);
}

static void put_body(Writer& w, const RsuCert& v) {
    w.u8(tag::RsuCert);
    w.u64(v.rsu_id);
    w.bytes(v.vk);
    w.bytes(v.region);
}

void put(Writer& w, const RsuCert& v) {
    put_body(w, v);
    w.bytes(v.sigma_ca);
}

void put(Writer& w, const PseudonymCertBody& v) {
    w.u8(tag::PseudonymCertBody);
    w.bytes(v.vk);
    w.bytes(v.region);
    put(w, v.tw);
}

void put(Writer& w, const PseudonymCert& v) {
    w.u8(tag::PseudonymCert);
    put(w, v.body);
    w.bytes(v.sigma_rsu);
    put(w, v.rsu_cert);
}

static void put_body(Writer& w, const RevokeNotice& v) {
    w.u8(tag::RevokeNotice);
    w.bytes(v.pair.x_prev);
    w.bytes(v.pair.r_prev);
    w.i64(v.pair.first_index);
    w.i64(v.pair.last_index);
}

void put(Writer& w, const RevokeNotice& v) {
    put_body(w, v);
    w.bytes(v.sigma);
}

void put(Writer& w, const PcrlEntry& v) {
    w.u8(tag::PcrlEntry);
    w.bytes(v.pc_body_hash);
    w.bytes(v.region);
    w.i64(v.expires_s);
}

static void put_body(Writer& w, const PcrlSnapshot& v) {
    w.u8(tag::PcrlSnapshot);
    w.bytes(v.region);
    w.i64(v.window_index);
    w.u32(static_cast<uint32_t>(v.entries.size() * 32));
    for (const auto& e : v.entries) w.raw(e);
}

void put(Writer& w, const PcrlSnapshot& v) {
    put_body(w, v);
    w.bytes(v.sigma);
}

void put(Writer& w, const TokenReport& v) {
    w.u8(tag::TokenReport);
    w.bytes(v.token_id);
    w.u64(v.rsu_id);
    w.bytes(v.region);
    w.i64(v.window_index);
    w.bytes(v.pc_body_hash);
    w.u64(v.seq);
}

// --- decoders ---

template <>
TimeWindow get<TimeWindow>(Reader& r) {
    r.expect_tag(tag::TimeWindow);
    TimeWindow tw;
    tw.start_s = r.i64();
    tw.end_s = r.i64();
    int64_t len = tw.end_s - tw.start_s;
    if (tw.start_s < 0 || len <= 0 || tw.start_s % len != 0) throw CodecError("malformed time window");
    tw.index = tw.start_s / len;
    return tw;
}

template <>
EnrollmentCert get<EnrollmentCert>(Reader& r) {
    r.expect_tag(tag::EnrollmentCert);
    EnrollmentCert v;
    v.vk = r.fixed<32>();
    v.sigma = r.fixed<64>();
    return v;
}

template <>
TokenContent get<TokenContent>(Reader& r) {
    r.expect_tag(tag::TokenContent);
    TokenContent v;
    v.id = r.fixed<32>();
    v.tw = get<TimeWindow>(r);
    return v;
}

template <>
Token get<Token>(Reader& r) {
    r.expect_tag(tag::Token);
    Token v;
    v.content = get<TokenContent>(r);
    v.sigma = r.fixed<64>();
    return v;
}

template <>
RsuCert get<RsuCert>(Reader& r) {
    r.expect_tag(tag::RsuCert);
    RsuCert v;
    v.rsu_id = r.u64();
    v.vk = r.fixed<32>();
    v.region = r.fixed<8>();
    v.sigma_ca = r.fixed<64>();
    return v;
}

template <>
PseudonymCertBody get<PseudonymCertBody>(Reader& r) {
    r.expect_tag(tag::PseudonymCertBody);
    PseudonymCertBody v;
    v.vk = r.fixed<32>();
    v.region = r.fixed<8>();
    v.tw = get<TimeWindow>(r);
    return v;
}

template <>
PseudonymCert get<PseudonymCert>(Reader& r) {
    r.expect_tag(tag::PseudonymCert);
    PseudonymCert v;
    v.body = get<PseudonymCertBody>(r);
    v.sigma_rsu = r.fixed<64>();
    v.rsu_cert = get<RsuCert>(r);
    return v;
}

template <>
RevokeNotice get<RevokeNotice>(Reader& r) {
    r.expect_tag(tag::RevokeNotice);
    RevokeNotice v;
    v.pair.x_prev = r.fixed<32>();
    v.pair.r_prev = r.fixed<32>();
    v.pair.first_index = r.i64();
    v.pair.last_index = r.i64();
    v.sigma = r.fixed<64>();
    return v;
}

template <>
PcrlEntry get<PcrlEntry>(Reader& r) {
    r.expect_tag(tag::PcrlEntry);
    PcrlEntry v;
    v.pc_body_hash = r.fixed<32>();
    v.region = r.fixed<8>();
    v.expires_s = r.i64();
    return v;
}

template <>
PcrlSnapshot get<PcrlSnapshot>(Reader& r) {
    r.expect_tag(tag::PcrlSnapshot);
    PcrlSnapshot v;
    v.region = r.fixed<8>();
    v.window_index = r.i64();
    Bytes flat = r.bytes();
    if (flat.size() % 32) throw CodecError("pcrl entries not a multiple of 32 bytes");
    v.entries.resize(flat.size() / 32);
    for (size_t i = 0; i < v.entries.size(); ++i)
        std::copy(flat.begin() + 32 * i, flat.begin() + 32 * (i + 1), v.entries[i].begin());
    v.sigma = r.fixed<64>();
    return v;
}

template <>
TokenReport get<TokenReport>(Reader& r) {
    r.expect_tag(tag::TokenReport);
    TokenReport v;
    v.token_id = r.fixed<32>();
    v.rsu_id = r.u64();
    v.region = r.fixed<8>();
    v.window_index = r.i64();
    v.pc_body_hash = r.fixed<32>();
    v.seq = r.u64();
    return v;
}

// --- signing bytes ---

template <class T>
static Bytes body_of(const T& v) {
    Writer w;
    put_body(w, v);
    return w.take();
}

Bytes signing_bytes(const EnrollmentCert& v) { return body_of(v); }
Bytes signing_bytes(const Token& v) { return encode(v.content); }
Bytes signing_bytes(const RsuCert& v) { return body_of(v); }
Bytes signing_bytes(const PseudonymCert& v) { return encode(v.body); }
Bytes signing_bytes(const RevokeNotice& v) { return body_of(v); }
Bytes signing_bytes(const PcrlSnapshot& v) { return body_of(v); }

Digest pc_body_hash(const PseudonymCertBody& body) { return hash(encode(body)); }
Digest ec_hash(const EnrollmentCert& ec) { return hash(encode(ec)); }

}  // namespace tvss
