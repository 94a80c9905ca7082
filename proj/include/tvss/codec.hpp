#pragma once

#include <stdexcept>

#include "tvss/types.hpp"

namespace tvss {

namespace tag {
inline constexpr uint8_t EnrollmentCert = 0x01;
inline constexpr uint8_t TimeWindow = 0x02;
inline constexpr uint8_t TokenContent = 0x03;
inline constexpr uint8_t Token = 0x04;
inline constexpr uint8_t PseudonymCertBody = 0x05;
inline constexpr uint8_t PseudonymCert = 0x06;
inline constexpr uint8_t RevokeNotice = 0x07;
inline constexpr uint8_t PcrlEntry = 0x08;
inline constexpr uint8_t PcrlSnapshot = 0x09;
inline constexpr uint8_t TokenReport = 0x0A;
inline constexpr uint8_t RsuCert = 0x0B;
}  // namespace tag

struct CodecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Writer {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u32(uint32_t v);
    void u64(uint64_t v);
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void bytes(ByteView b);  // 4-byte length prefix
    void raw(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    Bytes take() { return std::move(buf_); }
    const Bytes& data() const { return buf_; }

private:
    Bytes buf_;
};

class Reader {
public:
    explicit Reader(ByteView b) : b_(b) {}
    uint8_t u8();
    uint32_t u32();
    uint64_t u64();
    int64_t i64() { return static_cast<int64_t>(u64()); }
    Bytes bytes();
    template <size_t N>
    std::array<uint8_t, N> fixed() {
        Bytes v = bytes();
        if (v.size() != N) throw CodecError("field width mismatch");
        std::array<uint8_t, N> out{};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }
    void skip(size_t n) {
        need(n);
        pos_ += n;
    }
    void expect_tag(uint8_t t);
    uint8_t peek() const;
    bool done() const { return pos_ == b_.size(); }
    size_t remaining() const { return b_.size() - pos_; }
    ByteView rest() const { return b_.subspan(pos_); }
    void finish() const {
        if (!done()) throw CodecError("trailing bytes");
    }

private:
    void need(size_t n) const {
        if (b_.size() - pos_ < n) throw CodecError("truncated input");
    }
    ByteView b_;
    size_t pos_ = 0;
};

void put(Writer& w, const TimeWindow& v);
void put(Writer& w, const EnrollmentCert& v);
void put(Writer& w, const TokenContent& v);
void put(Writer& w, const Token& v);
void put(Writer& w, const RsuCert& v);
void put(Writer& w, const PseudonymCertBody& v);
void put(Writer& w, const PseudonymCert& v);
void put(Writer& w, const RevokeNotice& v);
void put(Writer& w, const PcrlEntry& v);
void put(Writer& w, const PcrlSnapshot& v);
void put(Writer& w, const TokenReport& v);

template <class T>
T get(Reader& r);
template <>
TimeWindow get<TimeWindow>(Reader& r);
template <>
EnrollmentCert get<EnrollmentCert>(Reader& r);
template <>
TokenContent get<TokenContent>(Reader& r);
template <>
Token get<Token>(Reader& r);
template <>
RsuCert get<RsuCert>(Reader& r);
template <>
PseudonymCertBody get<PseudonymCertBody>(Reader& r);
template <>
PseudonymCert get<PseudonymCert>(Reader& r);
template <>
RevokeNotice get<RevokeNotice>(Reader& r);
template <>
PcrlEntry get<PcrlEntry>(Reader& r);
template <>
PcrlSnapshot get<PcrlSnapshot>(Reader& r);
template <>
TokenReport get<TokenReport>(Reader& r);

template <class T>
Bytes encode(const T& v) {
    Writer w;
    put(w, v);
    return w.take();
}

template <class T>
T decode(ByteView b) {
    Reader r(b);
    T v = get<T>(r);
    r.finish();
    return v;
}

// Bytes covered by the signature of each signed record. Flat records sign
// their own encoding minus the trailing signature field; wrappers (Token,
// PseudonymCert) sign the encoding of the wrapped content.
Bytes signing_bytes(const EnrollmentCert& v);
Bytes signing_bytes(const Token& v);
Bytes signing_bytes(const RsuCert& v);
Bytes signing_bytes(const PseudonymCert& v);
Bytes signing_bytes(const RevokeNotice& v);
Bytes signing_bytes(const PcrlSnapshot& v);

// Header bytes of a snapshot with zero entries; size grows by 32 per entry.
inline constexpr size_t kPcrlHeaderBytes = 93;

Digest pc_body_hash(const PseudonymCertBody& body);
Digest ec_hash(const EnrollmentCert& ec);

}  // namespace tvss
