#pragma once

#include <optional>

#include "tvss/crypto.hpp"

namespace tvss {

namespace kind {
inline constexpr uint8_t EnrollReq = 0x10;
inline constexpr uint8_t EnrollResp = 0x11;
inline constexpr uint8_t TokenReq = 0x12;
inline constexpr uint8_t TokenResp = 0x13;
inline constexpr uint8_t RevokeCmd = 0x14;
inline constexpr uint8_t RevokeResp = 0x15;
inline constexpr uint8_t WindowAdvance = 0x16;
inline constexpr uint8_t RsuCertReq = 0x17;
inline constexpr uint8_t RsuCertResp = 0x18;

inline constexpr uint8_t PseudoReq = 0x20;
inline constexpr uint8_t PseudoResp = 0x21;
inline constexpr uint8_t PcrlGet = 0x22;
inline constexpr uint8_t PcrlResp = 0x23;
inline constexpr uint8_t RevokeNotice = 0x24;
inline constexpr uint8_t TokenReport = 0x25;
inline constexpr uint8_t WindowTick = 0x26;

inline constexpr uint8_t Error = 0x7f;
}  // namespace kind

// Response bodies start with one status byte; 0 is success.
namespace status {
inline constexpr uint8_t ok = 0;
inline constexpr uint8_t malformed = 0xfe;
inline constexpr uint8_t unsupported = 0xff;
}  // namespace status

struct Frame {
    uint8_t kind = 0;
    Bytes body;
};

inline constexpr uint32_t kMaxFrameBytes = 64u << 20;

// Wire form: u32 length (of kind + body), u8 kind, body.
Bytes frame_encode(const Frame& f);

class FrameDecoder {
public:
    void feed(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    // Throws CodecError on an oversized length field.
    std::optional<Frame> next();

private:
    Bytes buf_;
};

Frame response(uint8_t kind, uint8_t st, ByteView payload = {});

}  // namespace tvss
