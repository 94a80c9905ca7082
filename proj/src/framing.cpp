#include "tvss/framing.hpp"

#include "tvss/codec.hpp"

namespace tvss {

Bytes frame_encode(const Frame& f) {
    if (f.body.size() + 1 > kMaxFrameBytes) throw CodecError("frame too large");
    Writer w;
    w.u32(static_cast<uint32_t>(f.body.size() + 1));
    w.u8(f.kind);
    w.raw(f.body);
    return w.take();
}

std::optional<Frame> FrameDecoder::next() {
    if (buf_.size() < 4) return std::nullopt;
    uint32_t len = uint32_t(buf_[0]) << 24 | uint32_t(buf_[1]) << 16 | uint32_t(buf_[2]) << 8 | buf_[3];
    if (len == 0 || len > kMaxFrameBytes) throw CodecError("bad frame length");
    if (buf_.size() < 4 + size_t(len)) return std::nullopt;
    Frame f;
    f.kind = buf_[4];
    f.body.assign(buf_.begin() + 5, buf_.begin() + 4 + len);
    buf_.erase(buf_.begin(), buf_.begin() + 4 + len);
    return f;
}

Frame response(uint8_t k, uint8_t st, ByteView payload) {
    Frame f;
    f.kind = k;
    f.body.reserve(payload.size() + 1);
    f.body.push_back(st);
    f.body.insert(f.body.end(), payload.begin(), payload.end());
    return f;
}

}  // namespace tvss
