#include "session/wire.hpp"

#include "session/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

namespace session::wire {

std::size_t SpanSource::read_some(std::span<std::uint8_t> out) {
  std::size_t n = std::min(out.size(), remaining());
  std::memcpy(out.data(), bytes_.data() + offset_, n);
  offset_ += n;
  return n;
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t checked_length(std::size_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) throw WireError("length exceeds 2^32-1 elements");
  return static_cast<std::uint32_t>(n);
}

void put_doubles(Bytes& out, std::span<const double> values) {
  for (double v : values) put_f64(out, v);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

// Tracks bytes consumed in the current frame so truncation can be reported.
class FrameReader {
public:
  explicit FrameReader(ByteSource& in) : in_(in) {}

  void read(std::uint8_t* dst, std::size_t n) {
    while (n > 0) {
      std::size_t got = in_.read_some({dst, n});
      if (got == 0) throw TruncatedFrame(consumed_);
      consumed_ += got;
      dst += got;
      n -= got;
    }
  }

  std::uint8_t u8() {
    std::uint8_t b;
    read(&b, 1);
    return b;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    read(b, 4);
    return get_u32(b);
  }
  double f64() {
    std::uint8_t b[8];
    read(b, 8);
    return get_f64(b);
  }

  // Reads `count` doubles in bounded chunks so a hostile length cannot force
  // one huge allocation before any data arrives.
  std::vector<double> doubles(std::uint64_t count) {
    constexpr std::size_t kChunk = 8192;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, kChunk)));
    std::uint8_t buf[kChunk * 8];
    while (values.size() < count) {
      std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(count - values.size(), kChunk));
      read(buf, n * 8);
      for (std::size_t i = 0; i < n; ++i) values.push_back(get_f64(buf + i * 8));
    }
    return values;
  }

private:
  ByteSource& in_;
  std::size_t consumed_ = 0;
};

Message decode_payload(std::uint8_t tag, FrameReader& r) {
  switch (tag) {
  case kTagInt: return static_cast<std::int32_t>(r.u32());
  case kTagDouble: return r.f64();
  case kTagDoubleArray: {
    std::uint32_t n = r.u32();
    return DoubleArray(r.doubles(n));
  }
  case kTagDoubleMatrix: {
    std::uint32_t rows = r.u32();
    std::uint32_t cols = r.u32();
    std::uint64_t count = std::uint64_t{rows} * cols;
    return DoubleMatrix(rows, cols, DoubleArray(r.doubles(count)));
  }
  case kTagParticleArray: {
    std::uint32_t n = r.u32();
    std::vector<double> raw = r.doubles(std::uint64_t{n} * 5);
    std::vector<Particle> ps(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = raw.data() + i * 5;
      ps[i] = Particle{p[0], p[1], p[2], p[3], p[4]};
    }
    return ParticleArray(std::move(ps));
  }
  default: throw UnknownTag(tag);
  }
}

} // namespace

void encode_message(const Message& m, Bytes& out) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int32_t>) {
          out.push_back(kTagInt);
          put_u32(out, static_cast<std::uint32_t>(v));
        } else if constexpr (std::is_same_v<T, double>) {
          out.push_back(kTagDouble);
          put_f64(out, v);
        } else if constexpr (std::is_same_v<T, DoubleArray>) {
          out.push_back(kTagDoubleArray);
          put_u32(out, checked_length(v.size()));
          out.reserve(out.size() + v.size() * 8);
          put_doubles(out, v.span());
        } else if constexpr (std::is_same_v<T, DoubleMatrix>) {
          out.push_back(kTagDoubleMatrix);
          put_u32(out, checked_length(v.rows()));
          put_u32(out, checked_length(v.cols()));
          out.reserve(out.size() + v.values().size() * 8);
          put_doubles(out, v.values().span());
        } else {
          out.push_back(kTagParticleArray);
          put_u32(out, checked_length(v.size()));
          out.reserve(out.size() + v.size() * 40);
          for (const Particle& p : v) {
            put_f64(out, p.x);
            put_f64(out, p.y);
            put_f64(out, p.vx);
            put_f64(out, p.vy);
            put_f64(out, p.mass);
          }
        }
      },
      m);
}

Bytes encode_message(const Message& m) {
  Bytes out;
  encode_message(m, out);
  return out;
}

Message decode_message(ByteSource& in) {
  Frame f = decode_frame(in);
  if (auto* m = std::get_if<Message>(&f)) return std::move(*m);
  if (std::holds_alternative<Failure>(f)) throw FailureSignal();
  throw WireError("flag frame where a message was expected");
}

Bytes encode_flag(bool value) { return {kTagFlag, static_cast<std::uint8_t>(value ? 1 : 0)}; }

bool decode_flag(ByteSource& in) {
  Frame f = decode_frame(in);
  if (auto* flag = std::get_if<Flag>(&f)) return flag->value;
  if (std::holds_alternative<Failure>(f)) throw FailureSignal();
  throw WireError("message frame where a flag was expected");
}

Bytes encode_failure() { return {kTagFailure}; }

void encode_frame(const Frame& f, Bytes& out) {
  if (auto* m = std::get_if<Message>(&f)) {
    encode_message(*m, out);
  } else if (auto* flag = std::get_if<Flag>(&f)) {
    out.push_back(kTagFlag);
    out.push_back(flag->value ? 1 : 0);
  } else {
    out.push_back(kTagFailure);
  }
}

Frame decode_frame(ByteSource& in) {
  FrameReader r(in);
  std::uint8_t tag = r.u8();
  if (tag == kTagFailure) return Failure{};
  if (tag == kTagFlag) {
    std::uint8_t v = r.u8();
    if (v > 1) throw WireError("flag byte must be 0x00 or 0x01");
    return Flag{v == 1};
  }
  return decode_payload(tag, r);
}

Bytes encode_hello(const SessionType& local) {
  std::string text = canonicalize(local);
  Bytes out(kHandshakeMagic.begin(), kHandshakeMagic.end());
  put_u32(out, checked_length(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

std::string read_hello(ByteSource& in) {
  FrameReader r(in);
  std::uint8_t magic[4];
  r.read(magic, 4);
  if (!std::equal(kHandshakeMagic.begin(), kHandshakeMagic.end(), magic)) throw HandshakeError("bad handshake magic");
  std::uint32_t len = r.u32();
  if (len > kMaxHandshakeLength) throw HandshakeError("handshake type text too long");
  std::string text(len, '\0');
  r.read(reinterpret_cast<std::uint8_t*>(text.data()), len);
  return text;
}

bool handshake_client(ByteStream& stream, const SessionType& local) {
  stream.write_all(encode_hello(local));
  FrameReader r(stream);
  std::uint8_t verdict = r.u8();
  if (verdict != kAccept && verdict != kReject) throw HandshakeError("bad handshake verdict byte");
  return verdict == kAccept;
}

bool handshake_server(ByteStream& stream, const SessionType& local) {
  std::string text = read_hello(stream);
  SessionType remote;
  try {
    remote = parse(text);
  } catch (const ParseError& e) {
    stream.write_all(std::span<const std::uint8_t>(&kReject, 1));
    throw HandshakeError(std::string("unparseable remote session type: ") + e.what());
  }
  bool ok = remote.expanded() && is_dual(remote, local);
  const std::uint8_t verdict = ok ? kAccept : kReject;
  stream.write_all(std::span<const std::uint8_t>(&verdict, 1));
  return ok;
}

} // namespace session::wire
