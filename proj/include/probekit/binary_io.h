#ifndef PROBEKIT_BINARY_IO_H_
#define PROBEKIT_BINARY_IO_H_

// Little-endian encode/decode helpers shared by the EPR1 and checkpoint
// formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "probekit/error.h"

namespace probekit::binio {

template <typename U>
U ToLittle(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xff));
    }
    return out;
  }
  return v;
}

class Writer {
 public:
  void Bytes(std::string_view s) { buf_.append(s); }
  void U32(uint32_t v) { Raw(ToLittle(v)); }
  void U64(uint64_t v) { Raw(ToLittle(v)); }
  void F32(float v) { Raw(ToLittle(std::bit_cast<uint32_t>(v))); }
  void F64(double v) { Raw(ToLittle(std::bit_cast<uint64_t>(v))); }
  // u32 byte length followed by the bytes.
  void String(std::string_view s) {
    U32(static_cast<uint32_t>(s.size()));
    Bytes(s);
  }
  const std::string& buffer() const { return buf_; }
  std::string Take() { return std::move(buf_); }

 private:
  template <typename U>
  void Raw(U v) {
    char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    buf_.append(b, sizeof(U));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  size_t remaining() const { return data_.size() - pos_; }
  size_t position() const { return pos_; }

  std::string_view Bytes(size_t n) {
    Need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  uint32_t U32() { return ToLittle(Raw<uint32_t>()); }
  uint64_t U64() { return ToLittle(Raw<uint64_t>()); }
  float F32() { return std::bit_cast<float>(ToLittle(Raw<uint32_t>())); }
  double F64() { return std::bit_cast<double>(ToLittle(Raw<uint64_t>())); }
  std::string String() {
    const uint32_t n = U32();
    return std::string(Bytes(n));
  }

 private:
  void Need(size_t n) const {
    if (remaining() < n) {
      throw ValidationError("truncated payload at byte " + std::to_string(pos_) +
                            " (need " + std::to_string(n) + ", have " +
                            std::to_string(remaining()) + ")");
    }
  }
  template <typename U>
  U Raw() {
    Need(sizeof(U));
    U v;
    std::memcpy(&v, data_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string_view data_;
  size_t pos_ = 0;
};

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view bytes);

}  // namespace probekit::binio

#endif  // PROBEKIT_BINARY_IO_H_
