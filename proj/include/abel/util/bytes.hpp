#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abel {

// Little-endian binary writer used by every on-disk / wire format in the
// project. Reals are IEEE-754 binary64, written bit-exactly.
class ByteWriter {
 public:
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void boolean(bool v) { u8(v ? 1 : 0); }
  // u32 length prefix followed by raw bytes.
  void str(std::string_view s);
  void raw(std::span<const std::uint8_t> bytes);
  void f64s(std::span<const double> values);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; every method throws DecodeError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : data_(bytes) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  bool boolean();
  std::string str();
  std::vector<std::uint8_t> raw(std::size_t n);
  std::vector<double> f64s(std::size_t n);

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  // Throws DecodeError unless every byte has been consumed.
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace abel
