#include "abel/util/bytes.hpp"

#include <bit>
#include <cstring>

#include "abel/util/error.hpp"

namespace abel {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
}

}  // namespace

void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }
void ByteWriter::u16(std::uint16_t v) { put_le(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::i64(std::int64_t v) { put_le(buf_, static_cast<std::uint64_t>(v)); }
void ByteWriter::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::raw(std::span<const std::uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::f64s(std::span<const double> values) {
  buf_.reserve(buf_.size() + values.size() * 8);
  for (double v : values) f64(v);
}

void ByteReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw DecodeError("truncated payload: need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ", have " + std::to_string(data_.size() - pos_));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

namespace {

template <typename T>
T get_le(std::span<const std::uint8_t> data, std::size_t& pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(data[pos + i]) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

}  // namespace

std::uint16_t ByteReader::u16() {
  need(2);
  return get_le<std::uint16_t>(data_, pos_);
}

std::uint32_t ByteReader::u32() {
  need(4);
  return get_le<std::uint32_t>(data_, pos_);
}

std::uint64_t ByteReader::u64() {
  need(8);
  return get_le<std::uint64_t>(data_, pos_);
}

std::int64_t ByteReader::i64() { return static_cast<std::int64_t>(u64()); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

bool ByteReader::boolean() {
  const auto v = u8();
  if (v > 1) throw DecodeError("invalid boolean byte " + std::to_string(v));
  return v == 1;
}

std::string ByteReader::str() {
  const auto n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n);
  std::vector<std::uint8_t> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

std::vector<double> ByteReader::f64s(std::size_t n) {
  if (n > remaining() / 8) throw DecodeError("truncated real array");
  std::vector<double> out(n);
  for (auto& v : out) v = f64();
  return out;
}

void ByteReader::expect_end() const {
  if (!done()) {
    throw DecodeError("trailing bytes after payload: " + std::to_string(remaining()));
  }
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace abel
