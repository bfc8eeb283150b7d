#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uhd/error.hpp"

namespace uhd {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) { buf_.append(s); }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void floats(std::span<const float> v) { raw(v.data(), v.size() * sizeof(float)); }

  const std::string& buffer() const { return buf_; }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked little-endian reads; running past the end throws
/// CorruptFile.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data, std::string context = "file")
      : data_(data), context_(std::move(context)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }
  float f32() { return read<float>(); }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void floats(std::span<float> out) {
    const std::size_t n = out.size() * sizeof(float);
    need(n);
    std::memcpy(out.data(), data_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CorruptFile(context_ + ": truncated at byte " + std::to_string(pos_));
  }
  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::string read_file_bytes(const std::string& path);
/// Writes via a temporary sibling and rename so readers never observe a
/// partial file.
void write_file_bytes(const std::string& path, std::string_view bytes);

}  // namespace uhd
