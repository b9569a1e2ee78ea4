// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "t2seg/errors.hpp"

namespace t2seg::io {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Little-endian appender.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { out_.append(s); }

  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  std::string out_;
};

/// Little-endian cursor; throws `Err` (constructed from a message) when the
/// input runs out.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  bool try_take(std::size_t n, std::string_view& out) {
    if (remaining() < n) return false;
    out = data_.substr(pos_, n);
    pos_ += n;
    return true;
  }

  bool try_u8(std::uint8_t& v) { return try_uint(v, 1); }
  bool try_u16(std::uint16_t& v) { return try_uint(v, 2); }
  bool try_u32(std::uint32_t& v) { return try_uint(v, 4); }
  bool try_f32(float& v) {
    std::uint32_t bits = 0;
    if (!try_u32(bits)) return false;
    v = std::bit_cast<float>(bits);
    return true;
  }

 private:
  template <typename T>
  bool try_uint(T& v, int n) {
    if (remaining() < static_cast<std::size_t>(n)) return false;
    std::uint64_t acc = 0;
    for (int i = 0; i < n; ++i) {
      acc |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    v = static_cast<T>(acc);
    return true;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace t2seg::io
