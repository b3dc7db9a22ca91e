// Copyright 2026 The flsnn Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
#ifndef FLSNN_BYTES_H_
#define FLSNN_BYTES_H_

// Little-endian byte encoding shared by the file and wire formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace flsnn {

class ByteWriter {
 public:
  void put_u16(std::uint16_t v) { put_le(v); }
  void put_u32(std::uint32_t v) { put_le(v); }
  void put_u64(std::uint64_t v) { put_le(v); }
  void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void put_bytes(std::span<const std::uint8_t> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }
  void put_bytes(std::span<const char> chars) {
    for (char c : chars) out_.push_back(static_cast<std::uint8_t>(c));
  }
  void reserve(std::size_t n) { out_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  std::vector<std::uint8_t> out_;
};

/// Bounds-checked little-endian reader; throws Err naming the field and byte
/// offset when the input runs out.
template <typename Err>
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t get_u16(const char* field) { return get_le<std::uint16_t>(field); }
  std::uint32_t get_u32(const char* field) { return get_le<std::uint32_t>(field); }
  std::uint64_t get_u64(const char* field) { return get_le<std::uint64_t>(field); }
  float get_f32(const char* field) {
    return std::bit_cast<float>(get_le<std::uint32_t>(field));
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n, const char* field) {
    require(n, field);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n) {
      throw Err(std::string("truncated input reading ") + field +
                " at byte offset " + std::to_string(pos_));
    }
  }

  template <typename U>
  U get_le(const char* field) {
    require(sizeof(U), field);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Whole-file helpers; failures raise IoError carrying the path.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

}  // namespace flsnn

#endif  // FLSNN_BYTES_H_
