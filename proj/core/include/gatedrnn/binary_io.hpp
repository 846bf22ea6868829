// Copyright 2026 The gatedrnn Authors.
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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

#include "gatedrnn/common.hpp"

namespace gatedrnn {

/// Little-endian primitive writer. Every write checks the stream.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  /// rows, cols, then values in column-major order.
  void matrix(const Matrix& m);
  void vector(const Vector& v);
  /// Raw values in column-major order, no header.
  void values(const double* data, Index count);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string context)
      : in_(in), context_(std::move(context)) {}

  void expect_magic(std::string_view tag);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  Matrix matrix();
  Vector vector();
  void values(double* data, Index count);

  const std::string& context() const { return context_; }

 private:
  void read_bytes(char* dst, std::size_t n);

  std::istream& in_;
  std::string context_;
};

/// CRC-32 of a whole file; throws IoError when unreadable.
std::uint32_t file_crc32(const std::string& path);

}  // namespace gatedrnn
