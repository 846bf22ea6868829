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

#include "gatedrnn/binary_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include <boost/crc.hpp>

namespace gatedrnn {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

namespace {

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

}  // namespace

void BinaryWriter::magic(std::string_view tag) {
  out_.write(tag.data(), static_cast<std::streamsize>(tag.size()));
  if (!out_) throw IoError("write failed");
}

void BinaryWriter::u32(std::uint32_t v) {
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  if (!out_) throw IoError("write failed");
}

void BinaryWriter::u64(std::uint64_t v) {
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  if (!out_) throw IoError("write failed");
}

void BinaryWriter::f64(double v) {
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  if (!out_) throw IoError("write failed");
}

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out_) throw IoError("write failed");
}

void BinaryWriter::matrix(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  values(m.data(), m.size());
}

void BinaryWriter::vector(const Vector& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  values(v.data(), v.size());
}

void BinaryWriter::values(const double* data, Index count) {
  out_.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(count * sizeof(double)));
  if (!out_) throw IoError("write failed");
}

void BinaryReader::read_bytes(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n))
    throw IoError(context_ + ": truncated data");
}

void BinaryReader::expect_magic(std::string_view tag) {
  std::array<char, 16> buf{};
  if (tag.size() > buf.size()) throw ValidationError("magic tag too long");
  read_bytes(buf.data(), tag.size());
  if (std::string_view(buf.data(), tag.size()) != tag)
    throw IoError(context_ + ": bad magic, expected '" + std::string(tag) + "'");
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v = 0;
  read_bytes(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v = 0;
  read_bytes(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v = 0;
  read_bytes(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string BinaryReader::str() {
  const std::uint64_t n = u64();
  if (n > (1u << 20)) throw IoError(context_ + ": implausible string length");
  std::string s(n, '\0');
  read_bytes(s.data(), n);
  return s;
}

Matrix BinaryReader::matrix() {
  const std::uint64_t rows = u64();
  const std::uint64_t cols = u64();
  if (rows > kMaxElements || cols > kMaxElements || rows * cols > kMaxElements)
    throw IoError(context_ + ": implausible matrix shape");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  values(m.data(), m.size());
  return m;
}

Vector BinaryReader::vector() {
  const std::uint64_t n = u64();
  if (n > kMaxElements) throw IoError(context_ + ": implausible vector length");
  Vector v(static_cast<Index>(n));
  values(v.data(), v.size());
  return v;
}

void BinaryReader::values(double* data, Index count) {
  read_bytes(reinterpret_cast<char*>(data),
             static_cast<std::size_t>(count) * sizeof(double));
}

std::uint32_t file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  boost::crc_32_type crc;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    crc.process_bytes(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return crc.checksum();
}

}  // namespace gatedrnn
