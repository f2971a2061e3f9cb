// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "semguide/core/tensor.hpp"

namespace semguide::io {

// Tensor blob: magic "TNSR1", u32 rank, u64 extents, f32 payload.
// All fields little-endian.

inline constexpr char kTensorMagic[5] = {'T', 'N', 'S', 'R', '1'};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

inline void put_f32(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_le<std::uint32_t>(os, bits);
}

inline float get_f32(std::istream& is) {
  const std::uint32_t bits = get_le<std::uint32_t>(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace detail

template <typename S>
void write_tensor(std::ostream& os, const Tensor<S>& t) {
  os.write(kTensorMagic, 5);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (int d = 0; d < t.rank(); ++d) detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.extent(d)));
  for (std::int64_t i = 0; i < t.size(); ++i) detail::put_f32(os, static_cast<float>(t[i]));
}

template <typename S = float>
Tensor<S> read_tensor(std::istream& is) {
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, kTensorMagic, 5) != 0)
    throw TensorError("tensor blob: bad magic");
  const auto rank = detail::get_le<std::uint32_t>(is);
  if (rank > 8) throw TensorError("tensor blob: implausible rank");
  Shape shape;
  for (std::uint32_t d = 0; d < rank; ++d)
    shape.push_back(static_cast<int>(detail::get_le<std::uint64_t>(is)));
  Tensor<S> t = Tensor<S>::zeros(shape);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(detail::get_f32(is));
  if (!is) throw TensorError("tensor blob: truncated payload");
  return t;
}

}  // namespace semguide::io
