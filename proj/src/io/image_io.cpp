// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#include "semguide/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace semguide::io {

namespace {

void write_binary_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw TensorError("cannot open for writing: " + tmp);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw TensorError("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TensorError("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[pos]))) { ++pos; continue; }
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return s.substr(start, pos - start);
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

void write_ppm(const std::string& path, const Tensor<float>& image) {
  if (image.rank() != 3 || image.extent(0) != 3) throw ShapeError("write_ppm: image must be [3,H,W]");
  const int H = image.extent(1), W = image.extent(2);
  std::string out = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(3) * H * W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c)
        out.push_back(static_cast<char>(to_byte(image[(static_cast<std::int64_t>(c) * H + y) * W + x])));
  write_binary_atomic(path, out);
}

Tensor<float> read_ppm(const std::string& path) {
  const std::string s = slurp(path);
  std::size_t pos = 0;
  if (next_token(s, pos) != "P6") throw TensorError("read_ppm: not a P6 file: " + path);
  const int W = std::stoi(next_token(s, pos));
  const int H = std::stoi(next_token(s, pos));
  const int maxv = std::stoi(next_token(s, pos));
  if (maxv != 255) throw TensorError("read_ppm: only maxval 255 supported");
  ++pos;  // single whitespace after header
  if (s.size() - pos < static_cast<std::size_t>(3) * H * W) throw TensorError("read_ppm: truncated: " + path);
  Tensor<float> image = Tensor<float>::zeros({3, H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c)
        image[(static_cast<std::int64_t>(c) * H + y) * W + x] =
            static_cast<float>(static_cast<std::uint8_t>(s[pos++])) / 255.0f;
  return image;
}

void write_pgm(const std::string& path, int height, int width, const std::vector<std::uint8_t>& bytes) {
  if (static_cast<std::size_t>(height) * width != bytes.size())
    throw ShapeError("write_pgm: byte count does not match extents");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  write_binary_atomic(path, out);
}

std::vector<std::uint8_t> read_pgm(const std::string& path, int& height, int& width) {
  const std::string s = slurp(path);
  std::size_t pos = 0;
  if (next_token(s, pos) != "P5") throw TensorError("read_pgm: not a P5 file: " + path);
  width = std::stoi(next_token(s, pos));
  height = std::stoi(next_token(s, pos));
  const int maxv = std::stoi(next_token(s, pos));
  if (maxv != 255) throw TensorError("read_pgm: only maxval 255 supported");
  ++pos;
  if (s.size() - pos < static_cast<std::size_t>(width) * height)
    throw TensorError("read_pgm: truncated: " + path);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height);
  std::memcpy(bytes.data(), s.data() + pos, bytes.size());
  return bytes;
}

void write_pfm(const std::string& path, const Tensor<float>& map) {
  if (map.rank() != 2) throw ShapeError("write_pfm: map must be [H,W]");
  const int H = map.extent(0), W = map.extent(1);
  std::string out = "Pf\n" + std::to_string(W) + " " + std::to_string(H) + "\n-1.0\n";
  // PFM stores rows bottom-to-top
  for (int y = H - 1; y >= 0; --y) {
    const char* row = reinterpret_cast<const char*>(map.data() + static_cast<std::int64_t>(y) * W);
    out.append(row, sizeof(float) * static_cast<std::size_t>(W));
  }
  write_binary_atomic(path, out);
}

Tensor<float> read_pfm(const std::string& path) {
  const std::string s = slurp(path);
  std::size_t pos = 0;
  if (next_token(s, pos) != "Pf") throw TensorError("read_pfm: not a grayscale PFM: " + path);
  const int W = std::stoi(next_token(s, pos));
  const int H = std::stoi(next_token(s, pos));
  const double scale = std::stod(next_token(s, pos));
  if (scale >= 0) throw TensorError("read_pfm: big-endian PFM not supported");
  ++pos;
  if (s.size() - pos < sizeof(float) * static_cast<std::size_t>(W) * H)
    throw TensorError("read_pfm: truncated: " + path);
  Tensor<float> map = Tensor<float>::zeros({H, W});
  for (int y = H - 1; y >= 0; --y) {
    std::memcpy(map.data() + static_cast<std::int64_t>(y) * W, s.data() + pos,
                sizeof(float) * static_cast<std::size_t>(W));
    pos += sizeof(float) * static_cast<std::size_t>(W);
  }
  return map;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  write_binary_atomic(path, contents);
}

std::string read_file(const std::string& path) { return slurp(path); }

}  // namespace semguide::io
