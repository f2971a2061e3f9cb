// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semguide/core/tensor.hpp"

namespace semguide::io {

/// Binary PPM (P6, maxval 255) from a [3,H,W] image in [0,1].
void write_ppm(const std::string& path, const Tensor<float>& image);
Tensor<float> read_ppm(const std::string& path);

/// Binary PGM (P5, maxval 255) from raw bytes (labels or previews).
void write_pgm(const std::string& path, int height, int width, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_pgm(const std::string& path, int& height, int& width);

/// PFM grayscale ("Pf"), negative scale = little-endian, rows bottom-up.
void write_pfm(const std::string& path, const Tensor<float>& map);
Tensor<float> read_pfm(const std::string& path);

/// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace semguide::io
