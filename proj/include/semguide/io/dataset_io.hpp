// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "semguide/sim/scenesim.hpp"

namespace semguide::io {

/// On-disk dataset: frame_XXXX.ppm / .pfm / .pgm triples plus index.json
/// carrying intrinsics, poses and the class ontology.
void save_dataset(const sim::Sequence& seq, const std::string& dir);
sim::Sequence load_dataset(const std::string& dir);

}  // namespace semguide::io
