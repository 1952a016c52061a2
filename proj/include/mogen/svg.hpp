// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "mogen/motion.hpp"

namespace mogen {

struct SvgOptions {
  double fps = 0.0;      // 0 uses the sequence's own frame rate
  double scale = 220.0;  // pixels per meter
  double margin = 40.0;  // canvas padding in pixels
};

// Animated stick-figure document: one <g> of bone segments per frame,
// flipped through by a discrete <animate> on a single <use>, plus the
// projected root trajectory and the ground line. Single-frame sequences
// render statically. Output is deterministic down to the byte.
std::string render_svg(const MotionSequence& seq, const SvgOptions& opt = {});

// Reads a motion JSON file and writes the rendered SVG next to it.
void export_svg(const std::string& motion_path, const std::string& out_path, double fps = 0.0);

}  // namespace mogen
