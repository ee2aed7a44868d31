#pragma once

#include <vector>

#include "vssc/core/image.hpp"
#include "vssc/eval/report.hpp"

namespace vssc::cli {

// One panel per scenario label (the digital report is drawn as x=0 in every
// panel): ASR red, C-Acc blue, R-Acc green, y in [0, 1].
ImageBuffer plot_sweep(const std::vector<eval::EvalReport>& reports, int panel_width = 240, int height = 200);

}  // namespace vssc::cli
