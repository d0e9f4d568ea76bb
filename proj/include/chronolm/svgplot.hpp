#pragma once

#include <map>
#include <string>
#include <vector>

#include "chronolm/common.hpp"

namespace chronolm {

// Self-contained SVG emitters with fixed-precision formatting: identical
// inputs produce identical bytes.
std::string svg_heatmap(const MatD& values,
                        const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::string& title);

std::string svg_line_chart(const std::vector<double>& x,
                           const std::map<std::string, std::vector<double>>& series,
                           const std::string& title);

}  // namespace chronolm
