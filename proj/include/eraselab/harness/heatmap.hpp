#pragma once

// Standalone SVG heatmaps of impact matrices. Cells use a diverging scale
// fixed to [-1, 1] and centred at 0: red for positive impact, blue for
// negative, a neutral grey at 0. |value| >= 1 saturates.

#include <array>
#include <string>

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/evaluation/metrics.hpp"

namespace eraselab::harness {

using Rgb = std::array<int, 3>;

inline constexpr Rgb kNeutral = {247, 247, 247};
inline constexpr Rgb kPositive = {178, 24, 43};
inline constexpr Rgb kNegative = {33, 102, 172};

Rgb heat_color(double value);
std::string hex_color(const Rgb& rgb);

std::string heatmap_svg(const evaluation::ImpactMatrix& delta, const concepts::ConceptSpace& space,
                        const std::string& title = "");

// Throws Error(Io) when the file cannot be written.
void render_heatmap(const evaluation::ImpactMatrix& delta, const concepts::ConceptSpace& space,
                    const std::string& path, const std::string& title = "");

}  // namespace eraselab::harness
