#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace acgan::plot {

using Rgb = std::array<std::uint8_t, 3>;

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  Rgb color;
};

/// Line chart on a white canvas with a frame, zero line and color legend.
void line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                int width = 720, int height = 420, bool log_y = false);

/// Palette used for the four pairing kinds, in PairingKind order.
const std::array<Rgb, 4>& kind_colors();

}  // namespace acgan::plot
