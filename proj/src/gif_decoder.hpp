#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace subsnake::detail {

struct RgbImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> rgb;  // rows * cols * 3
};

bool is_gif(std::span<const std::uint8_t> bytes);

// First frame of a GIF87a/89a stream composed onto the logical screen.
// Throws std::runtime_error on malformed input.
RgbImage decode_gif(std::span<const std::uint8_t> bytes);

}  // namespace subsnake::detail
