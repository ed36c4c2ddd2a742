#include "gif_decoder.hpp"

#include <array>
#include <cstring>
#include <stdexcept>

namespace subsnake::detail {

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    if (pos_ >= bytes_.size()) throw std::runtime_error("truncated GIF stream");
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (u8() << 8));
  }
  void skip(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("truncated GIF stream");
    pos_ += n;
  }
  std::vector<std::uint8_t> sub_blocks() {
    std::vector<std::uint8_t> out;
    for (std::uint8_t len = u8(); len != 0; len = u8()) {
      if (pos_ + len > bytes_.size()) throw std::runtime_error("truncated GIF sub-block");
      out.insert(out.end(), bytes_.begin() + static_cast<long>(pos_),
                 bytes_.begin() + static_cast<long>(pos_ + len));
      pos_ += len;
    }
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_palette(Reader& in, int bits) {
  std::vector<std::uint8_t> palette(static_cast<std::size_t>(3 << bits));
  for (auto& v : palette) v = in.u8();
  return palette;
}

std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data, int min_code_size,
                                     std::size_t expected) {
  if (min_code_size < 2 || min_code_size > 11) throw std::runtime_error("bad GIF LZW code size");
  const int clear = 1 << min_code_size;
  const int end = clear + 1;

  std::vector<int> prefix(4096, -1);
  std::vector<std::uint8_t> suffix(4096, 0);
  std::vector<std::uint8_t> first(4096, 0);
  for (int i = 0; i < clear; ++i) {
    suffix[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    first[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  }

  std::vector<std::uint8_t> out;
  out.reserve(expected);
  std::vector<std::uint8_t> stack;

  int code_size = min_code_size + 1;
  int next = end + 1;
  int prev = -1;
  std::uint32_t bitbuf = 0;
  int bits = 0;
  std::size_t pos = 0;

  auto emit = [&](int code) {
    stack.clear();
    for (int c = code; c >= 0; c = prefix[static_cast<std::size_t>(c)]) {
      stack.push_back(suffix[static_cast<std::size_t>(c)]);
    }
    out.insert(out.end(), stack.rbegin(), stack.rend());
  };

  while (out.size() < expected) {
    while (bits < code_size) {
      if (pos >= data.size()) return out;
      bitbuf |= static_cast<std::uint32_t>(data[pos++]) << bits;
      bits += 8;
    }
    const int code = static_cast<int>(bitbuf & ((1u << code_size) - 1));
    bitbuf >>= code_size;
    bits -= code_size;

    if (code == clear) {
      code_size = min_code_size + 1;
      next = end + 1;
      prev = -1;
      continue;
    }
    if (code == end) break;

    if (prev < 0) {
      if (code >= clear) throw std::runtime_error("bad GIF LZW stream");
      emit(code);
      prev = code;
      continue;
    }

    std::uint8_t head;
    if (code < next) {
      head = first[static_cast<std::size_t>(code)];
      emit(code);
    } else if (code == next) {
      head = first[static_cast<std::size_t>(prev)];
      emit(prev);
      out.push_back(head);
    } else {
      throw std::runtime_error("bad GIF LZW code");
    }

    if (next < 4096) {
      prefix[static_cast<std::size_t>(next)] = prev;
      suffix[static_cast<std::size_t>(next)] = head;
      first[static_cast<std::size_t>(next)] = first[static_cast<std::size_t>(prev)];
      ++next;
      if (next == (1 << code_size) && code_size < 12) ++code_size;
    }
    prev = code;
  }
  return out;
}

}  // namespace

bool is_gif(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 6 && (std::memcmp(bytes.data(), "GIF87a", 6) == 0 ||
                               std::memcmp(bytes.data(), "GIF89a", 6) == 0);
}

RgbImage decode_gif(std::span<const std::uint8_t> bytes) {
  if (!is_gif(bytes)) throw std::runtime_error("not a GIF stream");
  Reader in(bytes);
  in.skip(6);

  RgbImage img;
  img.cols = in.u16();
  img.rows = in.u16();
  const std::uint8_t flags = in.u8();
  const std::uint8_t background = in.u8();
  in.u8();  // aspect ratio
  if (img.rows == 0 || img.cols == 0) throw std::runtime_error("empty GIF logical screen");

  std::vector<std::uint8_t> global;
  if (flags & 0x80) global = read_palette(in, (flags & 0x07) + 1);

  img.rgb.assign(img.rows * img.cols * 3, 0);
  if (!global.empty() && 3u * background + 2 < global.size()) {
    for (std::size_t i = 0; i < img.rows * img.cols; ++i) {
      std::memcpy(&img.rgb[3 * i], &global[3u * background], 3);
    }
  }

  int transparent = -1;
  for (;;) {
    const std::uint8_t tag = in.u8();
    if (tag == 0x3B) throw std::runtime_error("GIF contains no image");
    if (tag == 0x21) {
      const std::uint8_t label = in.u8();
      auto block = in.sub_blocks();
      if (label == 0xF9 && block.size() >= 4 && (block[0] & 0x01)) transparent = block[3];
      continue;
    }
    if (tag != 0x2C) throw std::runtime_error("unexpected GIF block");

    const std::size_t left = in.u16();
    const std::size_t top = in.u16();
    const std::size_t width = in.u16();
    const std::size_t height = in.u16();
    const std::uint8_t iflags = in.u8();
    const bool interlaced = (iflags & 0x40) != 0;
    std::vector<std::uint8_t> palette =
        (iflags & 0x80) ? read_palette(in, (iflags & 0x07) + 1) : global;
    if (palette.empty()) throw std::runtime_error("GIF frame has no color table");

    const int min_code_size = in.u8();
    const auto indices = lzw_decode(in.sub_blocks(), min_code_size, width * height);

    std::vector<std::size_t> row_order;
    if (interlaced) {
      for (std::size_t start : {0, 4, 2, 1}) {
        const std::size_t step = start == 0 ? 8 : (start == 4 ? 8 : (start == 2 ? 4 : 2));
        for (std::size_t r = start; r < height; r += step) row_order.push_back(r);
      }
    } else {
      for (std::size_t r = 0; r < height; ++r) row_order.push_back(r);
    }

    for (std::size_t pass_row = 0; pass_row < height; ++pass_row) {
      const std::size_t r = row_order[pass_row] + top;
      for (std::size_t c = 0; c < width; ++c) {
        const std::size_t k = pass_row * width + c;
        if (k >= indices.size() || r >= img.rows || c + left >= img.cols) continue;
        const int index = indices[k];
        if (index == transparent) continue;
        if (3u * static_cast<std::size_t>(index) + 2 >= palette.size()) continue;
        std::memcpy(&img.rgb[3 * (r * img.cols + c + left)], &palette[3u * index], 3);
      }
    }
    return img;
  }
}

}  // namespace subsnake::detail
