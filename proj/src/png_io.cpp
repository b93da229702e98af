#include "slicereduce/png_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>

#include <png.h>
#include <zlib.h>
#if SLICEREDUCE_HAVE_LIBDEFLATE
#include <libdeflate.h>
#endif

#include "slicereduce/error.hpp"

namespace slicereduce {

namespace {

struct FileCloser {
  void operator()(std::FILE *f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto *slot = static_cast<std::string *>(png_get_error_ptr(png));
  if (slot) *slot = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

namespace {

struct ReadState {
  GrayRaster raster;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  std::string unsupported;
};

// All libpng calls that may longjmp live here; the state they fill is owned
// by the caller, so nothing in this frame needs unwinding.
struct MemoryReader {
  const std::uint8_t *data;
  std::size_t size;
  std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto *src = static_cast<MemoryReader *>(png_get_io_ptr(png));
  if (count > src->size - src->pos) png_error(png, "unexpected end of file");
  std::memcpy(out, src->data + src->pos, count);
  src->pos += count;
}

bool read_png_body(png_structp png, png_infop info, MemoryReader &src, ReadState &st) {
  if (setjmp(png_jmpbuf(png))) return false;

  png_set_read_fn(png, &src, read_from_memory);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type != PNG_COLOR_TYPE_GRAY) {
    st.unsupported = "only single-channel grayscale PNGs are supported (color type " +
                     std::to_string(color_type) + ")";
    return true;
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    st.unsupported = "grayscale PNG with transparency is not supported";
    return true;
  }

  if (depth < 8) png_set_packing(png);
  if (depth == 16) png_set_swap(png);  // host order on little-endian hosts
  png_read_update_info(png, info);

  st.raster.width = static_cast<int>(png_get_image_width(png, info));
  st.raster.height = static_cast<int>(png_get_image_height(png, info));
  st.raster.bit_depth = depth == 16 ? 16 : 8;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  st.buffer.resize(rowbytes * static_cast<std::size_t>(st.raster.height));
  st.rows.resize(static_cast<std::size_t>(st.raster.height));
  for (int y = 0; y < st.raster.height; ++y) st.rows[y] = st.buffer.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, st.rows.data());
  png_read_end(png, nullptr);
  return true;
}

}  // namespace

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path &path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::uint8_t chunk[1 << 16];
  std::size_t got;
  while ((got = std::fread(chunk, 1, sizeof chunk, file.get())) > 0) bytes.insert(bytes.end(), chunk, chunk + got);
  if (std::ferror(file.get())) throw Error(ErrorCode::IoError, "failed reading " + path.string());
  return bytes;
}

std::uint32_t be32(const std::uint8_t *p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint32_t chunk_crc(const std::uint8_t *p, std::size_t n) {
#if SLICEREDUCE_HAVE_LIBDEFLATE
  return libdeflate_crc32(0, p, n);
#else
  return static_cast<std::uint32_t>(crc32(0L, p, static_cast<uInt>(n)));
#endif
}

#if SLICEREDUCE_HAVE_LIBDEFLATE
struct DecompressorFree {
  void operator()(libdeflate_decompressor *d) const { libdeflate_free_decompressor(d); }
};
#endif

// Inflates a complete zlib stream whose decompressed size is known exactly.
bool inflate_exact(const std::vector<std::uint8_t> &in, std::vector<std::uint8_t> &out) {
#if SLICEREDUCE_HAVE_LIBDEFLATE
  thread_local std::unique_ptr<libdeflate_decompressor, DecompressorFree> d(libdeflate_alloc_decompressor());
  std::size_t produced = 0;
  return d && libdeflate_zlib_decompress(d.get(), in.data(), in.size(), out.data(), out.size(), &produced) ==
                  LIBDEFLATE_SUCCESS &&
         produced == out.size();
#else
  uLongf produced = static_cast<uLongf>(out.size());
  return uncompress(out.data(), &produced, in.data(), static_cast<uLong>(in.size())) == Z_OK &&
         produced == out.size();
#endif
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

// In-place reversal of the per-row filters. Returns false on an unknown
// filter byte.
bool unfilter(std::uint8_t *data, std::size_t rowbytes, int height, int bpp) {
  const std::vector<std::uint8_t> zero(rowbytes, 0);
  const std::uint8_t *prev = zero.data();
  for (int y = 0; y < height; ++y) {
    std::uint8_t *line = data + static_cast<std::size_t>(y) * (rowbytes + 1);
    const std::uint8_t type = line[0];
    std::uint8_t *cur = line + 1;
    switch (type) {
      case 0:
        break;
      case 1:
        for (std::size_t i = bpp; i < rowbytes; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + cur[i - bpp]);
        break;
      case 2:
        for (std::size_t i = 0; i < rowbytes; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + prev[i]);
        break;
      case 3:
        for (int i = 0; i < bpp; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + (prev[i] >> 1));
        for (std::size_t i = bpp; i < rowbytes; ++i) {
          cur[i] = static_cast<std::uint8_t>(cur[i] + ((cur[i - bpp] + prev[i]) >> 1));
        }
        break;
      case 4:
        for (int i = 0; i < bpp; ++i) cur[i] = static_cast<std::uint8_t>(cur[i] + prev[i]);
        for (std::size_t i = bpp; i < rowbytes; ++i) {
          cur[i] = static_cast<std::uint8_t>(cur[i] + paeth(cur[i - bpp], prev[i], prev[i - bpp]));
        }
        break;
      default:
        return false;
    }
    prev = cur;
  }
  return true;
}

// Handles the common case only. Anything unusual or malformed returns
// nullopt so that libpng produces the result or the diagnostic.
std::optional<GrayRaster> decode_plain_gray(const std::vector<std::uint8_t> &file) {
  const std::size_t n = file.size();
  std::size_t pos = 8;
  if (n < pos + 8 + 13 + 4 || be32(&file[pos]) != 13 || std::memcmp(&file[pos + 4], "IHDR", 4) != 0) {
    return std::nullopt;
  }
  const std::uint8_t *ihdr = &file[pos + 8];
  const std::uint32_t width = be32(ihdr);
  const std::uint32_t height = be32(ihdr + 4);
  const int depth = ihdr[8];
  if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20)) return std::nullopt;
  if (ihdr[9] != 0 || (depth != 8 && depth != 16) || ihdr[10] != 0 || ihdr[11] != 0 || ihdr[12] != 0) {
    return std::nullopt;
  }

  std::vector<std::uint8_t> idat;
  bool seen_end = false;
  while (!seen_end) {
    if (n - pos < 12) return std::nullopt;
    const std::uint32_t len = be32(&file[pos]);
    if (len > n - pos - 12) return std::nullopt;
    const std::uint8_t *type = &file[pos + 4];
    const std::uint8_t *body = type + 4;
    if (chunk_crc(type, len + 4) != be32(body + len)) return std::nullopt;
    if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), body, body + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_end = true;
    } else if (pos != 8 && ((type[0] & 0x20) == 0 || std::memcmp(type, "tRNS", 4) == 0)) {
      return std::nullopt;  // critical chunk or transparency
    }
    pos += 12 + static_cast<std::size_t>(len);
  }

  const int bpp = depth / 8;
  const std::size_t rowbytes = static_cast<std::size_t>(width) * bpp;
  std::vector<std::uint8_t> raw((rowbytes + 1) * height);
  if (!inflate_exact(idat, raw)) return std::nullopt;
  if (!unfilter(raw.data(), rowbytes, static_cast<int>(height), bpp)) return std::nullopt;

  GrayRaster r;
  r.width = static_cast<int>(width);
  r.height = static_cast<int>(height);
  r.bit_depth = depth;
  r.values.resize(static_cast<std::size_t>(width) * height);
  std::uint16_t *out = r.values.data();
  for (std::uint32_t y = 0; y < height; ++y) {
    const std::uint8_t *cur = raw.data() + static_cast<std::size_t>(y) * (rowbytes + 1) + 1;
    if (depth == 8) {
      for (std::uint32_t x = 0; x < width; ++x) *out++ = cur[x];
    } else {
      for (std::uint32_t x = 0; x < width; ++x) *out++ = static_cast<std::uint16_t>((cur[2 * x] << 8) | cur[2 * x + 1]);
    }
  }
  return r;
}

}  // namespace

GrayRaster read_gray_png(const std::filesystem::path &path, PngDecoder decoder) {
  const auto bytes = slurp(path);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a PNG file");
  }
  if (decoder == PngDecoder::Auto) {
    if (auto fast = decode_plain_gray(bytes)) return std::move(*fast);
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::IoError, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }

  ReadState st;
  MemoryReader src{bytes.data(), bytes.size(), 8};
  const bool ok = read_png_body(png, info, src, st);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw Error(ErrorCode::IoError, path.string() + ": " + (message.empty() ? "corrupt PNG" : message));
  if (!st.unsupported.empty()) throw Error(ErrorCode::UnsupportedFormat, path.string() + ": " + st.unsupported);

  GrayRaster raster = std::move(st.raster);
  const std::size_t n = static_cast<std::size_t>(raster.width) * static_cast<std::size_t>(raster.height);
  raster.values.resize(n);
  if (raster.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, st.buffer.data() + 2 * i, 2);
      raster.values[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raster.values[i] = st.buffer[i];
  }
  return raster;
}

namespace {

int filter_flags(PngRowFilter f) {
  switch (f) {
    case PngRowFilter::None: return PNG_FILTER_NONE;
    case PngRowFilter::Sub: return PNG_FILTER_SUB;
    case PngRowFilter::Up: return PNG_FILTER_UP;
    case PngRowFilter::Average: return PNG_FILTER_AVG;
    case PngRowFilter::Paeth: return PNG_FILTER_PAETH;
    case PngRowFilter::Adaptive: break;
  }
  return PNG_ALL_FILTERS;
}

bool write_png_body(png_structp png, png_infop info, std::FILE *file, int width, int height, int depth,
                    PngRowFilter filter, std::vector<png_bytep> &rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_set_compression_level(png, 1);
  if (filter != PngRowFilter::Adaptive) png_set_filter(png, PNG_FILTER_TYPE_BASE, filter_flags(filter));
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  return true;
}

void write_png_rows(const std::filesystem::path &path, int width, int height, int depth, const png_byte *data,
                    std::size_t rowbytes, PngRowFilter filter) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot create " + path.string());

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::IoError, "libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + rowbytes * static_cast<std::size_t>(y));
  const bool ok = write_png_body(png, info, file.get(), width, height, depth, filter, rows);
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error(ErrorCode::IoError, path.string() + ": " + message);
  if (std::fflush(file.get()) != 0) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void check_dims(int width, int height, std::size_t got) {
  if (width < 1 || height < 1 || got != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer does not match " + std::to_string(width) + "x" +
                                                  std::to_string(height));
  }
}

}  // namespace

void write_gray_png(const std::filesystem::path &path, int width, int height, std::span<const std::uint8_t> pixels,
                    PngRowFilter filter) {
  check_dims(width, height, pixels.size());
  write_png_rows(path, width, height, 8, pixels.data(), static_cast<std::size_t>(width), filter);
}

void write_gray_png16(const std::filesystem::path &path, int width, int height,
                      std::span<const std::uint16_t> values, PngRowFilter filter) {
  check_dims(width, height, values.size());
  write_png_rows(path, width, height, 16, reinterpret_cast<const png_byte *>(values.data()),
                 static_cast<std::size_t>(width) * 2, filter);
}

}  // namespace slicereduce
