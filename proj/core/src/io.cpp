#include "arapdepth/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "arapdepth/error.hpp"
#include "arapdepth/sequence.hpp"

namespace arapdepth {

namespace fs = std::filesystem;

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr double kFloInvalid = 1e9;

std::string lower_extension(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

std::uint32_t load_u32(const unsigned char* p, bool little) {
  if (little) return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
  return p[3] | (p[2] << 8) | (p[1] << 16) | (std::uint32_t(p[0]) << 24);
}

void store_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

float load_f32(const unsigned char* p, bool little) {
  return std::bit_cast<float>(load_u32(p, little));
}

void store_f32(std::vector<unsigned char>& out, float v) { store_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Whitespace-separated header tokens of PNM/PFM files, with '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes) : b_(bytes) {}

  std::string token(bool comments = true) {
    for (;;) {
      while (pos_ < b_.size() && std::isspace(b_[pos_])) ++pos_;
      if (comments && pos_ < b_.size() && b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    const std::size_t start = pos_;
    last_start_ = start;
    while (pos_ < b_.size() && !std::isspace(b_[pos_])) ++pos_;
    if (start == pos_) throw ParseError("unexpected end of header", static_cast<long long>(pos_));
    return {b_.begin() + static_cast<std::ptrdiff_t>(start), b_.begin() + static_cast<std::ptrdiff_t>(pos_)};
  }

  long long integer() {
    const std::string t = token();
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw ParseError("expected integer in header", static_cast<long long>(last_start_));
    }
    return v;
  }

  double real() {
    const std::string t = token(false);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw ParseError("expected number in header", static_cast<long long>(last_start_));
    }
    return v;
  }

  // Consumes the single whitespace byte that ends a header.
  std::size_t finish() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw ParseError("header must end with whitespace", static_cast<long long>(pos_));
    }
    return ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t last_start_ = 0;
  std::size_t pos_ = 0;
};

Image read_pnm(const std::vector<unsigned char>& bytes) {
  HeaderReader h(bytes);
  const std::string magic = h.token();
  int channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ParseError("unsupported PNM magic '" + magic + "'", 0);
  }
  const long long w = h.integer();
  const long long hgt = h.integer();
  const long long maxval = h.integer();
  if (w <= 0 || hgt <= 0 || w > 1 << 20 || hgt > 1 << 20) {
    throw ParseError("invalid PNM dimensions", static_cast<long long>(h.position()));
  }
  if (maxval <= 0 || maxval > 65535) {
    throw ParseError("invalid PNM maxval", static_cast<long long>(h.position()));
  }
  const std::size_t start = h.finish();
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t samples = static_cast<std::size_t>(w) * static_cast<std::size_t>(hgt) * channels;
  if (bytes.size() < start + samples * bps) {
    throw ParseError("truncated PNM payload", static_cast<long long>(bytes.size()));
  }
  Image img(static_cast<int>(w), static_cast<int>(hgt), channels);
  for (std::size_t i = 0; i < samples; ++i) {
    const unsigned char* p = &bytes[start + i * bps];
    const unsigned v = bps == 2 ? (unsigned(p[0]) << 8) | p[1] : p[0];
    if (v > maxval) throw ParseError("PNM sample exceeds maxval", static_cast<long long>(start + i * bps));
    img.data[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return img;
}

unsigned quantize(double v, unsigned maxval) {
  return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

void write_pnm(const std::string& path, const Image& img, int bit_depth) {
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                       std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                       std::to_string(maxval) + "\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (double v : img.data) {
    const unsigned q = quantize(v, maxval);
    if (bit_depth == 16) bytes.push_back(static_cast<unsigned char>(q >> 8));
    bytes.push_back(static_cast<unsigned char>(q & 0xff));
  }
  write_bytes(path, bytes);
}

struct PngContext {
  std::string message;
  FILE* file = nullptr;
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
  ctx->message = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

Image read_png(const std::string& path) {
  std::unique_ptr<FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path);
  PngContext ctx;
  ctx.file = file.get();
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, png_error_handler,
                                           png_warning_handler);
  if (!png) throw Error(ErrorCode::kIo, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  Image img;
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  int channels = 0;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    const long long offset = std::ftell(ctx.file);
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("invalid PNG: " + ctx.message, offset);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw ParseError("unsupported PNG channel layout", 0);
  img = Image(static_cast<int>(w), static_cast<int>(h), channels);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 y = 0; y < h; ++y) {
    const unsigned char* row = rows[y];
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * channels; ++i) {
      const unsigned v = depth == 16 ? (unsigned(row[2 * i]) << 8) | row[2 * i + 1] : row[i];
      img.data[y * static_cast<std::size_t>(w) * channels + i] = v / maxval;
    }
  }
  return img;
}

void write_png(const std::string& path, const Image& img, int bit_depth) {
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  const std::size_t bps = bit_depth == 16 ? 2 : 1;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels * bps;
  std::vector<unsigned char> pixels(stride * img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const unsigned q = quantize(img.data[i], maxval);
    if (bps == 2) {
      pixels[2 * i] = static_cast<unsigned char>(q >> 8);
      pixels[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    } else {
      pixels[i] = static_cast<unsigned char>(q);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = pixels.data() + y * stride;

  std::unique_ptr<FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + path);
  PngContext ctx;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, png_error_handler,
                                            png_warning_handler);
  if (!png) throw Error(ErrorCode::kIo, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "PNG write failed for " + path + ": " + ctx.message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               bit_depth, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_image(const std::string& path) {
  const std::string ext = lower_extension(path);
  Image img;
  if (ext == ".png") {
    img = read_png(path);
  } else {
    img = read_pnm(read_bytes(path));
  }
  return img;
}

void write_image(const std::string& path, const Image& image, int bit_depth) {
  image.validate();
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::kDomain, "bit depth must be 8 or 16");
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, image, bit_depth);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    write_pnm(path, image, bit_depth);
  } else {
    throw Error(ErrorCode::kDomain, "unsupported image extension '" + ext + "'");
  }
}

FlowField read_flo(const std::string& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 12) throw ParseError("truncated .flo header", static_cast<long long>(bytes.size()));
  const float magic = load_f32(bytes.data(), true);
  if (magic != kFloMagic) throw ParseError("bad .flo magic", 0);
  const auto w = static_cast<std::int32_t>(load_u32(bytes.data() + 4, true));
  const auto h = static_cast<std::int32_t>(load_u32(bytes.data() + 8, true));
  if (w <= 0 || h <= 0 || w > 1 << 20 || h > 1 << 20) throw ParseError("invalid .flo dimensions", 4);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < 12 + 8 * n) {
    throw ParseError("truncated .flo payload", static_cast<long long>(bytes.size()));
  }
  if (bytes.size() > 12 + 8 * n) {
    throw ParseError("trailing bytes after .flo payload", static_cast<long long>(12 + 8 * n));
  }
  FlowField flow(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = load_f32(&bytes[12 + 8 * i], true);
    const double v = load_f32(&bytes[16 + 8 * i], true);
    flow.u[i] = u;
    flow.v[i] = v;
    flow.valid[i] = std::isfinite(u) && std::isfinite(v) && std::abs(u) <= kFloInvalid &&
                    std::abs(v) <= kFloInvalid;
  }
  return flow;
}

void write_flo(const std::string& path, const FlowField& flow) {
  const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
  if (flow.width <= 0 || flow.height <= 0 || flow.u.size() != n || flow.v.size() != n ||
      flow.valid.size() != n) {
    throw Error(ErrorCode::kDomain, "inconsistent flow field");
  }
  std::vector<unsigned char> bytes;
  bytes.reserve(12 + 8 * n);
  store_f32(bytes, kFloMagic);
  store_u32(bytes, static_cast<std::uint32_t>(flow.width));
  store_u32(bytes, static_cast<std::uint32_t>(flow.height));
  for (std::size_t i = 0; i < n; ++i) {
    float u = static_cast<float>(flow.u[i]);
    float v = static_cast<float>(flow.v[i]);
    const bool marked = !(std::abs(u) <= kFloInvalid && std::abs(v) <= kFloInvalid);
    if (!flow.valid[i] && !marked) u = v = 1e10f;
    store_f32(bytes, u);
    store_f32(bytes, v);
  }
  write_bytes(path, bytes);
}

DepthMap read_pfm(const std::string& path) {
  const auto bytes = read_bytes(path);
  HeaderReader h(bytes);
  const std::string magic = h.token(false);
  if (magic == "PF") throw ParseError("colour PFM is not a depth map", 0);
  if (magic != "Pf") throw ParseError("bad PFM magic", 0);
  const long long w = h.integer();
  const long long hgt = h.integer();
  if (w <= 0 || hgt <= 0 || w > 1 << 20 || hgt > 1 << 20) {
    throw ParseError("invalid PFM dimensions", static_cast<long long>(h.position()));
  }
  const double scale = h.real();
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw ParseError("invalid PFM scale", static_cast<long long>(h.position()));
  }
  const std::size_t start = h.finish();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(hgt);
  if (bytes.size() < start + 4 * n) {
    throw ParseError("truncated PFM payload", static_cast<long long>(bytes.size()));
  }
  const bool little = scale < 0.0;
  DepthMap map(static_cast<int>(w), static_cast<int>(hgt));
  for (long long row = 0; row < hgt; ++row) {
    const long long y = hgt - 1 - row;
    for (long long x = 0; x < w; ++x) {
      const std::size_t src = start + 4 * static_cast<std::size_t>(row * w + x);
      const double v = load_f32(&bytes[src], little);
      const std::size_t i = static_cast<std::size_t>(y * w + x);
      map.values[i] = v;
      map.valid[i] = std::isfinite(v) && v > 0.0;
    }
  }
  return map;
}

void write_pfm(const std::string& path, const DepthMap& map) {
  if (map.width <= 0 || map.height <= 0 || map.values.size() != map.pixel_count()) {
    throw Error(ErrorCode::kDomain, "inconsistent depth map");
  }
  const std::string header =
      "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n-1\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + 4 * map.pixel_count());
  for (int y = map.height - 1; y >= 0; --y) {
    for (int x = 0; x < map.width; ++x) {
      store_f32(bytes, static_cast<float>(map.at(x, y)));
    }
  }
  write_bytes(path, bytes);
}

DepthMap range_to_zdepth_map(const DepthMap& range_depth, const CameraIntrinsics& K) {
  K.validate();
  DepthMap out = range_depth;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (!out.is_valid(x, y)) continue;
      out.set(x, y, range_to_zdepth(out.at(x, y), backproject_ray(K, Pixel(x, y))));
    }
  }
  return out;
}

DepthMap zdepth_to_range_map(const DepthMap& z_depth, const CameraIntrinsics& K) {
  K.validate();
  DepthMap out = z_depth;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (!out.is_valid(x, y)) continue;
      out.set(x, y, zdepth_to_range(out.at(x, y), backproject_ray(K, Pixel(x, y))));
    }
  }
  return out;
}

DepthMap read_depth(const std::string& path, const CameraIntrinsics& K,
                    DepthConvention convention) {
  DepthMap map = read_pfm(path);
  return convention == DepthConvention::kZ ? zdepth_to_range_map(map, K) : map;
}

void write_depth(const std::string& path, const DepthMap& range_depth, const CameraIntrinsics& K,
                 DepthConvention convention) {
  write_pfm(path, convention == DepthConvention::kZ ? range_to_zdepth_map(range_depth, K)
                                                    : range_depth);
}

CameraIntrinsics parse_intrinsics(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(d)) {
      throw ParseError("invalid intrinsics value '" + tok + "'");
    }
    v.push_back(d);
  }
  if (v.size() != 4 && v.size() != 5) {
    throw ParseError("intrinsics need fx fy cx cy [skew], got " + std::to_string(v.size()) +
                     " values");
  }
  CameraIntrinsics K{v[0], v[1], v[2], v[3], v.size() == 5 ? v[4] : 0.0};
  if (!(K.fx > 0.0) || !(K.fy > 0.0)) throw ParseError("focal lengths must be positive");
  return K;
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_intrinsics(ss.str());
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& K) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << format_double(K.fx) << ' ' << format_double(K.fy) << ' ' << format_double(K.cx) << ' '
      << format_double(K.cy) << ' ' << format_double(K.skew) << '\n';
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_csv(out, table);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  CsvTable table;
  std::string line;
  long long offset = 0;
  bool header = true;
  while (std::getline(in, line)) {
    const long long line_start = offset;
    offset += static_cast<long long>(line.size()) + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      table.header = std::move(cells);
      header = false;
      continue;
    }
    if (line.empty()) continue;
    if (cells.size() != table.header.size()) throw ParseError("CSV row width mismatch", line_start);
    std::vector<double> row;
    for (const std::string& c : cells) {
      if (c.empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        throw ParseError("invalid CSV number '" + c + "'", line_start);
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (header) throw ParseError("empty CSV file", 0);
  return table;
}

std::vector<std::string> read_path_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    const fs::path p = line.substr(b, e - b + 1);
    out.push_back(p.is_absolute() ? p.string() : (base / p).string());
  }
  return out;
}

namespace {

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, i, ext);
  return buf;
}

void write_list(const fs::path& path, const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& n : names) out << n << '\n';
}

}  // namespace

void write_sequence(const std::string& directory, const FrameSequence& seq,
                    DepthConvention convention) {
  if (seq.images.empty()) throw Error(ErrorCode::kDomain, "sequence has no frames");
  if (seq.flows.size() + 1 != seq.images.size()) {
    throw Error(ErrorCode::kDomain, "sequence needs one flow per consecutive frame pair");
  }
  if (!seq.depths.empty() && seq.depths.size() != seq.images.size()) {
    throw Error(ErrorCode::kDomain, "sequence depth count mismatch");
  }
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + directory + ": " + ec.message());
  write_intrinsics((dir / "intrinsics.txt").string(), seq.intrinsics);
  std::vector<std::string> frames, flows, depths;
  for (std::size_t i = 0; i < seq.images.size(); ++i) {
    frames.push_back(numbered("frame", i, ".png"));
    write_image((dir / frames.back()).string(), seq.images[i], 16);
  }
  for (std::size_t i = 0; i < seq.flows.size(); ++i) {
    flows.push_back(numbered("flow", i, ".flo"));
    write_flo((dir / flows.back()).string(), seq.flows[i]);
  }
  for (std::size_t i = 0; i < seq.depths.size(); ++i) {
    depths.push_back(numbered("depth", i, ".pfm"));
    write_depth((dir / depths.back()).string(), seq.depths[i], seq.intrinsics, convention);
  }
  write_list(dir / "frames.txt", frames);
  write_list(dir / "flows.txt", flows);
  write_list(dir / "depths.txt", depths);
}

FrameSequence read_sequence(const std::string& directory, DepthConvention convention) {
  const fs::path dir(directory);
  FrameSequence seq;
  seq.intrinsics = read_intrinsics((dir / "intrinsics.txt").string());
  for (const auto& p : read_path_list((dir / "frames.txt").string())) {
    seq.images.push_back(read_image(p));
  }
  for (const auto& p : read_path_list((dir / "flows.txt").string())) seq.flows.push_back(read_flo(p));
  if (fs::exists(dir / "depths.txt")) {
    for (const auto& p : read_path_list((dir / "depths.txt").string())) {
      seq.depths.push_back(read_depth(p, seq.intrinsics, convention));
    }
  }
  if (seq.images.empty()) throw ParseError("sequence lists no frames");
  if (seq.flows.size() + 1 != seq.images.size()) {
    throw ParseError("sequence has " + std::to_string(seq.images.size()) + " frames but " +
                     std::to_string(seq.flows.size()) + " flows");
  }
  if (!seq.depths.empty() && seq.depths.size() != seq.images.size()) {
    throw ParseError("sequence depth count does not match frame count");
  }
  for (std::size_t i = 0; i < seq.images.size(); ++i) {
    const Image& im = seq.images[i];
    if (im.width != seq.images[0].width || im.height != seq.images[0].height) {
      throw ParseError("frame " + std::to_string(i) + " size differs from frame 0");
    }
    if (i < seq.flows.size() && (seq.flows[i].width != im.width || seq.flows[i].height != im.height)) {
      throw ParseError("flow " + std::to_string(i) + " size differs from the frames");
    }
    if (!seq.depths.empty() &&
        (seq.depths[i].width != im.width || seq.depths[i].height != im.height)) {
      throw ParseError("depth " + std::to_string(i) + " size differs from the frames");
    }
  }
  return seq;
}

}  // namespace arapdepth
