#include "pxp/io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace pxp {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

int to_level(double x) {
  double c = std::clamp(x, 0.0, 1.0);
  return static_cast<int>(std::lround(c * 255.0));
}

}  // namespace

void write_pxp1(std::ostream& os, const Eigen::MatrixXd& m) {
  os << "PXP1\n" << m.rows() << " " << m.cols() << "\n";
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failure in matrix container");
}

Eigen::MatrixXd read_pxp1(std::istream& is) {
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, "PXP1\n", 5) != 0)
    throw FormatError("bad magic in matrix container");
  std::string header;
  if (!std::getline(is, header)) throw FormatError("missing matrix header line");
  std::istringstream hs(header);
  long long rows = -1, cols = -1;
  hs >> rows >> cols;
  if (!hs || rows < 0 || cols < 0)
    throw FormatError("malformed matrix header: '" + header + "'");
  Eigen::MatrixXd m(rows, cols);
  std::vector<double> row(static_cast<std::size_t>(cols));
  for (long long r = 0; r < rows; ++r) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!is)
      throw FormatError("matrix payload truncated: declared " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    for (long long c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  auto os = open_out(path);
  write_pxp1(os, m);
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  auto is = open_in(path);
  return read_pxp1(is);
}

// ---------------------------------------------------------------- PGM

void save_pgm(const Image& image, const std::string& path) {
  if (image.channels != 1) throw ParamError("PGM supports a single channel");
  auto os = open_out(path);
  os << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(image.width));
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c)
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(to_level(image.at(r, c)));
    os.write(reinterpret_cast<const char*>(row.data()), image.width);
  }
  if (!os) throw IoError("write failure: " + path);
}

namespace {

// Reads one PNM token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = is.get();
      continue;
    }
    if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while ((ch = is.peek()) != EOF && !std::isspace(ch)) tok.push_back(static_cast<char>(is.get()));
      return tok;
    }
  }
  throw FormatError("unexpected end of PGM header");
}

}  // namespace

Image load_pgm(const std::string& path) {
  auto is = open_in(path);
  if (pnm_token(is) != "P5") throw FormatError("not a binary PGM (P5): " + path);
  int w = std::stoi(pnm_token(is));
  int h = std::stoi(pnm_token(is));
  int maxval = std::stoi(pnm_token(is));
  if (w <= 0 || h <= 0) throw FormatError("bad PGM dimensions");
  if (maxval != 255) throw FormatError("only maxval 255 PGM supported");
  is.get();  // single whitespace after maxval
  Image image(h, w, 1);
  std::vector<unsigned char> row(static_cast<std::size_t>(w));
  for (int r = 0; r < h; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), w);
    if (!is) throw FormatError("PGM pixel data truncated");
    for (int c = 0; c < w; ++c) image.at(r, c) = row[static_cast<std::size_t>(c)] / 255.0;
  }
  return image;
}

// ---------------------------------------------------------------- PNG

namespace {

void put_be32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

std::uint32_t get_be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

void write_chunk(std::ostream& os, const char type[4], const std::vector<unsigned char>& data) {
  std::vector<unsigned char> buf;
  put_be32(buf, static_cast<std::uint32_t>(data.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), data.begin(), data.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0, buf.data() + 4, static_cast<uInt>(4 + data.size())));
  put_be32(buf, crc);
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

const unsigned char kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace

void save_png(const Image& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3)
    throw ParamError("PNG output supports 1 or 3 channels");
  const int bpp = image.channels;
  const std::size_t stride = static_cast<std::size_t>(image.width) * bpp;
  std::vector<unsigned char> raw;
  raw.reserve((stride + 1) * static_cast<std::size_t>(image.height));
  for (int r = 0; r < image.height; ++r) {
    raw.push_back(0);  // filter type 0
    for (int c = 0; c < image.width; ++c)
      for (int ch = 0; ch < bpp; ++ch)
        raw.push_back(static_cast<unsigned char>(to_level(image.at(r, c, ch))));
  }
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(bound);
  if (::compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw IoError("zlib compression failed");
  compressed.resize(bound);

  auto os = open_out(path);
  os.write(reinterpret_cast<const char*>(kPngSig), 8);
  std::vector<unsigned char> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(image.width));
  put_be32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);                                // bit depth
  ihdr.push_back(bpp == 1 ? 0 : 2);                 // color type
  ihdr.push_back(0); ihdr.push_back(0); ihdr.push_back(0);  // deflate, filter, no interlace
  write_chunk(os, "IHDR", ihdr);
  write_chunk(os, "IDAT", compressed);
  write_chunk(os, "IEND", {});
  if (!os) throw IoError("write failure: " + path);
}

Image load_png(const std::string& path) {
  auto is = open_in(path);
  unsigned char sig[8];
  is.read(reinterpret_cast<char*>(sig), 8);
  if (!is || std::memcmp(sig, kPngSig, 8) != 0) throw FormatError("not a PNG file: " + path);

  int w = 0, h = 0, bit_depth = 0, color_type = 0;
  std::vector<unsigned char> idat;
  bool saw_ihdr = false, saw_iend = false;
  while (!saw_iend) {
    unsigned char head[8];
    is.read(reinterpret_cast<char*>(head), 8);
    if (!is) throw FormatError("PNG truncated in chunk header");
    std::uint32_t len = get_be32(head);
    std::string type(reinterpret_cast<char*>(head) + 4, 4);
    std::vector<unsigned char> data(len);
    if (len) {
      is.read(reinterpret_cast<char*>(data.data()), len);
      if (!is) throw FormatError("PNG truncated in chunk payload");
    }
    is.ignore(4);  // CRC; integrity is zlib's problem downstream
    if (type == "IHDR") {
      if (len != 13) throw FormatError("bad IHDR length");
      w = static_cast<int>(get_be32(data.data()));
      h = static_cast<int>(get_be32(data.data() + 4));
      bit_depth = data[8];
      color_type = data[9];
      if (data[12] != 0) throw FormatError("interlaced PNG unsupported");
      saw_ihdr = true;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data.begin(), data.end());
    } else if (type == "IEND") {
      saw_iend = true;
    }
  }
  if (!saw_ihdr) throw FormatError("PNG missing IHDR");
  if (bit_depth != 8) throw FormatError("only 8-bit PNG supported");
  if (color_type != 0 && color_type != 2)
    throw FormatError("only grayscale or RGB PNG supported (no palette/alpha)");
  if (w <= 0 || h <= 0) throw FormatError("bad PNG dimensions");

  const int bpp = color_type == 0 ? 1 : 3;
  const std::size_t stride = static_cast<std::size_t>(w) * bpp;
  std::vector<unsigned char> raw((stride + 1) * static_cast<std::size_t>(h));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (::uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw FormatError("PNG IDAT stream corrupt");

  // Undo per-row filters in place, building the defiltered scanlines.
  std::vector<unsigned char> cur(stride), prev(stride, 0);
  Image image(h, w, bpp);
  for (int r = 0; r < h; ++r) {
    const unsigned char* line = raw.data() + static_cast<std::size_t>(r) * (stride + 1);
    int filter = line[0];
    for (std::size_t i = 0; i < stride; ++i) {
      int x = line[1 + i];
      int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      int b = prev[i];
      int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: x += paeth(a, b, c); break;
        default: throw FormatError("unknown PNG filter type");
      }
      cur[i] = static_cast<unsigned char>(x & 0xFF);
    }
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < bpp; ++ch)
        image.at(r, c, ch) = cur[static_cast<std::size_t>(c) * bpp + ch] / 255.0;
    std::swap(cur, prev);
  }
  return image;
}

// ---------------------------------------------------------------- dispatch

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

Image load_image(const std::string& path) {
  if (has_suffix(path, ".pgm")) return load_pgm(path);
  if (has_suffix(path, ".png")) return load_png(path);
  throw FormatError("unsupported image format (want .pgm or .png): " + path);
}

void save_image(const Image& image, const std::string& path) {
  if (has_suffix(path, ".pgm")) return save_pgm(image, path);
  if (has_suffix(path, ".png")) return save_png(image, path);
  throw FormatError("unsupported image format (want .pgm or .png): " + path);
}

}  // namespace pxp
