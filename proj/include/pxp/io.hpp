#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "pxp/errors.hpp"
#include "pxp/image.hpp"

namespace pxp {

// Matrix container: magic "PXP1\n", ASCII header "rows cols\n", then
// rows*cols little-endian float64 values in row-major order. Multiple
// sections may be concatenated in one file (calibration pairs, checkpoints).
void write_pxp1(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_pxp1(std::istream& is);

void save_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);

// 8-bit image I/O. PGM is binary P5; PNG supports 8-bit grayscale and RGB
// only (16-bit, palette, alpha and interlace are rejected). Values map as
// v/255 on load and round(255*x) after clipping on save.
Image load_image(const std::string& path);
void save_image(const Image& image, const std::string& path);

Image load_pgm(const std::string& path);
void save_pgm(const Image& image, const std::string& path);
Image load_png(const std::string& path);
void save_png(const Image& image, const std::string& path);

}  // namespace pxp
