#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pxp/io.hpp"
#include "pxp/operators.hpp"
#include "pxp/rng.hpp"

using namespace pxp;
namespace fs = std::filesystem;

namespace {

fs::path tmp_path(const std::string& name) {
  fs::path dir = fs::path("io_test_tmp");
  fs::create_directories(dir);
  return dir / name;
}

struct TmpDirJanitor {
  ~TmpDirJanitor() {
    std::error_code ec;
    fs::remove_all("io_test_tmp", ec);
  }
} const tmp_dir_janitor;

Image random_image(int h, int w, int ch, std::uint64_t seed) {
  Image img(h, w, ch);
  Rng rng(seed);
  for (double& v : img.data) v = rng.uniform01();
  return img;
}

}  // namespace

TEST_CASE("matrix container round-trips bit-exactly") {
  Eigen::MatrixXd m(3, 4);
  Rng rng(1);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = rng.normal();
  std::stringstream ss;
  write_pxp1(ss, m);
  Eigen::MatrixXd back = read_pxp1(ss);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix container rejects bad magic and truncation") {
  {
    std::stringstream ss("NOPE\n2 2\n");
    CHECK_THROWS_AS(read_pxp1(ss), FormatError);
  }
  {
    std::stringstream ss;
    write_pxp1(ss, Eigen::MatrixXd::Ones(4, 8));
    std::string blob = ss.str();
    std::stringstream cut(blob.substr(0, blob.size() - 16));
    CHECK_THROWS_AS(read_pxp1(cut), FormatError);
  }
}

TEST_CASE("pgm round-trip reproduces quantized values") {
  Image img = random_image(9, 7, 1, 3);
  fs::path p = tmp_path("roundtrip.pgm");
  save_pgm(img, p.string());
  Image back = load_pgm(p.string());
  REQUIRE(back.same_shape(img));
  double max_diff = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i)
    max_diff = std::max(max_diff, std::abs(img.data[i] - back.data[i]));
  CHECK(max_diff <= 1.0 / 510.0);
  // A second save/load is the exact identity on the quantized lattice.
  save_pgm(back, p.string());
  Image again = load_pgm(p.string());
  CHECK(std::equal(again.data.begin(), again.data.end(), back.data.begin()));
}

TEST_CASE("pgm parser handles comments and rejects other formats") {
  fs::path p = tmp_path("comment.pgm");
  {
    std::ofstream os(p, std::ios::binary);
    os << "P5\n# a comment\n2 1\n255\n";
    os.put(static_cast<char>(0));
    os.put(static_cast<char>(255));
  }
  Image img = load_pgm(p.string());
  CHECK(img.at(0, 0) == 0.0);
  CHECK(img.at(0, 1) == 1.0);

  fs::path bad = tmp_path("ascii.pgm");
  std::ofstream(bad) << "P2\n2 1\n255\n0 255\n";
  CHECK_THROWS_AS(load_pgm(bad.string()), FormatError);
}

TEST_CASE("png round-trip is exact for gray and rgb") {
  for (int ch : {1, 3}) {
    Image img = random_image(13, 5, ch, 17 + ch);
    fs::path p = tmp_path("roundtrip" + std::to_string(ch) + ".png");
    save_png(img, p.string());
    Image back = load_png(p.string());
    REQUIRE(back.same_shape(img));
    double max_diff = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
      max_diff = std::max(max_diff, std::abs(img.data[i] - back.data[i]));
    CHECK(max_diff <= 1.0 / 510.0);
    save_png(back, p.string());
    Image again = load_png(p.string());
    CHECK(std::equal(again.data.begin(), again.data.end(), back.data.begin()));
  }
}

TEST_CASE("png decoder rejects 16-bit files") {
  Image img = random_image(4, 4, 1, 2);
  fs::path p = tmp_path("deep.png");
  save_png(img, p.string());
  // Patch the IHDR bit-depth byte (offset 24: signature 8 + length 4 +
  // type 4 + width 4 + height 4).
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(24);
  f.put(16);
  f.close();
  CHECK_THROWS_AS(load_png(p.string()), FormatError);
}

TEST_CASE("load_image dispatches by suffix and reports missing files") {
  CHECK_THROWS_AS(load_image("does_not_exist.pgm"), IoError);
  CHECK_THROWS_AS(load_image("wrong_suffix.bmp"), FormatError);
  Image img = random_image(8, 8, 1, 5);
  fs::path p = tmp_path("dispatch.png");
  save_image(img, p.string());
  CHECK(load_image(p.string()).same_shape(img));
}

TEST_CASE("calibration files round-trip and reject non-finite entries") {
  SeparableOperator op;
  op.left = Eigen::MatrixXd::Random(3, 8);
  op.right = Eigen::MatrixXd::Random(4, 8);
  fs::path p = tmp_path("cal.bin");
  save_calibration(p.string(), op);
  SeparableOperator back = load_calibration(p.string());
  CHECK((back.left - op.left).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.right - op.right).cwiseAbs().maxCoeff() == 0.0);

  op.left(1, 2) = std::nan("");
  fs::path bad = tmp_path("cal_bad.bin");
  save_calibration(bad.string(), op);
  CHECK_THROWS_AS(load_calibration(bad.string()), FormatError);
}
