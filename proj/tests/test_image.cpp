#include <doctest.h>

#include <filesystem>
#include <random>

#include "evislam/image.hpp"

using namespace evislam;

TEST_CASE("pfm rgb roundtrip is exact") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> uni(0.f, 1.f);
  ImageRgb img(13, 9);
  for (auto& v : img.data) v = uni(rng);
  auto path = std::filesystem::temp_directory_path() / "evislam_test.pfm";
  write_pfm(img, path);
  ImageRgb back = read_pfm_rgb(path);
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.data == img.data);
  std::filesystem::remove(path);
}

TEST_CASE("pfm gray roundtrip is exact") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> uni(0.f, 10.f);
  ImageGray img(7, 11);
  for (auto& v : img.data) v = uni(rng);
  auto path = std::filesystem::temp_directory_path() / "evislam_test_g.pfm";
  write_pfm(img, path);
  ImageGray back = read_pfm_gray(path);
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.data == img.data);
  std::filesystem::remove(path);
}

TEST_CASE("pfm read errors are data errors") {
  CHECK_THROWS_AS(read_pfm_rgb("/nonexistent/nope.pfm"), DataError);
  auto path = std::filesystem::temp_directory_path() / "evislam_trunc.pfm";
  ImageRgb img(4, 4, 0.5f);
  write_pfm(img, path);
  std::filesystem::resize_file(path, 20);
  CHECK_THROWS_AS(read_pfm_rgb(path), DataError);
  // Channel mismatch: gray reader on a color file.
  write_pfm(img, path);
  CHECK_THROWS_AS(read_pfm_gray(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("pixel addressing is row-major interleaved") {
  ImageRgb img(3, 2);
  img.px(2, 1)[1] = 0.75f;
  CHECK(img.data[(1 * 3 + 2) * 3 + 1] == 0.75f);
  CHECK(img.in_bounds(2, 1));
  CHECK(!img.in_bounds(3, 0));
  CHECK(!img.in_bounds(0, 2));
}
