#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace spatialref;
namespace fs = std::filesystem;

TEST_CASE("raw depth round trip is bit exact") {
  std::string dir = testing::temp_dir("imageio-raw");
  CounterRng rng(3);
  DepthMap d;
  d.width = 37;
  d.height = 23;
  d.meters.resize(size_t(d.width) * d.height);
  for (float& m : d.meters) m = float(rng.uniform(0.0, 10.0));
  d.meters[0] = 0.0f;
  d.meters[1] = -0.5f;

  std::string path = dir + "/depth.raw";
  write_depth_raw(path, d);
  DepthMap back = read_depth(path);
  REQUIRE(back.width == d.width);
  REQUIRE(back.height == d.height);
  for (size_t i = 0; i < d.meters.size(); ++i) CHECK(back.meters[i] == d.meters[i]);
  CHECK_FALSE(back.valid_at(0, 0));
  CHECK_FALSE(back.valid_at(1, 0));
  CHECK(back.valid_at(2, 0));
}

TEST_CASE("16-bit depth PNG stores millimeters") {
  std::string dir = testing::temp_dir("imageio-png16");
  DepthMap d;
  d.width = 5;
  d.height = 2;
  d.meters = {0.001f, 0.5f, 1.2345f, 65.535f, 0.0f,
              2.0f,   -1.0f, std::numeric_limits<float>::quiet_NaN(), 3.3f, 9.999f};

  std::string path = dir + "/depth.png";
  write_depth_png16(path, d);
  DepthMap back = read_depth(path);
  REQUIRE(back.width == d.width);
  REQUIRE(back.height == d.height);

  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      float orig = d.meters[size_t(y) * d.width + x];
      float got = back.at(x, y);
      if (!std::isfinite(orig) || orig <= 0.0f) {
        CHECK(got == 0.0f);  // invalid values collapse to the sentinel
      } else {
        CHECK(std::abs(double(got) - double(orig)) <= 0.5e-3 + 1e-9);
      }
    }
  }
}

TEST_CASE("mask PNG round trip") {
  std::string dir = testing::temp_dir("imageio-mask");
  CounterRng rng(5);
  Mask m;
  m.width = 31;
  m.height = 17;
  m.on.resize(size_t(m.width) * m.height);
  for (auto& v : m.on) v = rng.below(2) ? 1 : 0;

  std::string path = dir + "/mask.png";
  write_mask_png(path, m);
  Mask back = read_mask_png(path);
  REQUIRE(back.width == m.width);
  REQUIRE(back.height == m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) CHECK(back.at(x, y) == m.at(x, y));
}

TEST_CASE("depth reader rejects malformed files") {
  std::string dir = testing::temp_dir("imageio-bad");
  CHECK_THROWS_AS(read_depth(dir + "/missing.raw"), ValidationError);

  atomic_write_file(dir + "/short.raw", "abc");
  CHECK_THROWS_AS(read_depth(dir + "/short.raw"), ValidationError);

  // Header promises more pixels than the payload carries.
  std::string bogus(8 + 4, '\0');
  bogus[0] = 16;
  bogus[4] = 16;
  atomic_write_file(dir + "/truncated.raw", bogus);
  CHECK_THROWS_AS(read_depth(dir + "/truncated.raw"), ValidationError);

  // An 8-bit mask PNG is not an acceptable depth image.
  Mask m;
  m.width = m.height = 4;
  m.on.assign(16, 1);
  write_mask_png(dir + "/mask8.png", m);
  CHECK_THROWS_WITH_AS(read_depth(dir + "/mask8.png"),
                       doctest::Contains("16-bit"), ValidationError);

  CHECK_THROWS_AS(read_mask_png(dir + "/missing.png"), ValidationError);
  atomic_write_file(dir + "/garbage.png", "not a png at all");
  CHECK_THROWS_AS(read_mask_png(dir + "/garbage.png"), ValidationError);
}

TEST_CASE("atomic file writes land complete and leave no temp file") {
  std::string dir = testing::temp_dir("imageio-atomic");
  std::string path = dir + "/out.txt";

  atomic_write_file(path, "first");
  CHECK(read_file(path) == "first");
  atomic_write_file(path, "second, longer content\n");
  CHECK(read_file(path) == "second, longer content\n");
  CHECK_FALSE(fs::exists(path + ".tmp"));

  CHECK_THROWS_AS(atomic_write_file(dir + "/no-such-dir/out.txt", "x"),
                  ValidationError);
  CHECK_THROWS_AS(read_file(dir + "/never-written.txt"), ValidationError);
}
