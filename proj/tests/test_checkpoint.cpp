#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sphereflow/checkpoint.hpp"
#include "support.hpp"

using namespace sphereflow;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint(bool with_ema) {
  Rng rng(1);
  MlpShape shape;
  shape.data_dim = 3;
  shape.hidden = {5, 4};
  shape.time_embed_dim = 6;
  Checkpoint ck{FlowVariant(FlowMethod::SFM, true, true, 1.75), 6.5, 42, init_mlp(shape, rng, false), {}};
  if (with_ema) ck.ema = init_mlp(shape, rng, false);
  return ck;
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("sphereflow_ck_" + name)).string();
}

std::vector<char> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_all(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  for (bool ema : {false, true}) {
    const auto ck = sample_checkpoint(ema);
    const auto path = temp_path("rt.sfck");
    save_checkpoint(path, ck);
    const auto back = load_checkpoint(path);
    CHECK(back.variant.method() == FlowMethod::SFM);
    CHECK(back.variant.source_projection());
    CHECK(back.variant.target_projection());
    CHECK(back.variant.radius() == 1.75);
    CHECK(back.final_norm == 6.5);
    CHECK(back.seed == 42);
    CHECK(back.params.time_embed_dim == 6);
    CHECK(flatten(back.params) == flatten(ck.params));
    CHECK(back.ema.has_value() == ema);
    if (ema) CHECK(flatten(*back.ema) == flatten(*ck.ema));
    // Header: magic, version, method, flags, radius, final norm, seed,
    // embed dim, layer count, widths, EMA flag; then the doubles.
    const std::size_t header = 4 + 4 + 4 + 1 + 1 + 2 + 8 + 8 + 8 + 4 + 4 + 4 * 4 + 4;
    CHECK(fs::file_size(path) == header + 8 * ck.params.parameter_count() * (ema ? 2 : 1));
    std::remove(path.c_str());
  }
}

TEST_CASE("checkpoint without a final norm") {
  auto ck = sample_checkpoint(false);
  ck.final_norm.reset();
  const auto path = temp_path("nonorm.sfck");
  save_checkpoint(path, ck);
  CHECK_FALSE(load_checkpoint(path).final_norm.has_value());
  std::remove(path.c_str());
}

TEST_CASE("corrupt checkpoints") {
  const auto path = temp_path("good.sfck");
  save_checkpoint(path, sample_checkpoint(true));
  const auto bytes = read_all(path);
  const auto bad = temp_path("bad.sfck");

  auto magic = bytes;
  magic[0] = 'X';
  write_all(bad, magic);
  CHECK_THROWS_KIND(load_checkpoint(bad), BadCheckpoint);

  auto version = bytes;
  version[4] = 9;
  write_all(bad, version);
  CHECK_THROWS_KIND(load_checkpoint(bad), BadCheckpoint);

  write_all(bad, std::vector<char>(bytes.begin(), bytes.end() - 5));
  CHECK_THROWS_KIND(load_checkpoint(bad), BadCheckpoint);

  auto extra = bytes;
  extra.push_back(0);
  write_all(bad, extra);
  CHECK_THROWS_KIND(load_checkpoint(bad), BadCheckpoint);

  write_all(bad, std::vector<char>(bytes.begin(), bytes.begin() + 10));
  CHECK_THROWS_KIND(load_checkpoint(bad), BadCheckpoint);

  CHECK_THROWS_KIND(load_checkpoint(temp_path("missing.sfck")), IoError);
  std::remove(path.c_str());
  std::remove(bad.c_str());
}
