#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gdr/error.hpp"
#include "gdr/store.hpp"
#include "test_util.hpp"

using namespace gdr;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("store enforces unique names and keeps insertion order") {
  ParameterStore store;
  store.add("b.second", Tensor({2}));
  store.add("a.first", Tensor({3}));
  CHECK_THROWS_AS(store.add("b.second", Tensor({2})), std::invalid_argument);
  CHECK(store.entries()[0].first == "b.second");
  CHECK(store.entries()[1].first == "a.first");
  CHECK(store.has_prefix("a."));
  CHECK_FALSE(store.has_prefix("c."));
}

TEST_CASE("save -> load -> save produces byte-identical checkpoints") {
  Rng rng(7);
  ParameterStore store;
  store.init_weight("generator.w", 5, 3, rng);
  store.init_zeros("generator.b", {1, 3});
  store.init_weight("matcher.w", 2, 4, rng);
  put_meta(store, "meta.hidden", 32.0);

  const std::string p1 = temp_path("gdr_store_a.gdr");
  const std::string p2 = temp_path("gdr_store_b.gdr");
  store.save(p1);
  ParameterStore loaded = ParameterStore::load(p1);
  loaded.save(p2);
  CHECK(read_bytes(p1) == read_bytes(p2));

  CHECK(loaded.count() == store.count());
  CHECK(loaded.entries()[0].first == "generator.w");
  CHECK(get_meta(loaded, "meta.hidden") == 32.0);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("loading rejects wrong magic and truncated files") {
  const std::string path = temp_path("gdr_store_bad.gdr");
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(ParameterStore::load(path), DataError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "GDR1";
    const char partial[4] = {9, 0, 0, 0};
    os.write(partial, 4);
  }
  CHECK_THROWS_AS(ParameterStore::load(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint values round-trip through 32-bit floats") {
  ParameterStore store;
  store.add("x", Tensor::from_values({3}, {1.5, -0.25, 1024.0}));
  const std::string path = temp_path("gdr_store_f32.gdr");
  store.save(path);
  ParameterStore loaded = ParameterStore::load(path);
  CHECK((*loaded.get("x").data)[0] == 1.5);
  CHECK((*loaded.get("x").data)[1] == -0.25);
  CHECK((*loaded.get("x").data)[2] == 1024.0);
  std::remove(path.c_str());
}
