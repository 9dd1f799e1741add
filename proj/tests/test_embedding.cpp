#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "ideaforge/embedding.hpp"
#include "oracles.hpp"

using namespace ideaforge;
using namespace ideaforge::embed;
namespace fs = std::filesystem;

namespace {

// Provider wrapper that counts round trips to the backend.
class CountingProvider : public EmbeddingProvider {
 public:
  CountingProvider(size_t dim, std::uint64_t seed) : inner_(dim, seed) {}
  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override {
    calls += 1;
    texts_seen += texts.size();
    return inner_.embed(texts);
  }
  int calls = 0;
  size_t texts_seen = 0;

 private:
  MockEmbeddingProvider inner_;
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ideaforge-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("mock_embed is deterministic, unit norm, text-sensitive") {
  const auto a1 = mock_embed("a", 8, 42);
  const auto a2 = mock_embed("a", 8, 42);
  CHECK(a1.values == a2.values);

  double norm = 0;
  for (double v : a1.values) norm += v * v;
  CHECK(std::fabs(std::sqrt(norm) - 1.0) < 1e-12);

  const auto b = mock_embed("b", 8, 42);
  bool differs = false;
  for (size_t i = 0; i < 8; ++i) differs |= a1.values[i] != b.values[i];
  CHECK(differs);

  const auto a_seed2 = mock_embed("a", 8, 43);
  bool seed_differs = false;
  for (size_t i = 0; i < 8; ++i) seed_differs |= a1.values[i] != a_seed2.values[i];
  CHECK(seed_differs);

  CHECK_THROWS_AS(mock_embed("x", 1, 0), Error);
}

TEST_CASE("cosine distance identities") {
  const std::vector<double> u{1, 0}, v{0, 1}, w{-1, 0};
  CHECK(cosine_distance(u, u) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_distance(u, v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_distance(u, w) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_distance(u, {0.0, 0.0}), Error);
  CHECK_THROWS_AS(cosine_distance(u, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("cosine distance: symmetry and scale invariance on random vectors") {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> u(6), v(6), v_scaled(6);
    for (size_t i = 0; i < 6; ++i) {
      u[i] = gauss(eng);
      v[i] = gauss(eng);
    }
    const double c = 0.001 + 1000.0 * std::generate_canonical<double, 53>(eng);
    for (size_t i = 0; i < 6; ++i) v_scaled[i] = c * v[i];
    CHECK(std::fabs(cosine_distance(u, v) - cosine_distance(v, u)) < 1e-12);
    CHECK(std::fabs(cosine_distance(u, v) - cosine_distance(u, v_scaled)) < 1e-12);
    CHECK(std::fabs(cosine_distance(u, v) - oracle::dcos(u, v)) < 1e-12);
  }
}

TEST_CASE("embed_batch: identical texts in one batch give identical vectors") {
  CountingProvider provider(16, 1);
  EmbeddingService svc(&provider, "m16", 16);
  const auto out = svc.embed_batch({"alpha", "beta", "alpha"});
  REQUIRE(out.size() == 3);
  CHECK(out[0].values == out[2].values);
  CHECK(out[0].values != out[1].values);
  CHECK(provider.texts_seen == 2);  // de-duplicated within the batch
}

TEST_CASE("embed_batch consults the cache before the provider") {
  CountingProvider provider(8, 2);
  EmbeddingService svc(&provider, "m8", 8);
  const auto first = svc.embed_batch({"hello"});
  const auto hits_before = svc.cache_hits();
  const auto second = svc.embed_batch({"hello"});
  CHECK(first[0].values == second[0].values);
  CHECK(provider.calls == 1);  // zero new network requests
  CHECK(svc.cache_hits() == hits_before + 1);
}

TEST_CASE("embed_batch rejects a provider with the wrong dimension") {
  CountingProvider provider(8, 3);
  EmbeddingService svc(&provider, "m", 16);
  CHECK_THROWS_AS(svc.embed_batch({"x"}), GatewayError);
}

TEST_CASE("embed_batch rejects empty input") {
  CountingProvider provider(8, 3);
  EmbeddingService svc(&provider, "m", 8);
  CHECK_THROWS_AS(svc.embed_batch({}), Error);
}

TEST_CASE("disk cache round-trips vectors bit-exactly") {
  TempDir tmp;
  CountingProvider provider(12, 4);
  EmbeddingService svc(&provider, "model-x", 12, tmp.path);
  const auto first = svc.embed_batch({"cached text", "other text"});
  CHECK(provider.calls == 1);

  svc.evict_memory();
  const auto again = svc.embed_batch({"cached text", "other text"});
  CHECK(provider.calls == 1);  // served from disk
  CHECK(first[0].values == again[0].values);
  CHECK(first[1].values == again[1].values);

  // a brand-new service instance reads the same bytes
  CountingProvider provider2(12, 4);
  EmbeddingService svc2(&provider2, "model-x", 12, tmp.path);
  const auto fresh = svc2.embed_batch({"cached text"});
  CHECK(provider2.calls == 0);
  CHECK(fresh[0].values == first[0].values);
}

TEST_CASE("cache files live under model/<2-hex>/<digest>.vec with a sidecar") {
  TempDir tmp;
  CountingProvider provider(4, 5);
  EmbeddingService svc(&provider, "my/model", 4, tmp.path);
  svc.embed_batch({"x"});
  const std::string digest = cache_digest_hex("my/model", "x");
  const fs::path expect =
      tmp.path / "my_model" / digest.substr(0, 2) / (digest + ".vec");
  CHECK(fs::exists(expect));
  CHECK(fs::file_size(expect) == 32 + 4 + 4 * 4);
  CHECK(fs::exists(tmp.path / "my_model" / "index.log"));
}

TEST_CASE("cache keys separate models sharing text") {
  CHECK(cache_digest_hex("model-a", "text") != cache_digest_hex("model-b", "text"));
  // the 0x00 separator prevents boundary ambiguity
  CHECK(cache_digest_hex("ab", "c") != cache_digest_hex("a", "bc"));
}
