#pragma once

// Turn-text -> vector embeddings: deterministic mock, HTTP provider, and a
// content-addressed disk cache.
//
// Cache layout: cache/<model_id>/<first-2-hex>/<digest>.vec where digest is
// SHA-256(model_id || 0x00 || utf8 text). Each .vec file is one fixed-width
// record: 32-byte digest, uint32 LE dimension, then dim little-endian 32-bit
// floats. An append-only `index.log` sidecar per model directory lists
// `<digest-hex> <dim>` pairs. Values are stored (and served) at 32-bit float
// precision; all downstream math runs in double.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ideaforge/util.hpp"

namespace ideaforge::embed {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  size_t dim() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// Cosine distance: 1 - u.v / (|u||v|), range [0,2]. Zero vectors are an
// error by contract; silently mapping them to a convention value would
// corrupt every downstream feature.

inline double cosine_distance(const std::vector<double>& u,
                              const std::vector<double>& v) {
  if (u.size() != v.size() || u.empty())
    throw Error("cosine_distance: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw Error("cosine_distance: zero vector");
  return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline double cosine_distance(const EmbeddingVector& u, const EmbeddingVector& v) {
  return cosine_distance(u.values, v.values);
}

// ---------------------------------------------------------------------------
// Deterministic mock embedding: seed an RNG with SHA-256(text || seed-LE8),
// draw `dim` standard normals, scale to unit Euclidean norm.

inline EmbeddingVector mock_embed(std::string_view text, size_t dim,
                                  std::uint64_t seed) {
  if (dim < 2) throw Error("mock_embed: dim must be >= 2");
  std::string key(text);
  for (int i = 0; i < 8; ++i)
    key.push_back(static_cast<char>((seed >> (8 * i)) & 0xff));
  DetRng rng(sha256_seed64(key));

  EmbeddingVector out;
  out.model_id = "mock";
  out.values.resize(dim);
  double norm = 0.0;
  for (size_t i = 0; i < dim; ++i) {
    out.values[i] = rng.normal();
    norm += out.values[i] * out.values[i];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) return mock_embed(text, dim, seed + 1);  // vanishing odds
  for (double& v : out.values) v /= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Providers

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) = 0;
};

class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  MockEmbeddingProvider(size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  std::vector<std::vector<double>> embed(
      const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(mock_embed(t, dim_, seed_).values);
    return out;
  }

 private:
  size_t dim_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Cache key

inline std::string cache_digest_hex(std::string_view model_id,
                                    std::string_view text) {
  std::string key(model_id);
  key.push_back('\0');
  key += text;
  return sha256_hex(key);
}

inline std::string sanitize_path_component(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
        c == '-')
      out += c;
    else
      out += '_';
  }
  return out.empty() ? std::string("_") : out;
}

// ---------------------------------------------------------------------------
// Embedding service: order-preserving batch embedding with memory + disk
// cache in front of the provider. Safe for use from concurrent
// conversations: reads are lock-free after the mutex-guarded lookup, disk
// writes are serialized and atomically renamed into place.

class EmbeddingService {
 public:
  EmbeddingService(EmbeddingProvider* provider, std::string model_id,
                   size_t expected_dim,
                   std::optional<std::filesystem::path> cache_dir = std::nullopt)
      : provider_(provider),
        model_id_(std::move(model_id)),
        expected_dim_(expected_dim),
        cache_dir_(std::move(cache_dir)) {}

  const std::string& model_id() const { return model_id_; }
  size_t dim() const { return expected_dim_; }
  std::uint64_t cache_hits() const { return cache_hits_; }
  std::uint64_t provider_texts() const { return provider_texts_; }

  // Drops the in-memory layer; disk cache (if configured) still serves.
  void evict_memory() {
    std::lock_guard<std::mutex> lk(mu_);
    memory_.clear();
  }

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error("embed_batch: empty input");
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<size_t> missing;
    {
      std::lock_guard<std::mutex> lk(mu_);
      for (size_t i = 0; i < texts.size(); ++i) {
        const std::string digest = cache_digest_hex(model_id_, texts[i]);
        if (auto it = memory_.find(digest); it != memory_.end()) {
          out[i] = it->second;
          ++cache_hits_;
          continue;
        }
        if (auto v = read_disk(digest)) {
          out[i] = *v;
          memory_[digest] = *v;
          ++cache_hits_;
          continue;
        }
        missing.push_back(i);
      }
    }
    if (missing.empty()) return out;

    // De-duplicate provider traffic within the batch.
    std::vector<std::string> unique_texts;
    std::map<std::string, size_t> pos;  // digest -> index into unique_texts
    for (size_t i : missing) {
      const std::string digest = cache_digest_hex(model_id_, texts[i]);
      if (!pos.count(digest)) {
        pos[digest] = unique_texts.size();
        unique_texts.push_back(texts[i]);
      }
    }
    auto vecs = provider_->embed(unique_texts);
    provider_texts_ += unique_texts.size();
    if (vecs.size() != unique_texts.size())
      throw GatewayError("embedding provider returned wrong count");
    for (auto& v : vecs) {
      if (v.size() != expected_dim_)
        throw GatewayError("embedding dimension mismatch: expected " +
                           std::to_string(expected_dim_) + ", got " +
                           std::to_string(v.size()));
      quantize_f32(v);
      for (double x : v)
        if (!std::isfinite(x)) throw GatewayError("non-finite embedding value");
    }

    std::lock_guard<std::mutex> lk(mu_);
    for (size_t i : missing) {
      const std::string digest = cache_digest_hex(model_id_, texts[i]);
      EmbeddingVector ev;
      ev.model_id = model_id_;
      ev.values = vecs[pos[digest]];
      write_disk(digest, ev.values);
      memory_[digest] = ev;
      out[i] = std::move(ev);
    }
    return out;
  }

 private:
  // Stored precision is float32; keep returned values identical to what a
  // later cache read will produce.
  static void quantize_f32(std::vector<double>& v) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  }

  std::filesystem::path vec_path(const std::string& digest) const {
    return *cache_dir_ / sanitize_path_component(model_id_) /
           digest.substr(0, 2) / (digest + ".vec");
  }

  std::optional<EmbeddingVector> read_disk(const std::string& digest) const {
    if (!cache_dir_) return std::nullopt;
    std::ifstream f(vec_path(digest), std::ios::binary);
    if (!f) return std::nullopt;
    std::array<unsigned char, 32> stored{};
    f.read(reinterpret_cast<char*>(stored.data()), 32);
    std::uint32_t dim = 0;
    unsigned char dim_bytes[4];
    f.read(reinterpret_cast<char*>(dim_bytes), 4);
    if (!f) return std::nullopt;
    dim = static_cast<std::uint32_t>(dim_bytes[0]) |
          (static_cast<std::uint32_t>(dim_bytes[1]) << 8) |
          (static_cast<std::uint32_t>(dim_bytes[2]) << 16) |
          (static_cast<std::uint32_t>(dim_bytes[3]) << 24);
    if (dim != expected_dim_)
      throw GatewayError("cached embedding has wrong dimension");
    EmbeddingVector ev;
    ev.model_id = model_id_;
    ev.values.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      unsigned char b[4];
      f.read(reinterpret_cast<char*>(b), 4);
      if (!f) return std::nullopt;
      std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                           (static_cast<std::uint32_t>(b[1]) << 8) |
                           (static_cast<std::uint32_t>(b[2]) << 16) |
                           (static_cast<std::uint32_t>(b[3]) << 24);
      float fv;
      std::memcpy(&fv, &bits, 4);
      ev.values[i] = static_cast<double>(fv);
    }
    return ev;
  }

  void write_disk(const std::string& digest, const std::vector<double>& values) {
    if (!cache_dir_) return;
    namespace fs = std::filesystem;
    const fs::path target = vec_path(digest);
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cache write failed: " + tmp.string());
      for (size_t i = 0; i < 64; i += 2) {
        unsigned char byte = static_cast<unsigned char>(
            std::stoi(digest.substr(i, 2), nullptr, 16));
        f.write(reinterpret_cast<char*>(&byte), 1);
      }
      const std::uint32_t dim = static_cast<std::uint32_t>(values.size());
      unsigned char dim_bytes[4] = {
          static_cast<unsigned char>(dim & 0xff),
          static_cast<unsigned char>((dim >> 8) & 0xff),
          static_cast<unsigned char>((dim >> 16) & 0xff),
          static_cast<unsigned char>((dim >> 24) & 0xff)};
      f.write(reinterpret_cast<char*>(dim_bytes), 4);
      for (double d : values) {
        const float fv = static_cast<float>(d);
        std::uint32_t bits;
        std::memcpy(&bits, &fv, 4);
        unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                              static_cast<unsigned char>((bits >> 8) & 0xff),
                              static_cast<unsigned char>((bits >> 16) & 0xff),
                              static_cast<unsigned char>((bits >> 24) & 0xff)};
        f.write(reinterpret_cast<char*>(b), 4);
      }
    }
    fs::rename(tmp, target);
    std::ofstream idx(target.parent_path().parent_path() / "index.log",
                      std::ios::app);
    idx << digest << ' ' << values.size() << '\n';
  }

  EmbeddingProvider* provider_;
  std::string model_id_;
  size_t expected_dim_;
  std::optional<std::filesystem::path> cache_dir_;
  std::mutex mu_;
  std::map<std::string, EmbeddingVector> memory_;
  std::uint64_t cache_hits_ = 0;
  std::uint64_t provider_texts_ = 0;
};

}  // namespace ideaforge::embed
