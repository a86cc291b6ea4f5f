#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vergsa/trace.hpp"

namespace vergsa {

struct EmbeddingVector {
    std::vector<double> values;

    double norm() const;
    std::size_t dimension() const { return values.size(); }
    // Throws InvalidSpec for non-finite entries or zero norm, DimensionMismatch
    // when `expected_dim` is nonzero and differs.
    void validate(std::size_t expected_dim = 0) const;
};

/// Encoder handle: maps (name, description) to a fixed-dimension vector.
/// The concatenation order is name then description, separated by a newline.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed_text(std::string_view text) const = 0;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Deterministic offline fallback: hashed character-trigram term frequencies,
/// L2-normalized. Trigrams are byte windows of width 3 over the input (the
/// whole string when shorter); buckets are FNV-1a64 mod the dimension.
class TrigramHashEmbedder final : public Embedder {
  public:
    explicit TrigramHashEmbedder(std::size_t dim = 256);
    EmbeddingVector embed_text(std::string_view text) const override;
    std::string id() const override;
    std::size_t dimension() const override { return dim_; }

  private:
    std::size_t dim_;
};

struct PoolEntry {
    TaskSpec task;
    EmbeddingVector embedding;
    Solution solution;  // the successful one
    std::uint64_t inserted_at = 0;
};

/// Dynamic pool of successfully executed tasks. Value semantics; concurrent
/// readers are safe, writers take a copy or external exclusion.
struct ExemplarPool {
    std::vector<PoolEntry> entries;
    std::size_t dimension = 0;
    std::string embedder_id;
    std::uint64_t next_seq = 0;

    std::size_t size() const { return entries.size(); }
};

ExemplarPool make_pool(const Embedder& embedder);

struct ScoredEntry {
    PoolEntry entry;
    double similarity = 0.0;
};

enum class DuplicatePolicy { Replace, Reject };

EmbeddingVector embed_task(std::string_view name, std::string_view description,
                           const Embedder& embedder);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Top-K entries by cosine similarity, descending; ties broken by lower
/// inserted_at. Returns min(K, |pool|) entries. Throws EmptyPool.
std::vector<ScoredEntry> retrieve_top_k(const ExemplarPool& pool, const EmbeddingVector& query,
                                        std::size_t k = 2);

/// Appends a successfully executed task. Throws NotSuccessful unless
/// solution.overall_success == true; an identical (name, description) entry
/// is replaced or rejected per `policy`.
void insert_on_success(ExemplarPool& pool, const TaskSpec& task, const Solution& solution,
                       const Embedder& embedder, DuplicatePolicy policy = DuplicatePolicy::Replace);

/// Persistence: JSON-lines, one entry per line:
/// {name, description, embedding:[...], solution, inserted_at}. Doubles are
/// serialized with round-trip precision.
void save_pool(const ExemplarPool& pool, const std::string& path);
ExemplarPool load_pool(const std::string& path);

}  // namespace vergsa
