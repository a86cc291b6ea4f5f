#include "vergsa/task_pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace vergsa {

double EmbeddingVector::norm() const {
    double acc = 0.0;
    for (double v : values) acc += v * v;
    return std::sqrt(acc);
}

void EmbeddingVector::validate(std::size_t expected_dim) const {
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidSpec("embedding contains a non-finite entry");
    if (expected_dim != 0 && values.size() != expected_dim)
        throw DimensionMismatch("embedding dimension " + std::to_string(values.size()) +
                                " != pool dimension " + std::to_string(expected_dim));
    if (norm() == 0.0) throw ZeroNorm("embedding has zero norm");
}

TrigramHashEmbedder::TrigramHashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw InvalidSpec("embedder dimension must be positive");
}

EmbeddingVector TrigramHashEmbedder::embed_text(std::string_view text) const {
    EmbeddingVector e;
    e.values.assign(dim_, 0.0);
    if (text.size() < 3) {
        e.values[code_text::fnv1a64(text) % dim_] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i)
            e.values[code_text::fnv1a64(text.substr(i, 3)) % dim_] += 1.0;
    }
    double n = e.norm();
    for (double& v : e.values) v /= n;
    return e;
}

std::string TrigramHashEmbedder::id() const { return "trigram-" + std::to_string(dim_); }

ExemplarPool make_pool(const Embedder& embedder) {
    ExemplarPool pool;
    pool.dimension = embedder.dimension();
    pool.embedder_id = embedder.id();
    return pool;
}

EmbeddingVector embed_task(std::string_view name, std::string_view description,
                           const Embedder& embedder) {
    if (name.empty()) throw InvalidSpec("task name must be nonempty");
    std::string text;
    text.reserve(name.size() + 1 + description.size());
    text.append(name);
    text.push_back('\n');
    text.append(description);
    return embedder.embed_text(text);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw DimensionMismatch("cosine over dimensions " + std::to_string(a.dimension()) + " and " +
                                std::to_string(b.dimension()));
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw ZeroNorm("cosine of a zero-norm vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot / (na * nb);
}

std::vector<ScoredEntry> retrieve_top_k(const ExemplarPool& pool, const EmbeddingVector& query,
                                        std::size_t k) {
    if (pool.entries.empty()) throw EmptyPool("retrieval from an empty pool");
    query.validate(pool.dimension);

    std::vector<std::pair<double, std::size_t>> scored;  // (similarity, index)
    scored.reserve(pool.entries.size());
    for (std::size_t i = 0; i < pool.entries.size(); ++i)
        scored.emplace_back(cosine_similarity(query, pool.entries[i].embedding), i);

    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return pool.entries[a.second].inserted_at < pool.entries[b.second].inserted_at;
    });

    std::vector<ScoredEntry> out;
    std::size_t take = std::min(k, scored.size());
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        out.push_back({pool.entries[scored[i].second], scored[i].first});
    return out;
}

void insert_on_success(ExemplarPool& pool, const TaskSpec& task, const Solution& solution,
                       const Embedder& embedder, DuplicatePolicy policy) {
    if (!solution.overall_success.has_value() || !*solution.overall_success)
        throw NotSuccessful("only successfully executed tasks enter the pool");
    if (pool.dimension == 0) {
        pool.dimension = embedder.dimension();
        pool.embedder_id = embedder.id();
    }
    if (embedder.dimension() != pool.dimension)
        throw DimensionMismatch("embedder dimension does not match the pool");

    auto dup = std::find_if(pool.entries.begin(), pool.entries.end(), [&](const PoolEntry& e) {
        return e.task.name == task.name && e.task.description == task.description;
    });
    if (dup != pool.entries.end()) {
        if (policy == DuplicatePolicy::Reject)
            throw DuplicateTask("an entry named '" + task.name + "' already exists");
        pool.entries.erase(dup);
    }

    PoolEntry entry;
    entry.task = task;
    entry.embedding = embed_task(task.name, task.description, embedder);
    entry.solution = solution;
    entry.inserted_at = pool.next_seq++;
    pool.entries.push_back(std::move(entry));
}

void save_pool(const ExemplarPool& pool, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write pool file: " + path);
    for (const auto& e : pool.entries) {
        nlohmann::json j;
        j["name"] = e.task.name;
        j["description"] = e.task.description;
        j["embedding"] = e.embedding.values;
        j["solution"] = e.solution;
        j["inserted_at"] = e.inserted_at;
        out << j.dump() << '\n';
    }
}

ExemplarPool load_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pool file: " + path);
    ExemplarPool pool;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        PoolEntry e;
        e.task.name = j.at("name").get<std::string>();
        e.task.description = j.value("description", "");
        e.embedding.values = j.at("embedding").get<std::vector<double>>();
        e.solution = j.value("solution", Solution{});
        e.inserted_at = j.value("inserted_at", std::uint64_t{0});
        if (pool.dimension == 0) pool.dimension = e.embedding.dimension();
        pool.next_seq = std::max(pool.next_seq, e.inserted_at + 1);
        pool.entries.push_back(std::move(e));
    }
    return pool;
}

}  // namespace vergsa
