#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "vergsa/fixtures.hpp"
#include "vergsa/task_pool.hpp"

using namespace vergsa;

namespace {

// Independent re-implementation of the documented fallback embedder, used as
// the oracle for the derived examples.
std::vector<double> oracle_trigram(const std::string& text, std::size_t dim) {
    std::vector<double> v(dim, 0.0);
    auto fnv = [](const std::string& s) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    };
    if (text.size() < 3) {
        v[fnv(text) % dim] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i) v[fnv(text.substr(i, 3)) % dim] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

EmbeddingVector vec(std::initializer_list<double> values) {
    EmbeddingVector e;
    e.values = values;
    return e;
}

ExemplarPool random_pool(std::mt19937_64& rng, std::size_t dim) {
    ExemplarPool pool;
    pool.dimension = dim;
    pool.embedder_id = "test";
    std::size_t n = 1 + rng() % 12;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        PoolEntry e;
        e.task.name = "t" + std::to_string(i);
        e.embedding.values.resize(dim);
        if (i > 0 && rng() % 4 == 0) {
            e.embedding = pool.entries[rng() % i].embedding;  // force ties
        } else {
            for (auto& x : e.embedding.values) x = u(rng);
            if (e.embedding.norm() == 0.0) e.embedding.values[0] = 1.0;
        }
        e.solution.overall_success = true;
        e.inserted_at = pool.next_seq++;
        pool.entries.push_back(std::move(e));
    }
    return pool;
}

}  // namespace

TEST_CASE("embed_task is deterministic and separator-aware") {
    TrigramHashEmbedder embedder(256);
    auto a = embed_task("Fold Chair", "lower the seat", embedder);
    auto b = embed_task("Fold Chair", "lower the seat", embedder);
    CHECK(a.values == b.values);

    // empty description: embedding of name plus the separator
    auto c = embed_task("Fold Chair", "", embedder);
    auto oracle = oracle_trigram("Fold Chair\n", 256);
    REQUIRE(c.values.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(c.values[i] == doctest::Approx(oracle[i]));

    auto full_oracle = oracle_trigram("Fold Chair\nlower the seat", 256);
    for (std::size_t i = 0; i < full_oracle.size(); ++i)
        CHECK(a.values[i] == doctest::Approx(full_oracle[i]));
}

TEST_CASE("cosine_similarity basics") {
    CHECK(cosine_similarity(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(1.0));
    CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
    CHECK(cosine_similarity(vec({1, 0}), vec({1, 1})) ==
          doctest::Approx(0.70710678).epsilon(1e-9));
    CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), DimensionMismatch);
    CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 0})), ZeroNorm);
}

TEST_CASE("retrieval reproduces the published similarity table") {
    auto fixture = fixtures::similarity_table_fixture();
    for (const auto& c : fixture.cases) {
        auto hits = retrieve_top_k(fixture.pool, c.query, 2);
        REQUIRE(hits.size() == c.expected.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].entry.task.name == c.expected[i].first);
            CHECK(hits[i].similarity == doctest::Approx(c.expected[i].second).epsilon(1e-3));
        }
    }
}

TEST_CASE("retrieve_top_k: whole pool when K is large, empty pool throws") {
    auto fixture = fixtures::similarity_table_fixture();
    auto all = retrieve_top_k(fixture.pool, fixture.cases[0].query, 100);
    CHECK(all.size() == fixture.pool.size());
    for (std::size_t i = 1; i < all.size(); ++i)
        CHECK(all[i - 1].similarity >= all[i].similarity);

    ExemplarPool empty;
    empty.dimension = 8;
    CHECK_THROWS_AS(retrieve_top_k(empty, fixture.cases[0].query, 2), EmptyPool);
}

TEST_CASE("retrieve_top_k matches a brute-force oracle on random pools") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        ExemplarPool pool = random_pool(rng, 6);
        EmbeddingVector q;
        q.values.resize(6);
        for (auto& x : q.values) x = u(rng);
        if (q.norm() == 0.0) q.values[0] = 1.0;
        std::size_t k = 1 + rng() % 8;

        auto got = retrieve_top_k(pool, q, k);

        // oracle: repeated scan-max with the same tie rule
        std::vector<std::size_t> remaining(pool.size());
        for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
        std::vector<std::pair<std::string, double>> expected;
        while (!remaining.empty() && expected.size() < k) {
            std::size_t best = 0;
            double best_sim = cosine_similarity(q, pool.entries[remaining[0]].embedding);
            for (std::size_t r = 1; r < remaining.size(); ++r) {
                double sim = cosine_similarity(q, pool.entries[remaining[r]].embedding);
                bool better = sim > best_sim ||
                              (sim == best_sim && pool.entries[remaining[r]].inserted_at <
                                                      pool.entries[remaining[best]].inserted_at);
                if (better) {
                    best = r;
                    best_sim = sim;
                }
            }
            expected.emplace_back(pool.entries[remaining[best]].task.name, best_sim);
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
        }

        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].entry.task.name == expected[i].first);
            CHECK(got[i].similarity == expected[i].second);
        }
    }
}

TEST_CASE("ordering is invariant under positive scaling of the query") {
    std::mt19937_64 rng(5);
    auto fixture = fixtures::similarity_table_fixture();
    std::uniform_real_distribution<double> u(0.01, 100.0);
    for (int trial = 0; trial < 20; ++trial) {
        EmbeddingVector q;
        q.values.resize(8);
        std::uniform_real_distribution<double> coord(-1.0, 1.0);
        for (auto& x : q.values) x = coord(rng);
        if (q.norm() == 0.0) q.values[0] = 1.0;
        EmbeddingVector scaled = q;
        double factor = u(rng);
        for (auto& x : scaled.values) x *= factor;

        auto a = retrieve_top_k(fixture.pool, q, 6);
        auto b = retrieve_top_k(fixture.pool, scaled, 6);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i].entry.task.name == b[i].entry.task.name);
    }
}

TEST_CASE("insert_on_success grows the initial 15-task pool to 16") {
    TrigramHashEmbedder embedder(256);
    ExemplarPool pool = fixtures::initial_pool(embedder);
    REQUIRE(pool.size() == 15);

    TaskSpec novel;
    novel.name = "Change Fan Direction";
    novel.description = "The robot arm rotates the fan head to a new direction";
    insert_on_success(pool, novel, fixtures::trivial_successful_solution("Fan"), embedder);
    CHECK(pool.size() == 16);

    // the inserted task ranks first against its own embedding
    auto hits = retrieve_top_k(pool, embed_task(novel.name, novel.description, embedder), 2);
    CHECK(hits[0].entry.task.name == novel.name);
    CHECK(hits[0].similarity == doctest::Approx(1.0));
}

TEST_CASE("insert_on_success rejects failures and handles duplicates") {
    TrigramHashEmbedder embedder(64);
    ExemplarPool pool = make_pool(embedder);
    TaskSpec task;
    task.name = "T";
    task.description = "d";

    Solution failed = fixtures::trivial_successful_solution("X");
    failed.overall_success = false;
    CHECK_THROWS_AS(insert_on_success(pool, task, failed, embedder), NotSuccessful);
    Solution unset = fixtures::trivial_successful_solution("X");
    unset.overall_success.reset();
    CHECK_THROWS_AS(insert_on_success(pool, task, unset, embedder), NotSuccessful);

    insert_on_success(pool, task, fixtures::trivial_successful_solution("X"), embedder);
    CHECK(pool.size() == 1);
    // replace: same size, fresh solution
    insert_on_success(pool, task, fixtures::trivial_successful_solution("Y"), embedder);
    CHECK(pool.size() == 1);
    CHECK(pool.entries[0].solution.scene.objects[0].name == "Y");
    CHECK_THROWS_AS(insert_on_success(pool, task, fixtures::trivial_successful_solution("Z"),
                                      embedder, DuplicatePolicy::Reject),
                    DuplicateTask);
}

TEST_CASE("inserting never reorders previously returned pairs") {
    TrigramHashEmbedder embedder(128);
    ExemplarPool pool = fixtures::initial_pool(embedder);
    auto q = embed_task("Spin Chair", "rotate the chair seat", embedder);
    auto before = retrieve_top_k(pool, q, 5);

    TaskSpec extra;
    extra.name = "Wipe Table";
    extra.description = "wipe the table surface clean";
    insert_on_success(pool, extra, fixtures::trivial_successful_solution("Table"), embedder);
    auto after = retrieve_top_k(pool, q, static_cast<std::size_t>(pool.size()));

    // relative order of the original pairs is unchanged
    std::vector<std::string> filtered;
    for (const auto& hit : after)
        if (hit.entry.task.name != "Wipe Table") filtered.push_back(hit.entry.task.name);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(filtered[i] == before[i].entry.task.name);
}

TEST_CASE("pool persistence round trip is bit-exact") {
    TrigramHashEmbedder embedder(64);
    ExemplarPool pool = fixtures::initial_pool(embedder);
    std::string path = "test_pool_roundtrip.jsonl";
    save_pool(pool, path);
    ExemplarPool back = load_pool(path);
    std::remove(path.c_str());

    REQUIRE(back.size() == pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        CHECK(back.entries[i].task.name == pool.entries[i].task.name);
        CHECK(back.entries[i].inserted_at == pool.entries[i].inserted_at);
        REQUIRE(back.entries[i].embedding.values.size() == pool.entries[i].embedding.values.size());
        for (std::size_t d = 0; d < pool.entries[i].embedding.values.size(); ++d)
            CHECK(back.entries[i].embedding.values[d] == pool.entries[i].embedding.values[d]);
    }

    auto q = embed_task("Open Window Halfway", "open the window", embedder);
    auto a = retrieve_top_k(pool, q, 4);
    auto b = retrieve_top_k(back, q, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].entry.task.name == b[i].entry.task.name);
        CHECK(a[i].similarity == b[i].similarity);
    }
}
