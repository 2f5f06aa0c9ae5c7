#include "doctest.h"

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "topocl/memory.hpp"
#include "topocl/rng.hpp"

using namespace topocl;

namespace {

MemoryItem item(int label, int task_id) {
    MemoryItem it;
    it.x = {static_cast<float>(task_id), static_cast<float>(label)};
    it.label = label;
    it.task_id = task_id;
    return it;
}

std::vector<int> task_ids(const std::vector<MemoryItem>& items) {
    std::vector<int> ids;
    for (const MemoryItem& it : items) ids.push_back(it.task_id);
    return ids;
}

}  // namespace

TEST_CASE("ring keeps a per-class fifo at the quota") {
    EpisodicMemory mem(MemoryStrategy::ring, 4, 2, 0);
    CHECK(mem.per_class_quota() == 2);

    // three class-0 items tagged 1,2,3: the oldest is evicted
    mem.update(item(0, 1));
    mem.update(item(0, 2));
    mem.update(item(0, 3));
    mem.update(item(1, 4));
    CHECK(mem.size() == 3);
    CHECK(mem.seen_count() == 4);
    CHECK(task_ids(mem.contents()) == std::vector<int>{2, 3, 4});  // class 0 first, oldest first
}

TEST_CASE("ring with quota one keeps only the newest example per class") {
    EpisodicMemory mem(MemoryStrategy::ring, 10, 10, 0);
    CHECK(mem.per_class_quota() == 1);
    mem.update(item(7, 100));
    mem.update(item(7, 200));
    const auto all = mem.contents();
    REQUIRE(all.size() == 1);
    CHECK(all[0].task_id == 200);
}

TEST_CASE("ring matches a naive fifo oracle on a random stream") {
    const int capacity = 30, classes = 5;
    EpisodicMemory mem(MemoryStrategy::ring, capacity, classes, 9);
    std::vector<std::vector<int>> oracle(classes);  // task ids per class
    const int quota = capacity / classes;

    Rng rng(123);
    for (int t = 1; t <= 500; ++t) {
        const int label = static_cast<int>(rng.index(classes));
        mem.update(item(label, t));
        oracle[static_cast<std::size_t>(label)].push_back(t);
        if (static_cast<int>(oracle[static_cast<std::size_t>(label)].size()) > quota) {
            oracle[static_cast<std::size_t>(label)].erase(
                oracle[static_cast<std::size_t>(label)].begin());
        }
    }

    std::vector<int> expected;
    for (const auto& cls : oracle) expected.insert(expected.end(), cls.begin(), cls.end());
    CHECK(task_ids(mem.contents()) == expected);
    CHECK(mem.size() == expected.size());
}

TEST_CASE("reservoir replays the classic single-draw update rule") {
    // independent re-run of the algorithm with the same generator seed
    const int capacity = 8;
    const std::uint64_t seed = 77;
    EpisodicMemory mem(MemoryStrategy::reservoir, capacity, 4, seed);

    Rng oracle_rng(seed);
    std::vector<int> oracle_slots;
    for (int t = 1; t <= 300; ++t) {
        mem.update(item(t % 4, t));
        if (static_cast<int>(oracle_slots.size()) < capacity) {
            oracle_slots.push_back(t);
        } else {
            const std::uint64_t j = oracle_rng.index(static_cast<std::uint64_t>(t));
            if (j < static_cast<std::uint64_t>(capacity)) {
                oracle_slots[static_cast<std::size_t>(j)] = t;
            }
        }
    }
    CHECK(task_ids(mem.contents()) == oracle_slots);
    CHECK(mem.seen_count() == 300);
    CHECK(mem.size() == static_cast<std::size_t>(capacity));
}

TEST_CASE("reservoir fills in arrival order before the first eviction") {
    EpisodicMemory mem(MemoryStrategy::reservoir, 5, 2, 1);
    for (int t = 1; t <= 5; ++t) mem.update(item(t % 2, t));
    CHECK(task_ids(mem.contents()) == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("zero capacity stores nothing") {
    for (const MemoryStrategy strategy : {MemoryStrategy::ring, MemoryStrategy::reservoir}) {
        EpisodicMemory mem(strategy, 0, 3, 5);
        for (int t = 1; t <= 50; ++t) mem.update(item(t % 3, t));
        CHECK(mem.size() == 0);
        CHECK(mem.seen_count() == 50);
        CHECK(mem.sample(10).empty());
    }
}

TEST_CASE("sampling returns distinct stored items, clamped to the buffer size") {
    EpisodicMemory mem(MemoryStrategy::ring, 10, 2, 3);
    for (int t = 1; t <= 6; ++t) mem.update(item(t % 2, t));
    REQUIRE(mem.size() == 6);

    auto s = mem.sample(4);
    CHECK(s.size() == 4);
    auto ids = task_ids(s);
    std::sort(ids.begin(), ids.end());
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());  // no repeats
    for (int id : ids) CHECK((id >= 1 && id <= 6));

    CHECK(mem.sample(100).size() == 6);  // clamped
    CHECK(mem.sample(0).empty());
}

TEST_CASE("sampling from an empty buffer returns nothing") {
    EpisodicMemory mem(MemoryStrategy::reservoir, 4, 2, 0);
    CHECK(mem.sample(3).empty());
}

TEST_CASE("single-item samples hit every stored item roughly uniformly") {
    EpisodicMemory mem(MemoryStrategy::ring, 10, 10, 11);
    for (int t = 1; t <= 10; ++t) mem.update(item(t - 1, t));

    std::map<int, int> counts;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) counts[mem.sample(1)[0].task_id]++;
    REQUIRE(counts.size() == 10);
    for (const auto& [id, n] : counts) {
        CHECK(n > 850);  // expectation 1000, five sigma is about 150
        CHECK(n < 1150);
    }
}

TEST_CASE("labels outside the class range are rejected") {
    EpisodicMemory ring(MemoryStrategy::ring, 4, 3, 0);
    CHECK_THROWS_AS(ring.update(item(3, 1)), InvalidLabel);
    CHECK_THROWS_AS(ring.update(item(-1, 1)), InvalidLabel);
    EpisodicMemory res(MemoryStrategy::reservoir, 4, 3, 0);
    CHECK_THROWS_AS(res.update(item(5, 1)), InvalidLabel);
}

TEST_CASE("dump and restore continue the exact stream") {
    for (const MemoryStrategy strategy : {MemoryStrategy::ring, MemoryStrategy::reservoir}) {
        EpisodicMemory mem(strategy, 10, 5, 21);
        Rng feed(4);
        for (int t = 1; t <= 80; ++t) mem.update(item(static_cast<int>(feed.index(5)), t));

        std::stringstream buf;
        mem.dump(buf);
        EpisodicMemory back = EpisodicMemory::restore(buf);

        CHECK(back.strategy() == mem.strategy());
        CHECK(back.capacity() == mem.capacity());
        CHECK(back.seen_count() == mem.seen_count());
        CHECK(task_ids(back.contents()) == task_ids(mem.contents()));

        // both copies must now produce identical updates and samples
        for (int t = 81; t <= 160; ++t) {
            const int label = t % 5;
            mem.update(item(label, t));
            back.update(item(label, t));
        }
        CHECK(task_ids(mem.contents()) == task_ids(back.contents()));
        for (int round = 0; round < 5; ++round) {
            CHECK(task_ids(mem.sample(4)) == task_ids(back.sample(4)));
        }
    }
}

TEST_CASE("restored items preserve features and labels exactly") {
    EpisodicMemory mem(MemoryStrategy::ring, 6, 3, 0);
    MemoryItem a;
    a.x = {0.125f, -2.5f, 1e-20f};
    a.label = 2;
    a.task_id = 9;
    mem.update(a);

    std::stringstream buf;
    mem.dump(buf);
    const EpisodicMemory back = EpisodicMemory::restore(buf);
    const auto items = back.contents();
    REQUIRE(items.size() == 1);
    CHECK(items[0].x == a.x);
    CHECK(items[0].label == 2);
    CHECK(items[0].task_id == 9);
}

TEST_CASE("restore rejects a corrupt header") {
    std::stringstream buf("garbage");
    CHECK_THROWS_AS(EpisodicMemory::restore(buf), IoError);
}
