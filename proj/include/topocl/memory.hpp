#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "topocl/errors.hpp"
#include "topocl/rng.hpp"

namespace topocl {

struct MemoryItem {
    std::vector<float> x;
    int label = 0;
    int task_id = 0;
};

enum class MemoryStrategy { ring, reservoir };

// Tiny episodic buffer of past examples. Ring keeps a per-class FIFO with
// quota capacity / num_classes; reservoir keeps a uniform sample of the
// whole stream. With capacity zero every operation is a no-op that draws no
// random numbers.
class EpisodicMemory {
public:
    EpisodicMemory(MemoryStrategy strategy, int capacity, int num_classes, std::uint64_t seed);

    void update(std::span<const MemoryItem> batch);
    void update(const MemoryItem& item);

    // Uniform sample without replacement of min(batch_size, size()) items.
    std::vector<MemoryItem> sample(int batch_size);

    // Buffer contents in a deterministic order (ring: class by class oldest
    // first; reservoir: slot order).
    std::vector<MemoryItem> contents() const;

    std::size_t size() const;
    int capacity() const { return capacity_; }
    MemoryStrategy strategy() const { return strategy_; }
    std::uint64_t seen_count() const { return seen_count_; }
    int per_class_quota() const { return quota_; }

    // Binary dump/restore, little-endian, including the sampler state so a
    // restored buffer continues the exact stream.
    void dump(std::ostream& out) const;
    static EpisodicMemory restore(std::istream& in);

private:
    MemoryStrategy strategy_;
    int capacity_ = 0;
    int num_classes_ = 0;
    int quota_ = 0;
    std::uint64_t seen_count_ = 0;
    Rng rng_;

    std::vector<std::deque<MemoryItem>> per_class_;  // ring
    std::vector<MemoryItem> slots_;                  // reservoir
};

}  // namespace topocl
