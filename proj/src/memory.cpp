#include "topocl/memory.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace topocl {

EpisodicMemory::EpisodicMemory(MemoryStrategy strategy, int capacity, int num_classes,
                               std::uint64_t seed)
    : strategy_(strategy), capacity_(capacity), num_classes_(num_classes), rng_(seed) {
    if (capacity_ < 0) throw Error("memory capacity must be non-negative");
    if (num_classes_ <= 0) throw InvalidLabel("num_classes must be positive");
    quota_ = capacity_ / num_classes_;
    if (strategy_ == MemoryStrategy::ring) per_class_.resize(num_classes_);
}

void EpisodicMemory::update(const MemoryItem& item) {
    if (item.label < 0 || item.label >= num_classes_) {
        throw InvalidLabel("label " + std::to_string(item.label));
    }
    ++seen_count_;
    if (capacity_ == 0) return;

    if (strategy_ == MemoryStrategy::ring) {
        if (quota_ == 0) return;
        auto& fifo = per_class_[item.label];
        fifo.push_back(item);
        if (static_cast<int>(fifo.size()) > quota_) fifo.pop_front();
    } else {
        if (static_cast<int>(slots_.size()) < capacity_) {
            slots_.push_back(item);
        } else {
            const std::uint64_t j = rng_.index(seen_count_);
            if (j < static_cast<std::uint64_t>(capacity_)) slots_[j] = item;
        }
    }
}

void EpisodicMemory::update(std::span<const MemoryItem> batch) {
    for (const MemoryItem& item : batch) update(item);
}

std::size_t EpisodicMemory::size() const {
    if (strategy_ == MemoryStrategy::ring) {
        std::size_t n = 0;
        for (const auto& fifo : per_class_) n += fifo.size();
        return n;
    }
    return slots_.size();
}

std::vector<MemoryItem> EpisodicMemory::contents() const {
    std::vector<MemoryItem> out;
    out.reserve(size());
    if (strategy_ == MemoryStrategy::ring) {
        for (const auto& fifo : per_class_) out.insert(out.end(), fifo.begin(), fifo.end());
    } else {
        out = slots_;
    }
    return out;
}

std::vector<MemoryItem> EpisodicMemory::sample(int batch_size) {
    std::vector<MemoryItem> pool = contents();
    if (pool.empty() || batch_size <= 0) return {};
    const std::size_t take = std::min<std::size_t>(batch_size, pool.size());
    // partial Fisher-Yates: the first `take` positions become the sample
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng_.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    return pool;
}

namespace {

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw IoError("unexpected end of file reading u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_f32_le(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("unexpected end of file reading f32");
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_item(std::ostream& out, const MemoryItem& item) {
    write_u64_le(out, item.x.size());
    for (float v : item.x) write_f32_le(out, v);
    write_u64_le(out, static_cast<std::uint64_t>(item.label));
    write_u64_le(out, static_cast<std::uint64_t>(item.task_id));
}

MemoryItem read_item(std::istream& in) {
    MemoryItem item;
    item.x.resize(read_u64_le(in));
    for (float& v : item.x) v = read_f32_le(in);
    item.label = static_cast<int>(read_u64_le(in));
    item.task_id = static_cast<int>(read_u64_le(in));
    return item;
}

}  // namespace

void EpisodicMemory::dump(std::ostream& out) const {
    write_u64_le(out, strategy_ == MemoryStrategy::ring ? 0 : 1);
    write_u64_le(out, static_cast<std::uint64_t>(capacity_));
    write_u64_le(out, static_cast<std::uint64_t>(num_classes_));
    write_u64_le(out, seen_count_);
    const std::string rng_state = rng_.state();
    write_u64_le(out, rng_state.size());
    out.write(rng_state.data(), static_cast<std::streamsize>(rng_state.size()));
    if (strategy_ == MemoryStrategy::ring) {
        for (const auto& fifo : per_class_) {
            write_u64_le(out, fifo.size());
            for (const MemoryItem& item : fifo) write_item(out, item);
        }
    } else {
        write_u64_le(out, slots_.size());
        for (const MemoryItem& item : slots_) write_item(out, item);
    }
    if (!out) throw IoError("memory dump write failed");
}

EpisodicMemory EpisodicMemory::restore(std::istream& in) {
    const std::uint64_t strategy_tag = read_u64_le(in);
    if (strategy_tag > 1) throw IoError("bad memory strategy tag");
    const auto capacity = static_cast<int>(read_u64_le(in));
    const auto num_classes = static_cast<int>(read_u64_le(in));
    EpisodicMemory mem(strategy_tag == 0 ? MemoryStrategy::ring : MemoryStrategy::reservoir,
                       capacity, num_classes, 0);
    mem.seen_count_ = read_u64_le(in);
    std::string rng_state(read_u64_le(in), '\0');
    in.read(rng_state.data(), static_cast<std::streamsize>(rng_state.size()));
    if (!in) throw IoError("unexpected end of file reading rng state");
    mem.rng_.restore_state(rng_state);
    if (mem.strategy_ == MemoryStrategy::ring) {
        for (auto& fifo : mem.per_class_) {
            const std::uint64_t n = read_u64_le(in);
            for (std::uint64_t i = 0; i < n; ++i) fifo.push_back(read_item(in));
        }
    } else {
        const std::uint64_t n = read_u64_le(in);
        for (std::uint64_t i = 0; i < n; ++i) mem.slots_.push_back(read_item(in));
    }
    return mem;
}

}  // namespace topocl
