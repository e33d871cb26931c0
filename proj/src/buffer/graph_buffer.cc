// Copyright 2026 Fusematch Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "fusematch/buffer/graph_buffer.h"

#include <algorithm>
#include <bit>
#include <cstring>

#include "fusematch/model/matching_graph.h"

namespace fm {

namespace {

constexpr size_t kCacheSoftLimit = 64;

uint64_t checksum(std::span<const double> weights) {
    uint64_t h = 1469598103934665603ull;
    for (double w : weights) {
        uint64_t bits = std::bit_cast<uint64_t>(w);
        for (int k = 0; k < 8; k++) {
            h ^= (bits >> (8 * k)) & 0xff;
            h *= 1099511628211ull;
        }
    }
    return h;
}

/// A shot length that keeps `spec` clear of the epilogue, for blocks whose
/// shot has not ended yet.
uint64_t provisional_total(const PeriodicModel &model, const BlockSpec &spec) {
    uint64_t t = spec.first_cycle + spec.num_cycles + model.span() + model.base().epilogue_cycles;
    while (!model.supports_cycles(t)) {
        t++;
    }
    return t;
}

}  // namespace

GraphBuffer::GraphBuffer(std::shared_ptr<const PeriodicModel> model, GraphBufferOptions options)
    : model_(std::move(model)), options_(options) {
    if (!model_) {
        throw std::invalid_argument("graph buffer needs a model");
    }
    if (options_.capacity < 8 || !std::has_single_bit(options_.capacity)) {
        throw std::invalid_argument("graph buffer capacity must be a power of two >= 8");
    }
    slots_.resize(options_.capacity);
    grapher_ = std::thread([this] { grapher_loop(); });
}

GraphBuffer::~GraphBuffer() {
    shutdown();
    grapher_.join();
}

void GraphBuffer::shutdown() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    work_.notify_all();
    published_.notify_all();
}

void GraphBuffer::announce(const BlockSpec &spec) {
    if (spec.num_cycles == 0) {
        throw ContractViolation("announced block " + std::to_string(spec.block) + " has no cycles");
    }
    if (spec.total_cycles != 0 && spec.first_cycle + spec.num_cycles > spec.total_cycles) {
        throw ContractViolation("announced block " + std::to_string(spec.block) + " runs past the end of its shot");
    }
    {
        std::lock_guard lock(mutex_);
        if (spec.block != next_announce_) {
            throw ContractViolation(
                "blocks must be announced in order: expected " + std::to_string(next_announce_) + ", got " +
                std::to_string(spec.block));
        }
        next_announce_++;
        announced_.push_back(spec);
    }
    work_.notify_all();
}

GraphBuffer::StructureKey GraphBuffer::key_for(const BlockSpec &spec) const {
    const NoiseModel &base = model_->base();
    const uint64_t lo = spec.first_cycle;
    const uint64_t hi = lo + spec.num_cycles;
    const bool near_start = lo < (uint64_t)base.prologue_cycles + model_->span();
    const bool near_end = spec.total_cycles != 0 && hi + base.epilogue_cycles > spec.total_cycles;
    if (near_start && near_end) {
        return {3, lo, spec.num_cycles, spec.total_cycles};
    }
    if (near_start) {
        return {1, lo, spec.num_cycles, 0};
    }
    if (near_end) {
        return {2, spec.total_cycles - lo, spec.num_cycles, 0};
    }
    return {0, (lo - base.prologue_cycles) % base.period, spec.num_cycles, 0};
}

LocalGraph GraphBuffer::build_structure(const PeriodicModel &model, const BlockSpec &spec) {
    const uint64_t total = spec.total_cycles != 0 ? spec.total_cycles : provisional_total(model, spec);
    const uint64_t lo = spec.first_cycle;
    const uint64_t hi = lo + spec.num_cycles;
    if (hi > total) {
        throw ContractViolation("block runs past the end of its shot");
    }
    // Every mechanism touching [lo, hi) starts at most span cycles earlier.
    const uint64_t from = lo >= model.span() ? lo - model.span() : 0;
    const uint64_t to = std::min<uint64_t>(total, hi + model.span());
    std::vector<ErrorMechanism> mechanisms = model.mechanisms_in_cycles(from, hi, total);
    MatchingGraph g = build_matching_graph(
        model.detectors_per_cycle(), model.base().num_observables, from, to - from, mechanisms);
    return LocalGraph::restrict(g, lo, spec.num_cycles);
}

std::shared_ptr<const LocalGraph> GraphBuffer::structure_for(const BlockSpec &spec) {
    const StructureKey key = key_for(spec);
    {
        std::lock_guard lock(mutex_);
        auto it = structures_.find(key);
        if (it != structures_.end()) {
            return it->second;
        }
    }
    auto graph = std::make_shared<const LocalGraph>(build_structure(*model_, spec));
    std::lock_guard lock(mutex_);
    built_++;
    return structures_.emplace(key, std::move(graph)).first->second;
}

void GraphBuffer::grapher_loop() {
    std::unique_lock lock(mutex_);
    while (true) {
        work_.wait(lock, [&] {
            if (stopping_) {
                return true;
            }
            if (announced_.empty()) {
                return false;
            }
            const Slot &s = slots_[announced_.front().block % slots_.size()];
            return s.state == SlotState::kEmpty || s.state == SlotState::kRetired;
        });
        if (stopping_) {
            return;
        }
        const BlockSpec spec = announced_.front();
        announced_.pop_front();
        lock.unlock();
        std::shared_ptr<const LocalGraph> graph = structure_for(spec);
        const uint64_t sum = checksum(graph->weights);
        lock.lock();

        Slot &slot = slots_[spec.block % slots_.size()];
        if (slot.state == SlotState::kRetired) {
            lo_ = slot.spec.block + 1;
        }
        slot.state = SlotState::kPublished;
        slot.spec = spec;
        slot.graph = std::move(graph);
        slot.template_checksum = sum;
        slot.overlay_active = false;
        slot.readers = 0;
        hi_ = spec.block + 1;
        prune_caches_locked();
        update_peak_locked();
        published_.notify_all();
    }
}

GraphBuffer::Slot &GraphBuffer::slot_of(uint64_t block) {
    return slots_[block % slots_.size()];
}

const GraphBuffer::Slot *GraphBuffer::held_slot(uint64_t block) const {
    const Slot &s = slots_[block % slots_.size()];
    if (s.state != SlotState::kHeld || s.spec.block != block) {
        return nullptr;
    }
    return &s;
}

BlockView GraphBuffer::ensure_window(uint64_t block) {
    std::unique_lock lock(mutex_);
    while (true) {
        if (block < lo_) {
            throw ContractViolation(
                "block " + std::to_string(block) + " has left the buffer window (oldest is " + std::to_string(lo_) +
                ")");
        }
        Slot &s = slot_of(block);
        if (block < hi_ && s.state != SlotState::kEmpty && s.spec.block == block) {
            s.readers++;
            s.state = SlotState::kHeld;
            BlockView view;
            view.graph = s.graph;
            view.weights = s.overlay_active ? std::span<const double>(s.overlay) : std::span<const double>(s.graph->weights);
            view.first_cycle = s.spec.first_cycle;
            view.first_block = view.last_block = block;
            return view;
        }
        if (block >= lo_ + slots_.size()) {
            for (uint64_t b = lo_; b + slots_.size() <= block; b++) {
                if (held_slot(b) != nullptr) {
                    throw BufferDeadlock(
                        "block " + std::to_string(block) + " needs the slot of block " + std::to_string(b) +
                        ", which is still held (buffer capacity " + std::to_string(slots_.size()) + ")");
                }
            }
        }
        if (stopping_) {
            throw ContractViolation("graph buffer is shutting down");
        }
        published_.wait(lock);
    }
}

void GraphBuffer::release_view(uint64_t block) {
    std::lock_guard lock(mutex_);
    Slot &s = slot_of(block);
    if (s.state != SlotState::kHeld || s.spec.block != block || s.readers == 0) {
        throw ContractViolation("release of block " + std::to_string(block) + ", which is not held");
    }
    if (s.overlay_active && s.readers == 1) {
        if (options_.verify_release && checksum(s.overlay) != s.template_checksum) {
            throw ContractViolation(
                "block " + std::to_string(block) + " released with reweights still applied to its overlay");
        }
        s.overlay_active = false;
    }
    if (--s.readers == 0) {
        s.state = SlotState::kRetired;
        work_.notify_all();
    }
}

std::span<double> GraphBuffer::overlay(uint64_t block) {
    std::lock_guard lock(mutex_);
    Slot &s = slot_of(block);
    if (s.state != SlotState::kHeld || s.spec.block != block) {
        throw ContractViolation("overlay of block " + std::to_string(block) + ", which is not held");
    }
    if (!s.overlay_active) {
        s.overlay.assign(s.graph->weights.begin(), s.graph->weights.end());
        s.overlay_active = true;
        update_peak_locked();
    }
    return s.overlay;
}

std::shared_ptr<const LocalGraph> GraphBuffer::joined(uint64_t block) {
    std::shared_ptr<const LocalGraph> a, b;
    {
        std::lock_guard lock(mutex_);
        const Slot *sa = held_slot(block);
        const Slot *sb = held_slot(block + 1);
        if (sa == nullptr || sb == nullptr) {
            throw ContractViolation("joined view of blocks " + std::to_string(block) + " and " +
                                    std::to_string(block + 1) + " needs both held");
        }
        if (sa->spec.first_cycle + sa->spec.num_cycles != sb->spec.first_cycle) {
            throw ContractViolation("blocks " + std::to_string(block) + " and " + std::to_string(block + 1) +
                                    " are not adjacent in one shot");
        }
        a = sa->graph;
        b = sb->graph;
        auto it = joins_.find({a.get(), b.get()});
        if (it != joins_.end()) {
            return it->second.joined;
        }
    }
    auto j = std::make_shared<const LocalGraph>(LocalGraph::join(*a, *b));
    std::lock_guard lock(mutex_);
    auto [it, inserted] = joins_.try_emplace({a.get(), b.get()}, Join{a, b, j});
    if (inserted) {
        update_peak_locked();
    }
    return it->second.joined;
}

void GraphBuffer::prune_caches_locked() {
    if (joins_.size() + structures_.size() <= kCacheSoftLimit) {
        return;
    }
    auto in_slot = [&](const LocalGraph *g) {
        return std::any_of(slots_.begin(), slots_.end(), [&](const Slot &s) {
            return s.graph.get() == g;
        });
    };
    for (auto it = joins_.begin(); it != joins_.end();) {
        if (it->second.joined.use_count() == 1 && !in_slot(it->first.first) && !in_slot(it->first.second)) {
            it = joins_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = structures_.begin(); it != structures_.end();) {
        if (it->second.use_count() == 1) {
            it = structures_.erase(it);
        } else {
            ++it;
        }
    }
}

size_t GraphBuffer::structural_bytes_locked() const {
    size_t bytes = sizeof(GraphBuffer) + slots_.capacity() * sizeof(Slot);
    std::vector<const LocalGraph *> seen;
    auto add = [&](const std::shared_ptr<const LocalGraph> &g) {
        if (g && std::find(seen.begin(), seen.end(), g.get()) == seen.end()) {
            seen.push_back(g.get());
            bytes += g->structural_bytes();
        }
    };
    for (const auto &[key, g] : structures_) {
        add(g);
    }
    for (const auto &[key, j] : joins_) {
        add(j.a);
        add(j.b);
        add(j.joined);
    }
    for (const auto &s : slots_) {
        add(s.graph);
        bytes += s.overlay.capacity() * sizeof(double);
    }
    return bytes;
}

void GraphBuffer::update_peak_locked() {
    peak_bytes_ = std::max(peak_bytes_, structural_bytes_locked());
}

uint64_t GraphBuffer::lo_block() const {
    std::lock_guard lock(mutex_);
    return lo_;
}

uint64_t GraphBuffer::hi_block() const {
    std::lock_guard lock(mutex_);
    return hi_;
}

uint32_t GraphBuffer::readers(uint64_t block) const {
    std::lock_guard lock(mutex_);
    const Slot &s = slots_[block % slots_.size()];
    return s.spec.block == block && s.state != SlotState::kEmpty ? s.readers : 0;
}

size_t GraphBuffer::structural_bytes() const {
    std::lock_guard lock(mutex_);
    return structural_bytes_locked();
}

size_t GraphBuffer::peak_structural_bytes() const {
    std::lock_guard lock(mutex_);
    return peak_bytes_;
}

uint64_t GraphBuffer::structures_built() const {
    std::lock_guard lock(mutex_);
    return built_;
}

}  // namespace fm
