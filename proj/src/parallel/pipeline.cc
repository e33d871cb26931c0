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


#include "fusematch/parallel/pipeline.h"

#include <algorithm>

namespace fm {

struct Pipeline::BlockState {
    ShotState *shot = nullptr;
    uint64_t index = 0;
    /// spec.block is the global block number; the cycle range is fixed when
    /// the block becomes ready.
    BlockSpec spec;
    std::vector<DetectorId> events;
    bool ready = false;
    bool decoded = false;
    bool finalized = false;
    int64_t t_acquired = 0;

    BlockView view;
    std::span<double> overlay;
    ReweightLog log;
    bool reweighted = false;
    std::optional<BlockResult> result;
};

struct Pipeline::ShotState {
    uint64_t shot = 0;
    /// 0 while an unbounded shot is still running.
    uint64_t total = 0;
    bool ended = false;
    uint64_t arrived = 0;
    std::map<uint64_t, std::unique_ptr<BlockState>> blocks;
    std::map<uint64_t, UnitState> units;
    std::set<uint64_t> layer2_started;
    uint64_t finalized = 0;
    std::vector<double> block_weights;
    ObservableMask observables = 0;
    bool heralded = false;
    std::vector<MatchedPair> pairs;
    std::vector<LatencyRecord> latencies;
    int64_t t_last_frame = 0;
    bool complete = false;
};

Pipeline::Pipeline(
    std::shared_ptr<const PeriodicModel> model, PipelineOptions options, PredictionCallback on_prediction)
    : model_(std::move(model)),
      options_(options),
      on_prediction_(std::move(on_prediction)),
      backlog_(options.backlog_window) {
    if (options_.block_cycles < 2) {
        throw std::invalid_argument("blocks need at least 2 cycles");
    }
    if (options_.block_cycles <= model_->span()) {
        throw std::invalid_argument(
            "blocks of " + std::to_string(options_.block_cycles) + " cycles are too short for mechanisms spanning " +
            std::to_string(model_->span()) + " cycles");
    }
    if (options_.workers == 0) {
        throw std::invalid_argument("the pipeline needs at least one worker");
    }
    lookahead_ = std::max<uint32_t>(1, model_->span() + model_->base().epilogue_cycles);
    model_has_partners_ = std::any_of(model_->base().mechanisms.begin(), model_->base().mechanisms.end(),
                                      [](const ErrorMechanism &m) { return m.parts.size() >= 2; });
    buffer_ = std::make_unique<GraphBuffer>(model_, options_.buffer);
    for (unsigned k = 0; k < options_.workers; k++) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

Pipeline::~Pipeline() {
    {
        std::lock_guard lock(pool_mutex_);
        stopping_ = true;
    }
    pool_cv_.notify_all();
    buffer_->shutdown();
    for (auto &t : workers_) {
        t.join();
    }
}

void Pipeline::worker_loop() {
    while (true) {
        std::function<void()> task;
        {
            std::unique_lock lock(pool_mutex_);
            pool_cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
            if (stopping_) {
                return;
            }
            task = std::move(tasks_.front());
            tasks_.pop_front();
        }
        try {
            task();
        } catch (...) {
            fail(std::current_exception());
        }
    }
}

void Pipeline::submit(std::function<void()> task) {
    {
        std::lock_guard lock(pool_mutex_);
        tasks_.push_back(std::move(task));
    }
    pool_cv_.notify_one();
}

void Pipeline::fail(std::exception_ptr error) {
    {
        std::lock_guard lock(mutex_);
        if (!error_) {
            error_ = error;
        }
    }
    progress_.notify_all();
}

void Pipeline::check_shot_length(uint64_t cycles) const {
    if (cycles != 0 && !model_->supports_cycles(cycles)) {
        throw ContractViolation(
            "a shot of " + std::to_string(cycles) + " cycles does not fit the model's prologue, epilogue and period");
    }
}

void Pipeline::begin_shot(uint64_t cycles) {
    check_shot_length(cycles);
    std::lock_guard lock(mutex_);
    if (current_ != nullptr) {
        throw ContractViolation("begin_shot while shot " + std::to_string(current_->shot) + " is still open");
    }
    auto shot = std::make_unique<ShotState>();
    shot->shot = next_shot_++;
    shot->total = cycles;
    current_ = shot.get();
    shots_.emplace(shot->shot, std::move(shot));
}

void Pipeline::push_cycle(std::span<const uint32_t> fired) {
    const int64_t now = monotonic_ns();
    {
        std::lock_guard lock(mutex_);
        if (error_) {
            std::rethrow_exception(error_);
        }
        if (current_ == nullptr) {
            throw ContractViolation("push_cycle without an open shot");
        }
        ShotState &s = *current_;
        const uint32_t dpc = model_->detectors_per_cycle();
        const uint64_t c = s.arrived;
        BlockState &b = block_for_cycle(s, c);
        for (uint32_t f : fired) {
            if (f >= dpc) {
                throw ContractViolation("detector " + std::to_string(f) + " is outside the cycle");
            }
            b.events.push_back(c * dpc + f);
        }
        std::sort(b.events.end() - (ptrdiff_t)fired.size(), b.events.end());
        b.t_acquired = now;
        s.t_last_frame = now;
        s.arrived++;
        if (s.total != 0 && s.arrived == s.total) {
            s.ended = true;
            current_ = nullptr;
        }
        pump(s);
        pump_dispatch();
    }
    drain_predictions();
}

void Pipeline::end_shot() {
    {
        std::lock_guard lock(mutex_);
        if (current_ == nullptr) {
            throw ContractViolation("end_shot without an open shot");
        }
        ShotState &s = *current_;
        if (s.total != 0) {
            throw ContractViolation(
                "shot " + std::to_string(s.shot) + " ended after " + std::to_string(s.arrived) + " of " +
                std::to_string(s.total) + " cycles");
        }
        check_shot_length(s.arrived);
        s.total = s.arrived;
        s.ended = true;
        current_ = nullptr;
        pump(s);
        pump_dispatch();
    }
    drain_predictions();
}

void Pipeline::push_shot(const ShotSample &shot) {
    if (shot.detectors_per_cycle != model_->detectors_per_cycle()) {
        throw ContractViolation("shot does not match the model's detectors_per_cycle");
    }
    begin_shot(shot.num_cycles);
    std::vector<uint32_t> fired;
    auto it = shot.detectors.begin();
    for (uint64_t c = 0; c < shot.num_cycles; c++) {
        fired.clear();
        const DetectorId end = (c + 1) * shot.detectors_per_cycle;
        for (; it != shot.detectors.end() && *it < end; ++it) {
            fired.push_back((uint32_t)(*it - c * shot.detectors_per_cycle));
        }
        push_cycle(fired);
    }
    if (shot.num_cycles == 0) {
        end_shot();
    }
}

void Pipeline::finish() {
    {
        std::lock_guard lock(mutex_);
        if (current_ != nullptr) {
            throw ContractViolation("finish while shot " + std::to_string(current_->shot) + " is still open");
        }
    }
    std::unique_lock lock(mutex_);
    progress_.wait(lock, [&] { return error_ || (shots_.empty() && ready_.empty() && emitting_ == 0); });
    if (error_) {
        std::rethrow_exception(error_);
    }
}

size_t Pipeline::queue_depth() const {
    std::lock_guard lock(mutex_);
    return in_flight_;
}

bool Pipeline::backlog_alarm() const {
    std::lock_guard lock(mutex_);
    return backlog_.alarmed();
}

Pipeline::BlockState &Pipeline::block_for_cycle(ShotState &s, uint64_t cycle) {
    const uint64_t index = cycle / options_.block_cycles;
    auto it = s.blocks.find(index);
    if (it != s.blocks.end()) {
        return *it->second;
    }
    auto b = std::make_unique<BlockState>();
    b->shot = &s;
    b->index = index;
    b->spec.block = next_global_block_++;
    return *s.blocks.emplace(index, std::move(b)).first->second;
}

std::optional<bool> Pipeline::block_exists(const ShotState &s, uint64_t index) const {
    const uint64_t first = index * options_.block_cycles;
    if (s.total != 0) {
        return first < s.total;
    }
    if (s.arrived > first) {
        return true;
    }
    return std::nullopt;
}

void Pipeline::pump(ShotState &s) {
    const uint32_t m = options_.block_cycles;

    // Blocks become ready in order once their frames and the lookahead are in.
    for (auto &[i, bp] : s.blocks) {
        BlockState &b = *bp;
        if (b.ready) {
            continue;
        }
        const uint64_t lo = i * m;
        uint64_t hi = lo + m;
        bool ready;
        if (s.total != 0) {
            hi = std::min(hi, s.total);
            ready = s.arrived >= std::min(s.total, hi + lookahead_);
        } else {
            ready = s.arrived >= hi + lookahead_;
        }
        if (!ready) {
            break;
        }
        b.spec.first_cycle = lo;
        b.spec.num_cycles = (uint32_t)(hi - lo);
        b.spec.total_cycles = s.total;
        b.ready = true;
        dispatch_queue_.push_back(&b);
        in_flight_++;
        if (backlog_.observe(in_flight_) && options_.metrics != nullptr) {
            options_.metrics->record_backlog(b.spec.block, in_flight_);
        }
    }

    // Layer-1 units: fuse 2k with 2k+1, or pass 2k through when it is last.
    for (auto &[i, bp] : s.blocks) {
        if (i % 2 != 0 || !bp->decoded || bp->finalized) {
            continue;
        }
        const uint64_t k = i / 2;
        UnitState &u = s.units[k];
        if (u.started) {
            continue;
        }
        std::optional<bool> partner = block_exists(s, i + 1);
        if (!partner) {
            continue;
        }
        if (*partner) {
            auto it = s.blocks.find(i + 1);
            if (it != s.blocks.end() && it->second->decoded) {
                u.started = true;
                submit([this, shot = &s, k] { run_unit(shot, k); });
            }
        } else {
            u.started = u.done = true;
            u.result = std::move(*bp->result);
            bp->result.reset();
        }
    }

    // Layer-2 fuses over (2k+1, 2k+2) once both units are in.
    for (auto &[k, u] : s.units) {
        if (!u.done || s.layer2_started.count(k)) {
            continue;
        }
        auto next = s.units.find(k + 1);
        if (next != s.units.end() && next->second.done) {
            s.layer2_started.insert(k);
            submit([this, shot = &s, k] { run_layer2(shot, k); });
        }
    }

    // Blocks settled by a unit alone: block 0, and a trailing odd block.
    for (auto &[k, u] : s.units) {
        if (!u.done) {
            continue;
        }
        auto first = s.blocks.find(0);
        if (k == 0 && first != s.blocks.end() && !first->second->finalized) {
            finalize_block(s, 0, u.result);
        }
        const uint64_t odd = 2 * k + 1;
        auto it = s.blocks.find(odd);
        if (it != s.blocks.end() && !it->second->finalized && block_exists(s, odd + 1) == false) {
            finalize_block(s, odd, u.result);
        }
    }

    // Drop state nobody will read again.
    for (auto it = s.units.begin(); it != s.units.end();) {
        const uint64_t k = it->first;
        auto even = s.blocks.find(2 * k);
        auto odd = s.blocks.find(2 * k + 1);
        const bool even_done = even == s.blocks.end() || even->second->finalized;
        const bool odd_done = odd == s.blocks.end() ? block_exists(s, 2 * k + 1) != std::nullopt
                                                    : odd->second->finalized;
        if (it->second.done && even_done && odd_done) {
            it = s.units.erase(it);
        } else {
            ++it;
        }
    }
    while (!s.blocks.empty()) {
        auto first = s.blocks.begin();
        if (!first->second->finalized) {
            break;
        }
        auto next = std::next(first);
        const bool next_settled =
            next != s.blocks.end() ? next->second->finalized : block_exists(s, first->first + 1) == false;
        if (!next_settled) {
            break;
        }
        s.blocks.erase(first);
    }

    const uint64_t num_blocks = s.total == 0 ? 0 : (s.total + m - 1) / m;
    if (s.ended && !s.complete && s.finalized == num_blocks) {
        complete_shot(s);
    }
}

void Pipeline::pump_dispatch() {
    while (!dispatch_queue_.empty()) {
        BlockState *b = dispatch_queue_.front();
        if (b->spec.block >= retired_floor_ + buffer_->capacity()) {
            break;
        }
        dispatch_queue_.pop_front();
        buffer_->announce(b->spec);
        submit([this, b] { run_decode(b->shot, b); });
    }
}

void Pipeline::run_decode(ShotState *s, BlockState *b) {
    BlockView view = buffer_->ensure_window(b->spec.block);
    view.first_block = view.last_block = b->index;
    const LocalGraph &g = *view.graph;
    ReweightLog log;
    std::span<double> overlay;
    bool reweighted = false;
    if (options_.preweights && model_has_partners_) {
        const DetectorId base = view.first_detector();
        const uint32_t dpc = g.detectors_per_cycle;
        const int64_t lo = (int64_t)base - (int64_t)(model_->span() * dpc);
        const int64_t hi = (int64_t)view.end_detector() + (int64_t)(model_->span() * dpc);
        std::vector<int64_t> offsets;
        {
            std::lock_guard lock(mutex_);
            for (uint64_t i : {b->index - 1, b->index, b->index + 1}) {
                auto it = s->blocks.find(i);
                if (it == s->blocks.end()) {
                    continue;
                }
                for (DetectorId d : it->second->events) {
                    if ((int64_t)d >= lo && (int64_t)d < hi) {
                        offsets.push_back((int64_t)d - (int64_t)base);
                    }
                }
            }
        }
        SeedEdgeSet seeds = select_seed_edges(g, offsets);
        if (!seeds.edges.empty()) {
            overlay = buffer_->overlay(b->spec.block);
            log = apply_preweights(g, overlay, seeds);
            reweighted = true;
            view.weights = overlay;
        }
    }
    BlockResult result = decode_block(view, b->events);
    {
        std::lock_guard lock(mutex_);
        b->view = view;
        b->overlay = overlay;
        b->log = std::move(log);
        b->reweighted = reweighted;
        b->result = std::move(result);
        b->decoded = true;
        pump(*s);
        pump_dispatch();
    }
    drain_predictions();
}

namespace {

BlockView joined_view(
    std::shared_ptr<const LocalGraph> joined, const BlockView &a, const BlockView &b, std::vector<double> &weights) {
    BlockView v;
    if (a.graph->is_template(a.weights) && b.graph->is_template(b.weights)) {
        // Neither side is reweighted: the joined structure's own weights
        // apply, and with them its cached shortest-path fields.
        v.weights = joined->weights;
    } else {
        weights = LocalGraph::join_weights(*a.graph, a.weights, *b.graph, b.weights);
        v.weights = weights;
    }
    v.graph = std::move(joined);
    v.first_cycle = a.first_cycle;
    v.first_block = a.first_block;
    v.last_block = b.last_block;
    return v;
}

}  // namespace

void Pipeline::run_unit(ShotState *s, uint64_t k) {
    BlockState *a;
    BlockState *b;
    {
        std::lock_guard lock(mutex_);
        a = s->blocks.at(2 * k).get();
        b = s->blocks.at(2 * k + 1).get();
    }
    std::vector<double> weights;
    BlockView view = joined_view(buffer_->joined(a->spec.block), a->view, b->view, weights);
    BlockResult result = fuse(*a->result, *b->result, view, options_.fuse);
    {
        std::lock_guard lock(mutex_);
        UnitState &u = s->units.at(k);
        u.result = std::move(result);
        u.done = true;
        a->result.reset();
        b->result.reset();
        pump(*s);
        pump_dispatch();
    }
    drain_predictions();
}

void Pipeline::run_layer2(ShotState *s, uint64_t k) {
    const UnitState *lower;
    const UnitState *upper;
    BlockState *a;
    BlockState *b;
    {
        std::lock_guard lock(mutex_);
        lower = &s->units.at(k);
        upper = &s->units.at(k + 1);
        a = s->blocks.at(2 * k + 1).get();
        b = s->blocks.at(2 * k + 2).get();
    }
    BlockResult pa = project(lower->result, a->index, a->spec.first_cycle, a->spec.num_cycles);
    BlockResult pb = project(upper->result, b->index, b->spec.first_cycle, b->spec.num_cycles);
    std::vector<double> weights;
    BlockView view = joined_view(buffer_->joined(a->spec.block), a->view, b->view, weights);
    FuseOptions settled = options_.fuse;
    settled.outer_cuts = SinkPolicy{false, false};
    BlockResult result = fuse(pa, pb, view, settled);
    {
        std::lock_guard lock(mutex_);
        finalize_block(*s, a->index, result);
        finalize_block(*s, b->index, result);
        pump(*s);
        pump_dispatch();
    }
    drain_predictions();
}

void Pipeline::finalize_block(ShotState &s, uint64_t index, const BlockResult &source) {
    BlockState &b = *s.blocks.at(index);
    const uint32_t dpc = model_->detectors_per_cycle();
    const DetectorId lo = b.spec.first_cycle * dpc;
    const DetectorId hi = lo + (DetectorId)b.spec.num_cycles * dpc;
    double weight = 0;
    for (const auto &p : source.matching.pairs) {
        if (p.event < lo || p.event >= hi) {
            continue;
        }
        weight += p.weight;
        s.observables ^= p.observables;
        s.heralded = s.heralded || p.target.is_block_boundary();
        if (options_.keep_matching) {
            s.pairs.push_back(p);
        }
    }
    if (s.block_weights.size() <= index) {
        s.block_weights.resize(index + 1, 0.0);
    }
    s.block_weights[index] = weight;
    b.finalized = true;
    s.finalized++;
    retire(s, b);
}

void Pipeline::retire(ShotState &s, BlockState &b) {
    if (b.reweighted) {
        undo_reweights(b.overlay, b.log);
        b.reweighted = false;
    }
    b.view = BlockView{};
    buffer_->release_view(b.spec.block);
    LatencyRecord record;
    record.shot = s.shot;
    record.block = b.index;
    record.t_block_acquired_ns = b.t_acquired;
    record.t_block_done_ns = monotonic_ns();
    s.latencies.push_back(record);
    if (options_.metrics != nullptr) {
        options_.metrics->record_block(record, in_flight_);
    }
    in_flight_--;
    retired_above_floor_.insert(b.spec.block);
    while (!retired_above_floor_.empty() && *retired_above_floor_.begin() == retired_floor_) {
        retired_above_floor_.erase(retired_above_floor_.begin());
        retired_floor_++;
    }
}

void Pipeline::complete_shot(ShotState &s) {
    s.complete = true;
    // Emit every completed shot at the head of the queue, in shot order.
    while (!shots_.empty() && shots_.begin()->second->complete) {
        ShotState &head = *shots_.begin()->second;
        Prediction p;
        p.shot = head.shot;
        p.observables = head.observables;
        p.heralded = head.heralded;
        for (double w : head.block_weights) {
            p.weight += w;
        }
        if (options_.keep_matching) {
            Matching m;
            m.pairs = std::move(head.pairs);
            m.finalize();
            p.matching = std::move(m);
        }
        const int64_t end_latency = head.arrived == 0 ? 0 : monotonic_ns() - head.t_last_frame;
        ShotLatency latency = summarize_shot(head.shot, head.latencies, end_latency);
        if (options_.metrics != nullptr) {
            options_.metrics->record_shot(latency);
        }
        ready_.emplace_back(std::move(p), latency);
        shots_.erase(shots_.begin());
    }
}

void Pipeline::drain_predictions() {
    std::lock_guard emit(emit_mutex_);
    std::deque<std::pair<Prediction, ShotLatency>> batch;
    {
        std::lock_guard lock(mutex_);
        batch.swap(ready_);
        emitting_ += batch.size();
    }
    for (const auto &[p, latency] : batch) {
        if (on_prediction_) {
            on_prediction_(p, latency);
        }
    }
    {
        std::lock_guard lock(mutex_);
        emitting_ -= batch.size();
    }
    progress_.notify_all();
}

std::vector<Prediction> decode_shots(
    std::shared_ptr<const PeriodicModel> model, std::span<const ShotSample> shots, PipelineOptions options) {
    std::vector<Prediction> out;
    out.reserve(shots.size());
    Pipeline pipeline(std::move(model), options, [&](const Prediction &p, const ShotLatency &) {
        out.push_back(p);
    });
    for (const auto &s : shots) {
        pipeline.push_shot(s);
    }
    pipeline.finish();
    return out;
}

}  // namespace fm
