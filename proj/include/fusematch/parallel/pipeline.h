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


#ifndef FUSEMATCH_PARALLEL_PIPELINE_H
#define FUSEMATCH_PARALLEL_PIPELINE_H

#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "fusematch/buffer/graph_buffer.h"
#include "fusematch/correlations/preweight.h"
#include "fusematch/harness/sampler.h"
#include "fusematch/parallel/plan.h"
#include "fusematch/parallel/prediction.h"
#include "fusematch/stream/metrics.h"

namespace fm {

struct PipelineOptions {
    uint32_t block_cycles = 10;
    unsigned workers = 1;
    /// Reweight each block from its detection pattern before decoding.
    bool preweights = true;
    FuseOptions fuse;
    GraphBufferOptions buffer;
    /// Attach the assembled matching to every prediction.
    bool keep_matching = false;
    /// Optional sink for per-block and per-shot latency records.
    MetricsSink *metrics = nullptr;
    /// Window of the backlog alarm, in blocks.
    size_t backlog_window = 32;
};

using PredictionCallback = std::function<void(const Prediction &, const ShotLatency &)>;

/// Streaming block decoder. Cycles are pushed in order; each block is
/// decoded once its frames (and a short lookahead) have arrived, layer-1 and
/// layer-2 fuses run as soon as their operands are done, and a prediction is
/// emitted per shot in shot order.
///
/// Blocks are numbered globally across shots for the graph buffer. At most
/// buffer-capacity blocks are in flight; blocks beyond that wait for the
/// oldest to retire.
class Pipeline {
   public:
    Pipeline(std::shared_ptr<const PeriodicModel> model, PipelineOptions options, PredictionCallback on_prediction);
    ~Pipeline();
    Pipeline(const Pipeline &) = delete;
    Pipeline &operator=(const Pipeline &) = delete;

    /// Starts a shot of `cycles` cycles, or of unknown length when 0.
    void begin_shot(uint64_t cycles);
    /// Cycle-local indices of the detectors fired in the next cycle.
    void push_cycle(std::span<const uint32_t> fired);
    /// Ends the current shot. Bounded shots end by themselves after their
    /// last cycle; calling this early is a contract violation.
    void end_shot();
    void push_shot(const ShotSample &shot);

    /// Waits until every begun shot has been emitted. Rethrows the first
    /// error raised by a worker.
    void finish();

    /// Blocks that are complete but not yet retired.
    size_t queue_depth() const;
    bool backlog_alarm() const;
    const GraphBuffer &buffer() const {
        return *buffer_;
    }

   private:
    struct BlockState;
    struct ShotState;
    struct UnitState {
        bool started = false;
        bool done = false;
        BlockResult result;
    };

    void worker_loop();
    void submit(std::function<void()> task);
    void fail(std::exception_ptr error);

    void run_decode(ShotState *shot, BlockState *block);
    void run_unit(ShotState *shot, uint64_t unit);
    void run_layer2(ShotState *shot, uint64_t unit);

    // The following run with mutex_ held.
    std::optional<bool> block_exists(const ShotState &shot, uint64_t index) const;
    BlockState &block_for_cycle(ShotState &shot, uint64_t cycle);
    void pump(ShotState &shot);
    void pump_dispatch();
    void finalize_block(ShotState &shot, uint64_t index, const BlockResult &source);
    void retire(ShotState &shot, BlockState &block);
    void complete_shot(ShotState &shot);
    void check_shot_length(uint64_t cycles) const;

    void drain_predictions();

    std::shared_ptr<const PeriodicModel> model_;
    PipelineOptions options_;
    PredictionCallback on_prediction_;
    uint32_t lookahead_ = 1;
    bool model_has_partners_ = false;
    std::unique_ptr<GraphBuffer> buffer_;

    mutable std::mutex mutex_;
    std::condition_variable progress_;
    std::map<uint64_t, std::unique_ptr<ShotState>> shots_;
    ShotState *current_ = nullptr;
    uint64_t next_shot_ = 0;
    uint64_t next_global_block_ = 0;
    std::deque<BlockState *> dispatch_queue_;
    uint64_t retired_floor_ = 0;
    std::set<uint64_t> retired_above_floor_;
    size_t in_flight_ = 0;
    BacklogMonitor backlog_;
    std::exception_ptr error_;
    std::deque<std::pair<Prediction, ShotLatency>> ready_;
    size_t emitting_ = 0;

    std::mutex emit_mutex_;

    std::mutex pool_mutex_;
    std::condition_variable pool_cv_;
    std::deque<std::function<void()>> tasks_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

/// Decodes a batch of shots through a pipeline and returns the predictions
/// in shot order.
std::vector<Prediction> decode_shots(
    std::shared_ptr<const PeriodicModel> model, std::span<const ShotSample> shots, PipelineOptions options);

}  // namespace fm

#endif  // FUSEMATCH_PARALLEL_PIPELINE_H
