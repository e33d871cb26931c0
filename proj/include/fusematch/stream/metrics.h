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


#ifndef FUSEMATCH_STREAM_METRICS_H
#define FUSEMATCH_STREAM_METRICS_H

#include <cstdint>
#include <deque>
#include <limits>
#include <mutex>
#include <ostream>
#include <span>
#include <string>

#include "fusematch/parallel/prediction.h"

namespace fm {

/// Nanoseconds on the monotonic clock.
int64_t monotonic_ns();

struct LatencyRecord {
    uint64_t shot = 0;
    uint64_t block = 0;
    /// When the block's last frame arrived.
    int64_t t_block_acquired_ns = 0;
    /// When the block was fully processed (last fuse done, weights restored).
    int64_t t_block_done_ns = 0;

    int64_t sub_shot_latency_ns() const {
        return t_block_done_ns - t_block_acquired_ns;
    }
};

struct ShotLatency {
    uint64_t shot = 0;
    /// From receipt of the final cycle's frame to emission of the prediction.
    int64_t end_of_shot_latency_ns = 0;
    int64_t t_software_median_ns = 0;
    int64_t t_software_p99_ns = 0;
};

/// Median and 99th percentile of the records' sub-shot latencies.
ShotLatency summarize_shot(uint64_t shot, std::span<const LatencyRecord> blocks, int64_t end_of_shot_latency_ns);

/// Nearest-rank percentile of `values` (q in [0, 1]); the input is reordered.
int64_t percentile(std::span<int64_t> values, double q);

/// Fixed I/O and control-system costs added to the measured software time.
/// Integer nanoseconds keep the identities exact.
struct TimingBudget {
    int64_t t_input_ns = 0;
    int64_t t_output_ns = 0;
    int64_t t_control_ns = 0;

    int64_t t_decode_ns(int64_t t_software_ns) const {
        return t_input_ns + t_software_ns + t_output_ns;
    }
    int64_t t_react_ns(int64_t t_software_ns) const {
        return t_decode_ns(t_software_ns) + t_control_ns;
    }
};

/// Flags a queue that keeps growing. Observations are grouped into windows
/// of `window`; the alarm goes up when the minimum depth has risen in each
/// of the last three windows, by at least window / 2 in total. Short bursts
/// do not raise the floor and so never trigger it. The alarm latches.
class BacklogMonitor {
   public:
    explicit BacklogMonitor(size_t window = 32);

    /// Returns true exactly once, on the observation that raises the alarm.
    bool observe(size_t depth);
    bool alarmed() const {
        return alarmed_;
    }
    size_t max_depth() const {
        return max_depth_;
    }

   private:
    // Long enough that one scheduling stall on a busy core does not count.
    static constexpr size_t kRisingWindows = 6;

    size_t window_;
    size_t seen_ = 0;
    size_t window_min_ = std::numeric_limits<size_t>::max();
    std::deque<size_t> minima_;
    bool alarmed_ = false;
    size_t max_depth_ = 0;
};

/// Append-only JSON-lines sink for block, shot and backlog records.
/// Thread-safe; each record is written as one line.
class MetricsSink {
   public:
    MetricsSink(std::ostream &out, TimingBudget budget = {});

    void record_block(const LatencyRecord &record, size_t queue_depth);
    void record_shot(const ShotLatency &latency);
    void record_backlog(uint64_t block, size_t queue_depth);

    uint64_t blocks_recorded() const;
    const TimingBudget &budget() const {
        return budget_;
    }

   private:
    void write_line(const std::string &line);

    std::ostream &out_;
    TimingBudget budget_;
    mutable std::mutex mutex_;
    uint64_t blocks_ = 0;
};

/// One prediction as a JSON line. Without `latency` the timing fields are
/// left out, which keeps offline prediction files reproducible byte for byte.
std::string emit_prediction(const Prediction &prediction, const ShotLatency *latency = nullptr);

}  // namespace fm

#endif  // FUSEMATCH_STREAM_METRICS_H
