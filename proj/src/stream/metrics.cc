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


#include "fusematch/stream/metrics.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "json.hpp"

namespace fm {

using ordered_json = nlohmann::ordered_json;

int64_t monotonic_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

int64_t percentile(std::span<int64_t> values, double q) {
    if (values.empty()) {
        return 0;
    }
    size_t rank = (size_t)std::ceil(q * (double)values.size());
    rank = std::clamp<size_t>(rank, 1, values.size()) - 1;
    std::nth_element(values.begin(), values.begin() + (ptrdiff_t)rank, values.end());
    return values[rank];
}

ShotLatency summarize_shot(uint64_t shot, std::span<const LatencyRecord> blocks, int64_t end_of_shot_latency_ns) {
    std::vector<int64_t> lat;
    lat.reserve(blocks.size());
    for (const auto &r : blocks) {
        lat.push_back(r.sub_shot_latency_ns());
    }
    ShotLatency s;
    s.shot = shot;
    s.end_of_shot_latency_ns = end_of_shot_latency_ns;
    s.t_software_median_ns = percentile(lat, 0.5);
    s.t_software_p99_ns = percentile(lat, 0.99);
    return s;
}

BacklogMonitor::BacklogMonitor(size_t window) : window_(std::max<size_t>(window, 2)) {}

bool BacklogMonitor::observe(size_t depth) {
    max_depth_ = std::max(max_depth_, depth);
    window_min_ = std::min(window_min_, depth);
    if (++seen_ < window_) {
        return false;
    }
    // Track the floor of each window: a transient spike does not move it,
    // a queue that keeps growing raises it window after window.
    minima_.push_back(window_min_);
    if (minima_.size() > kRisingWindows + 1) {
        minima_.pop_front();
    }
    seen_ = 0;
    window_min_ = std::numeric_limits<size_t>::max();
    if (alarmed_ || minima_.size() <= kRisingWindows) {
        return false;
    }
    for (size_t k = 1; k < minima_.size(); k++) {
        if (minima_[k] <= minima_[k - 1]) {
            return false;
        }
    }
    if (minima_.back() >= minima_.front() + window_ / 2) {
        alarmed_ = true;
        return true;
    }
    return false;
}

MetricsSink::MetricsSink(std::ostream &out, TimingBudget budget) : out_(out), budget_(budget) {}

void MetricsSink::write_line(const std::string &line) {
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
}

void MetricsSink::record_block(const LatencyRecord &r, size_t queue_depth) {
    ordered_json j;
    j["kind"] = "block";
    j["shot"] = r.shot;
    j["block"] = r.block;
    j["t_block_acquired_ns"] = r.t_block_acquired_ns;
    j["t_block_done_ns"] = r.t_block_done_ns;
    j["sub_shot_latency_ns"] = r.sub_shot_latency_ns();
    j["queue_depth"] = queue_depth;
    write_line(j.dump());
    std::lock_guard lock(mutex_);
    blocks_++;
}

void MetricsSink::record_shot(const ShotLatency &s) {
    ordered_json j;
    j["kind"] = "shot";
    j["shot"] = s.shot;
    j["end_of_shot_latency_ns"] = s.end_of_shot_latency_ns;
    j["t_software_median_ns"] = s.t_software_median_ns;
    j["t_software_p99_ns"] = s.t_software_p99_ns;
    j["t_input_ns"] = budget_.t_input_ns;
    j["t_output_ns"] = budget_.t_output_ns;
    j["t_control_ns"] = budget_.t_control_ns;
    j["t_decode_ns"] = budget_.t_decode_ns(s.t_software_median_ns);
    j["t_react_ns"] = budget_.t_react_ns(s.t_software_median_ns);
    write_line(j.dump());
}

void MetricsSink::record_backlog(uint64_t block, size_t queue_depth) {
    ordered_json j;
    j["kind"] = "backlog";
    j["block"] = block;
    j["queue_depth"] = queue_depth;
    j["message"] = "queue depth keeps growing: blocks arrive faster than they are decoded";
    write_line(j.dump());
}

uint64_t MetricsSink::blocks_recorded() const {
    std::lock_guard lock(mutex_);
    return blocks_;
}

std::string emit_prediction(const Prediction &p, const ShotLatency *latency) {
    ordered_json j;
    j["shot"] = p.shot;
    j["observables"] = mask_to_hex(p.observables);
    j["heralded"] = p.heralded;
    if (latency != nullptr) {
        j["end_of_shot_latency_us"] = (double)latency->end_of_shot_latency_ns / 1000.0;
        j["t_software_median_us"] = (double)latency->t_software_median_ns / 1000.0;
    }
    return j.dump();
}

}  // namespace fm
