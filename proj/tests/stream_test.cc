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


#include <gtest/gtest.h>

#include <sstream>
#include <future>
#include <thread>

#include "json.hpp"

#include "fusematch/common.h"
#include "fusematch/harness/generators.h"
#include "fusematch/harness/sampler.h"
#include "fusematch/stream/format.h"
#include "fusematch/stream/metrics.h"
#include "fusematch/stream/socket.h"

using namespace fm;

namespace {

std::string header_bytes(uint32_t dpc, uint64_t cycles) {
    std::ostringstream out;
    write_header(out, StreamHeader{kStreamVersion, dpc, 1, cycles});
    return out.str();
}

std::vector<std::vector<uint32_t>> read_cycles(const std::string &bytes, std::vector<FrameKind> *kinds = nullptr) {
    std::istringstream in(bytes);
    FrameReader reader(in);
    std::vector<std::vector<uint32_t>> cycles;
    std::vector<uint32_t> fired;
    for (;;) {
        FrameKind k = reader.next(fired);
        if (kinds != nullptr) {
            kinds->push_back(k);
        }
        if (k == FrameKind::kEndOfStream) {
            return cycles;
        }
        if (k == FrameKind::kCycle) {
            cycles.push_back(fired);
        }
    }
}

std::string error_of(const std::string &bytes) {
    try {
        read_cycles(bytes);
    } catch (const FormatError &e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(StreamHeader, LayoutIsLittleEndian) {
    std::string h = header_bytes(0x01020304, 0x1122334455667788ull);
    ASSERT_EQ(h.size(), kStreamHeaderBytes);
    EXPECT_EQ(h.substr(0, 8), "DETSTRM1");
    EXPECT_EQ((uint8_t)h[8], 1);
    EXPECT_EQ((uint8_t)h[9], 0);
    EXPECT_EQ((uint8_t)h[10], 0x04);
    EXPECT_EQ((uint8_t)h[13], 0x01);
    EXPECT_EQ((uint8_t)h[14], 1);
    EXPECT_EQ((uint8_t)h[16], 0x88);
    EXPECT_EQ((uint8_t)h[23], 0x11);
    std::istringstream in(h);
    StreamHeader back = read_header(in);
    EXPECT_EQ(back.detectors_per_cycle, 0x01020304u);
    EXPECT_EQ(back.cycles_per_shot, 0x1122334455667788ull);
}

TEST(StreamHeader, Rejections) {
    std::string h = header_bytes(4, 3);
    std::string bad_magic = h;
    bad_magic[0] = 'X';
    std::istringstream a(bad_magic);
    EXPECT_THROW(read_header(a), FormatError);
    std::string bad_version = h;
    bad_version[8] = 2;
    std::istringstream b(bad_version);
    EXPECT_THROW(read_header(b), FormatError);
    std::istringstream c(h.substr(0, 20));
    EXPECT_THROW(read_header(c), FormatError);
}

TEST(Frames, BitLayout) {
    std::string bytes = header_bytes(4, 1) + std::string(1, (char)0b0000'0101);
    auto cycles = read_cycles(bytes);
    ASSERT_EQ(cycles.size(), 1u);
    EXPECT_EQ(cycles[0], (std::vector<uint32_t>{0, 2}));
}

TEST(Frames, BoundedShotsNeedNoTerminator) {
    std::string bytes = header_bytes(4, 3) + std::string("\x01\x00\x08", 3);
    std::vector<FrameKind> kinds;
    auto cycles = read_cycles(bytes, &kinds);
    ASSERT_EQ(cycles.size(), 3u);
    EXPECT_EQ(cycles[2], (std::vector<uint32_t>{3}));
    EXPECT_EQ(kinds, (std::vector<FrameKind>{FrameKind::kCycle, FrameKind::kCycle, FrameKind::kCycle,
                                             FrameKind::kEndOfShot, FrameKind::kEndOfStream}));
}

TEST(Frames, TruncatedFrameNamesOffset) {
    // dpc 12: two bytes per frame; the second frame stops after one byte.
    std::string bytes = header_bytes(12, 2) + std::string("\x01\x00\x02", 3);
    std::string msg = error_of(bytes);
    EXPECT_NE(msg.find("26"), std::string::npos) << msg;
    EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
}

TEST(Frames, NonzeroPaddingIsRejected) {
    std::string bytes = header_bytes(4, 1) + std::string(1, (char)0x10);
    EXPECT_NE(error_of(bytes).find("24"), std::string::npos);
}

TEST(Frames, TerminatorInsideBoundedShot) {
    std::string bytes = header_bytes(4, 2) + std::string("\x00\xff", 2);
    std::string msg = error_of(bytes);
    EXPECT_NE(msg.find("terminator"), std::string::npos) << msg;
    EXPECT_NE(msg.find("25"), std::string::npos) << msg;
}

TEST(Frames, UnboundedTerminatorWithPadding) {
    std::string bytes = header_bytes(4, 0) + std::string("\x03\x0f\xff\x00\xff", 5);
    std::vector<FrameKind> kinds;
    auto cycles = read_cycles(bytes, &kinds);
    ASSERT_EQ(cycles.size(), 3u);
    EXPECT_EQ(cycles[1], (std::vector<uint32_t>{0, 1, 2, 3}));
    EXPECT_EQ(std::count(kinds.begin(), kinds.end(), FrameKind::kEndOfShot), 2);
}

TEST(Frames, GuardByteWhenFramesFillBytes) {
    StreamHeader h{kStreamVersion, 8, 1, 0};
    std::ostringstream out;
    FrameWriter w(out, h);
    std::vector<uint32_t> all{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<uint32_t> one{5};
    w.write_cycle(all);
    w.write_cycle(one);
    w.end_shot();
    w.end_shot();
    std::string bytes = out.str();
    EXPECT_EQ(bytes.substr(24), std::string("\xff\x00\x20\xff\x01\xff\x01", 7));
    std::vector<FrameKind> kinds;
    auto cycles = read_cycles(bytes, &kinds);
    ASSERT_EQ(cycles.size(), 2u);
    EXPECT_EQ(cycles[0], all);
    EXPECT_EQ(cycles[1], one);
    EXPECT_EQ(std::count(kinds.begin(), kinds.end(), FrameKind::kEndOfShot), 2);

    std::string bad = bytes.substr(0, 25) + "\x07";
    EXPECT_NE(error_of(bad).find("guard"), std::string::npos);
}

TEST(Frames, WriterChecksBoundedCycleCount) {
    StreamHeader h{kStreamVersion, 4, 1, 3};
    std::ostringstream out;
    FrameWriter w(out, h);
    std::vector<uint32_t> none;
    w.write_cycle(none);
    EXPECT_THROW(w.end_shot(), ContractViolation);
    std::vector<uint32_t> bad{4};
    EXPECT_THROW(w.write_cycle(bad), ContractViolation);
}

TEST(Frames, RoundTripIsBitIdentical) {
    for (uint32_t d : {3u, 9u, 17u}) {
        NoiseModel model = repetition_code_model(d, 6, 0.08);
        auto shots = sample_shots(model, 40, 6, d);
        for (uint64_t per_shot : {uint64_t{6}, uint64_t{0}}) {
            StreamHeader h{kStreamVersion, d - 1, 1, per_shot};
            std::ostringstream out;
            FrameWriter w(out, h);
            for (const auto &s : shots) {
                w.write_shot(s);
            }
            std::istringstream in(out.str());
            StreamHeader back;
            auto read = read_shots(in, &back);
            EXPECT_EQ(back, h);
            ASSERT_EQ(read.size(), shots.size());
            for (size_t k = 0; k < shots.size(); k++) {
                EXPECT_EQ(read[k].detectors, shots[k].detectors);
                EXPECT_EQ(read[k].num_cycles, shots[k].num_cycles);
            }
            std::ostringstream again;
            FrameWriter w2(again, back);
            for (const auto &s : read) {
                w2.write_shot(s);
            }
            EXPECT_EQ(again.str(), out.str());
        }
    }
}

TEST(EmitPrediction, Formats) {
    Prediction p;
    EXPECT_EQ(emit_prediction(p), R"({"shot":0,"observables":"0x0","heralded":false})");
    p.shot = 4;
    p.observables = 1;
    EXPECT_EQ(emit_prediction(p), R"({"shot":4,"observables":"0x1","heralded":false})");
    p.observables = 0x1a;
    p.heralded = true;
    ShotLatency l{4, 12'500, 50'000, 90'000};
    auto j = nlohmann::json::parse(emit_prediction(p, &l));
    EXPECT_EQ(j["observables"], "0x1a");
    EXPECT_EQ(j["heralded"], true);
    EXPECT_DOUBLE_EQ(j["end_of_shot_latency_us"].get<double>(), 12.5);
    EXPECT_DOUBLE_EQ(j["t_software_median_us"].get<double>(), 50.0);
}

TEST(Latency, RecordsAndPercentiles) {
    LatencyRecord r{0, 3, 1'000, 51'000};
    EXPECT_EQ(r.sub_shot_latency_ns(), 50'000);
    std::vector<LatencyRecord> blocks;
    for (int64_t k = 1; k <= 100; k++) {
        blocks.push_back({0, (uint64_t)k, 0, k * 10});
    }
    ShotLatency s = summarize_shot(0, blocks, 7);
    EXPECT_EQ(s.t_software_median_ns, 500);
    EXPECT_EQ(s.t_software_p99_ns, 990);
    EXPECT_EQ(s.end_of_shot_latency_ns, 7);
    std::vector<int64_t> one{42};
    EXPECT_EQ(percentile(one, 0.99), 42);
}

TEST(Latency, BudgetIdentitiesAreExact) {
    TimingBudget b{9'000, 1'000, 200'000};
    for (int64_t sw : {0ll, 1ll, 63'000ll, 1'000'000'007ll}) {
        EXPECT_EQ(b.t_decode_ns(sw), b.t_input_ns + sw + b.t_output_ns);
        EXPECT_EQ(b.t_react_ns(sw), b.t_decode_ns(sw) + b.t_control_ns);
    }
}

TEST(Latency, SinkWritesOneLinePerRecord) {
    std::ostringstream out;
    MetricsSink sink(out, TimingBudget{5'000, 5'000, 100'000});
    for (uint64_t shot = 0; shot < 10; shot++) {
        for (uint64_t b = 0; b < 7; b++) {
            sink.record_block({shot, b, 100, 200}, 1);
        }
    }
    sink.record_shot({3, 10, 100, 100});
    EXPECT_EQ(sink.blocks_recorded(), 70u);
    std::istringstream in(out.str());
    std::string line;
    int blocks = 0;
    int shots = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        if (j["kind"] == "block") {
            blocks++;
            EXPECT_EQ(j["sub_shot_latency_ns"], 100);
        } else if (j["kind"] == "shot") {
            shots++;
            EXPECT_EQ(j["t_decode_ns"].get<int64_t>(), 5'000 + 100 + 5'000);
            EXPECT_EQ(j["t_react_ns"].get<int64_t>(), j["t_decode_ns"].get<int64_t>() + 100'000);
        }
    }
    EXPECT_EQ(blocks, 70);
    EXPECT_EQ(shots, 1);
}

TEST(Backlog, GrowingQueueRaisesTheAlarmOnce) {
    BacklogMonitor steady(8);
    for (int k = 0; k < 100; k++) {
        EXPECT_FALSE(steady.observe(3 + k % 2));
    }
    EXPECT_FALSE(steady.alarmed());
    BacklogMonitor growing(8);
    int raised = 0;
    for (size_t k = 0; k < 80; k++) {
        raised += growing.observe(k);
    }
    EXPECT_EQ(raised, 1);
    EXPECT_TRUE(growing.alarmed());
    EXPECT_EQ(growing.max_depth(), 79u);
}

TEST(Backlog, TransientBurstIsNotABacklog) {
    BacklogMonitor m(8);
    for (int k = 0; k < 200; k++) {
        // A burst of 30 queued blocks that drains again.
        size_t depth = (k >= 50 && k < 60) ? 2 + 3 * (size_t)(k - 50) : 2;
        EXPECT_FALSE(m.observe(depth)) << k;
    }
    EXPECT_EQ(m.max_depth(), 29u);
}

TEST(Backlog, StallThatDrainsIsNotABacklog) {
    // The workers stop for 40 arrivals, then catch up.
    BacklogMonitor m(8);
    for (size_t k = 0; k < 200; k++) {
        size_t depth = 2;
        if (k >= 50 && k < 90) {
            depth += k - 50;
        } else if (k >= 90 && k < 110) {
            depth += 2 * (110 - k);
        }
        EXPECT_FALSE(m.observe(depth)) << k;
    }
}

TEST(Socket, SplitAddress) {
    EXPECT_EQ(split_address("127.0.0.1:9000"), (std::pair<std::string, std::string>{"127.0.0.1", "9000"}));
    EXPECT_EQ(split_address(":0"), (std::pair<std::string, std::string>{"", "0"}));
    EXPECT_THROW(split_address("nocolon"), std::invalid_argument);
}

TEST(Socket, LoopbackCarriesTheStream) {
    NoiseModel model = repetition_code_model(5, 10, 0.05);
    auto shots = sample_shots(model, 20, 10, 1);
    std::promise<int> port;
    std::future<int> port_ready = port.get_future();
    std::vector<ShotSample> received;
    std::thread server([&] {
        int fd = tcp_accept_one(
            "127.0.0.1:0", [](int p, void *ctx) { static_cast<std::promise<int> *>(ctx)->set_value(p); }, &port);
        SocketStreamBuf buf(fd);
        std::istream in(&buf);
        received = read_shots(in);
    });
    {
        int fd = tcp_connect("127.0.0.1:" + std::to_string(port_ready.get()));
        SocketStreamBuf buf(fd);
        std::ostream out(&buf);
        StreamHeader h{kStreamVersion, 4, 1, 0};
        FrameWriter w(out, h);
        for (const auto &s : shots) {
            w.write_shot(s);
        }
        out.flush();
    }
    server.join();
    ASSERT_EQ(received.size(), shots.size());
    for (size_t k = 0; k < shots.size(); k++) {
        EXPECT_EQ(received[k].detectors, shots[k].detectors);
    }
}
