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


#include "fusematch/stream/format.h"

#include <algorithm>
#include <cstring>

namespace fm {

namespace {

template <typename T>
void put_le(uint8_t *out, T value) {
    for (size_t k = 0; k < sizeof(T); k++) {
        out[k] = (uint8_t)(value >> (8 * k));
    }
}

template <typename T>
T get_le(const uint8_t *in) {
    T value = 0;
    for (size_t k = 0; k < sizeof(T); k++) {
        value |= (T)in[k] << (8 * k);
    }
    return value;
}

bool all_ones(const std::vector<uint8_t> &frame) {
    return !frame.empty() && std::all_of(frame.begin(), frame.end(), [](uint8_t b) {
        return b == 0xFF;
    });
}

}  // namespace

void write_header(std::ostream &out, const StreamHeader &header) {
    uint8_t bytes[kStreamHeaderBytes];
    std::memcpy(bytes, kStreamMagic, 8);
    put_le<uint16_t>(bytes + 8, header.version);
    put_le<uint32_t>(bytes + 10, header.detectors_per_cycle);
    put_le<uint16_t>(bytes + 14, header.observables);
    put_le<uint64_t>(bytes + 16, header.cycles_per_shot);
    out.write(reinterpret_cast<const char *>(bytes), sizeof bytes);
}

StreamHeader read_header(std::istream &in) {
    uint8_t bytes[kStreamHeaderBytes];
    in.read(reinterpret_cast<char *>(bytes), sizeof bytes);
    if ((size_t)in.gcount() != sizeof bytes) {
        throw FormatError("stream header truncated at byte offset " + std::to_string(in.gcount()));
    }
    if (std::memcmp(bytes, kStreamMagic, 8) != 0) {
        throw FormatError("bad stream magic at byte offset 0 (expected DETSTRM1)");
    }
    StreamHeader h;
    h.version = get_le<uint16_t>(bytes + 8);
    h.detectors_per_cycle = get_le<uint32_t>(bytes + 10);
    h.observables = get_le<uint16_t>(bytes + 14);
    h.cycles_per_shot = get_le<uint64_t>(bytes + 16);
    if (h.version != kStreamVersion) {
        throw FormatError("unsupported stream version " + std::to_string(h.version) + " at byte offset 8");
    }
    if (h.detectors_per_cycle == 0) {
        throw FormatError("stream header declares zero detectors per cycle (byte offset 10)");
    }
    return h;
}

FrameWriter::FrameWriter(std::ostream &out, const StreamHeader &header)
    : out_(out), header_(header), guarded_(header.unbounded() && header.detectors_per_cycle % 8 == 0) {
    frame_.resize(header_.frame_bytes());
    write_header(out_, header_);
    bytes_ = kStreamHeaderBytes;
}

void FrameWriter::write_cycle(std::span<const uint32_t> fired) {
    if (!header_.unbounded() && cycles_in_shot_ == header_.cycles_per_shot) {
        throw ContractViolation("shot already has its " + std::to_string(header_.cycles_per_shot) + " cycles");
    }
    std::fill(frame_.begin(), frame_.end(), 0);
    for (uint32_t d : fired) {
        if (d >= header_.detectors_per_cycle) {
            throw ContractViolation("detector " + std::to_string(d) + " is outside the cycle");
        }
        frame_[d / 8] |= (uint8_t)(1u << (d % 8));
    }
    out_.write(reinterpret_cast<const char *>(frame_.data()), (std::streamsize)frame_.size());
    bytes_ += frame_.size();
    if (guarded_ && all_ones(frame_)) {
        out_.put(0x00);
        bytes_++;
    }
    cycles_in_shot_++;
}

void FrameWriter::end_shot() {
    if (header_.unbounded()) {
        std::fill(frame_.begin(), frame_.end(), 0xFF);
        out_.write(reinterpret_cast<const char *>(frame_.data()), (std::streamsize)frame_.size());
        bytes_ += frame_.size();
        if (guarded_) {
            out_.put(0x01);
            bytes_++;
        }
    } else if (cycles_in_shot_ != header_.cycles_per_shot) {
        throw ContractViolation(
            "shot ended after " + std::to_string(cycles_in_shot_) + " of " +
            std::to_string(header_.cycles_per_shot) + " cycles");
    }
    cycles_in_shot_ = 0;
}

void FrameWriter::write_shot(const ShotSample &shot) {
    if (shot.detectors_per_cycle != header_.detectors_per_cycle) {
        throw ContractViolation("shot does not match the stream's detectors_per_cycle");
    }
    std::vector<uint32_t> fired;
    auto it = shot.detectors.begin();
    for (uint64_t c = 0; c < shot.num_cycles; c++) {
        fired.clear();
        const DetectorId end = (c + 1) * shot.detectors_per_cycle;
        for (; it != shot.detectors.end() && *it < end; ++it) {
            fired.push_back((uint32_t)(*it - c * shot.detectors_per_cycle));
        }
        write_cycle(fired);
    }
    end_shot();
}

FrameReader::FrameReader(std::istream &in) : in_(in) {
    header_ = read_header(in_);
    guarded_ = header_.unbounded() && header_.detectors_per_cycle % 8 == 0;
    offset_ = kStreamHeaderBytes;
    frame_.resize(header_.frame_bytes());
}

bool FrameReader::read_exact(uint8_t *data, size_t n, const char *what, bool eof_ok) {
    in_.read(reinterpret_cast<char *>(data), (std::streamsize)n);
    const size_t got = (size_t)in_.gcount();
    if (got == n) {
        offset_ += n;
        return true;
    }
    if (got == 0 && eof_ok) {
        return false;
    }
    throw FormatError(
        std::string("truncated ") + what + " at byte offset " + std::to_string(offset_) + ": expected " +
        std::to_string(n) + " bytes, got " + std::to_string(got) + " (shot " + std::to_string(shot_) + ", cycle " +
        std::to_string(cycle_) + ")");
}

FrameKind FrameReader::next(std::vector<uint32_t> &fired) {
    fired.clear();
    if (!header_.unbounded() && cycle_ == header_.cycles_per_shot) {
        cycle_ = 0;
        shot_++;
        return FrameKind::kEndOfShot;
    }
    const uint64_t frame_offset = offset_;
    if (!read_exact(frame_.data(), frame_.size(), "frame", cycle_ == 0)) {
        return FrameKind::kEndOfStream;
    }
    const uint32_t dpc = header_.detectors_per_cycle;
    if (all_ones(frame_)) {
        bool terminator;
        if (guarded_) {
            uint8_t guard;
            read_exact(&guard, 1, "guard byte", false);
            if (guard > 1) {
                throw FormatError("invalid guard byte " + std::to_string(guard) + " at byte offset " +
                                  std::to_string(offset_ - 1));
            }
            terminator = guard == 1;
        } else {
            terminator = dpc % 8 != 0;
        }
        if (terminator) {
            if (!header_.unbounded()) {
                throw FormatError(
                    "terminator inside a bounded shot at byte offset " + std::to_string(frame_offset));
            }
            cycle_ = 0;
            shot_++;
            return FrameKind::kEndOfShot;
        }
    }
    if (dpc % 8 != 0 && (frame_.back() >> (dpc % 8)) != 0) {
        throw FormatError("padding bits set in frame at byte offset " + std::to_string(frame_offset));
    }
    for (uint32_t byte = 0; byte < frame_.size(); byte++) {
        for (uint8_t bits = frame_[byte]; bits != 0; bits &= (uint8_t)(bits - 1)) {
            fired.push_back(byte * 8 + (uint32_t)__builtin_ctz(bits));
        }
    }
    cycle_++;
    return FrameKind::kCycle;
}

std::vector<ShotSample> read_shots(std::istream &in, StreamHeader *header) {
    FrameReader reader(in);
    if (header != nullptr) {
        *header = reader.header();
    }
    std::vector<ShotSample> shots;
    ShotSample current;
    std::vector<uint32_t> fired;
    while (true) {
        const uint64_t cycle = reader.cycle();
        FrameKind kind = reader.next(fired);
        if (kind == FrameKind::kEndOfStream) {
            break;
        }
        if (kind == FrameKind::kEndOfShot) {
            current.shot = shots.size();
            current.num_cycles = cycle;
            current.detectors_per_cycle = reader.header().detectors_per_cycle;
            shots.push_back(std::move(current));
            current = ShotSample{};
            continue;
        }
        for (uint32_t d : fired) {
            current.detectors.push_back(cycle * reader.header().detectors_per_cycle + d);
        }
    }
    return shots;
}

}  // namespace fm
