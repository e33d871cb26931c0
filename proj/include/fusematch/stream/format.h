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


#ifndef FUSEMATCH_STREAM_FORMAT_H
#define FUSEMATCH_STREAM_FORMAT_H

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "fusematch/harness/sampler.h"

namespace fm {

inline constexpr char kStreamMagic[8] = {'D', 'E', 'T', 'S', 'T', 'R', 'M', '1'};
inline constexpr uint16_t kStreamVersion = 1;
inline constexpr size_t kStreamHeaderBytes = 24;

/// Fixed 24-byte little-endian preamble of a detection-event stream.
struct StreamHeader {
    uint16_t version = kStreamVersion;
    uint32_t detectors_per_cycle = 0;
    uint16_t observables = 0;
    /// Cycles in every shot; 0 means each shot ends with a terminator frame.
    uint64_t cycles_per_shot = 0;

    size_t frame_bytes() const {
        return (detectors_per_cycle + 7) / 8;
    }
    bool unbounded() const {
        return cycles_per_shot == 0;
    }
    bool operator==(const StreamHeader &other) const = default;
};

void write_header(std::ostream &out, const StreamHeader &header);
/// Throws FormatError on a bad magic, unknown version or short read.
StreamHeader read_header(std::istream &in);

/// Writes cycle frames: bit i of the frame is detector i of the cycle,
/// least significant bit first within each byte.
///
/// In unbounded streams a frame of all 0xFF ends the shot. When
/// detectors_per_cycle is a multiple of 8 such a frame could also be data,
/// so there every all-0xFF frame carries one guard byte: 0x00 for data,
/// 0x01 for the terminator. Otherwise the padding bits make it unambiguous.
class FrameWriter {
   public:
    FrameWriter(std::ostream &out, const StreamHeader &header);

    /// `fired` holds cycle-local detector indices.
    void write_cycle(std::span<const uint32_t> fired);
    /// Ends the current shot. Writes the terminator in unbounded streams and
    /// checks the cycle count in bounded ones.
    void end_shot();
    /// Writes every cycle of `shot` followed by end_shot().
    void write_shot(const ShotSample &shot);

    uint64_t bytes_written() const {
        return bytes_;
    }

   private:
    std::ostream &out_;
    StreamHeader header_;
    bool guarded_;
    uint64_t cycles_in_shot_ = 0;
    uint64_t bytes_ = 0;
    std::vector<uint8_t> frame_;
};

enum class FrameKind : uint8_t {
    kCycle,
    kEndOfShot,
    kEndOfStream,
};

class FrameReader {
   public:
    /// Reads and validates the header.
    explicit FrameReader(std::istream &in);

    const StreamHeader &header() const {
        return header_;
    }
    /// Next item of the stream. For kCycle, `fired` receives the cycle-local
    /// indices of the fired detectors, ascending. Framing errors throw
    /// FormatError naming the byte offset.
    FrameKind next(std::vector<uint32_t> &fired);

    /// Bytes consumed so far, header included.
    uint64_t offset() const {
        return offset_;
    }
    uint64_t shot() const {
        return shot_;
    }
    /// Cycles of the current shot read so far.
    uint64_t cycle() const {
        return cycle_;
    }

   private:
    bool read_exact(uint8_t *data, size_t n, const char *what, bool eof_ok);

    std::istream &in_;
    StreamHeader header_;
    bool guarded_;
    uint64_t offset_ = 0;
    uint64_t shot_ = 0;
    uint64_t cycle_ = 0;
    std::vector<uint8_t> frame_;
};

/// Reads a whole stream of shots back into samples.
std::vector<ShotSample> read_shots(std::istream &in, StreamHeader *header = nullptr);

}  // namespace fm

#endif  // FUSEMATCH_STREAM_FORMAT_H
