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

#include "fusematch/model/noise_model.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fm {

namespace {

struct Token {
    std::string_view text;
    size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> tokens;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            i++;
        }
        if (i >= line.size() || line[i] == '#') {
            break;
        }
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') {
            i++;
        }
        tokens.push_back({line.substr(start, i - start), start + 1});
    }
    return tokens;
}

uint64_t parse_uint(const Token &token, std::string_view digits, size_t line, size_t column_offset) {
    uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
        throw DemParseError(
            line, token.column + column_offset, "expected a non-negative integer, got '" + std::string(token.text) + "'");
    }
    return value;
}

void append_probability(std::string &out, double p) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p);
    out.append(buf, ptr);
}

uint64_t min_cycle_of(const ErrorMechanism &m, uint32_t detectors_per_cycle) {
    uint64_t best = UINT64_MAX;
    for (const auto &part : m.parts) {
        best = std::min(best, part.first / detectors_per_cycle);
    }
    return best;
}

uint64_t max_cycle_of(const ErrorMechanism &m, uint32_t detectors_per_cycle) {
    uint64_t best = 0;
    for (const auto &part : m.parts) {
        best = std::max(best, part.first / detectors_per_cycle);
        if (!part.is_boundary()) {
            best = std::max(best, part.second / detectors_per_cycle);
        }
    }
    return best;
}

ErrorMechanism translated(const ErrorMechanism &m, int64_t detector_shift) {
    ErrorMechanism out = m;
    for (auto &part : out.parts) {
        part.first = (DetectorId)((int64_t)part.first + detector_shift);
        if (!part.is_boundary()) {
            part.second = (DetectorId)((int64_t)part.second + detector_shift);
        }
    }
    return out;
}

bool mechanism_less(const ErrorMechanism &a, const ErrorMechanism &b) {
    const auto &pa = a.parts.front();
    const auto &pb = b.parts.front();
    if (pa.first != pb.first) {
        return pa.first < pb.first;
    }
    if (pa.second != pb.second) {
        return pa.second < pb.second;
    }
    if (a.probability != b.probability) {
        return a.probability < b.probability;
    }
    return a.parts < b.parts;
}

}  // namespace

DemParseError::DemParseError(size_t line, size_t column, const std::string &message)
    : FormatError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line(line),
      column(column) {
}

uint64_t NoiseModel::num_cycles() const {
    if (detectors_per_cycle == 0) {
        return 0;
    }
    uint64_t max_detector = 0;
    bool any = false;
    for (const auto &m : mechanisms) {
        for (const auto &part : m.parts) {
            max_detector = std::max(max_detector, part.first);
            if (!part.is_boundary()) {
                max_detector = std::max(max_detector, part.second);
            }
            any = true;
        }
    }
    return any ? max_detector / detectors_per_cycle + 1 : 0;
}

NoiseModel parse_dem(std::string_view text) {
    NoiseModel model;
    bool saw_detectors_per_cycle = false;
    // Observable indices are checked after all headers are known.
    size_t worst_observable_line = 0;
    size_t worst_observable_column = 0;
    uint64_t worst_observable = 0;
    bool any_observable = false;

    size_t line_number = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        line_number++;
        pos = end + 1;

        auto tokens = tokenize(line);
        if (tokens.empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        std::string_view keyword = tokens[0].text;
        if (keyword == "error") {
            if (tokens.size() < 3) {
                throw DemParseError(line_number, tokens[0].column, "error instruction needs a probability and targets");
            }
            ErrorMechanism m;
            const Token &pt = tokens[1];
            auto [ptr, ec] = std::from_chars(pt.text.data(), pt.text.data() + pt.text.size(), m.probability);
            if (ec != std::errc() || ptr != pt.text.data() + pt.text.size()) {
                throw DemParseError(line_number, pt.column, "expected a probability, got '" + std::string(pt.text) + "'");
            }
            if (!(m.probability > 0 && m.probability < 1)) {
                throw DemParseError(
                    line_number, pt.column, "probability " + std::string(pt.text) + " is outside the open interval (0, 1)");
            }

            std::vector<DetectorId> dets;
            ObservableMask obs = 0;
            size_t part_column = tokens[2].column;
            auto close_part = [&](size_t column) {
                if (dets.empty()) {
                    throw DemParseError(line_number, column, "each part needs at least one detector");
                }
                GraphlikePart part;
                part.first = dets[0];
                if (dets.size() == 2) {
                    if (dets[0] == dets[1]) {
                        throw DemParseError(line_number, column, "a part cannot name the same detector twice");
                    }
                    part.first = std::min(dets[0], dets[1]);
                    part.second = std::max(dets[0], dets[1]);
                }
                part.observables = obs;
                m.parts.push_back(part);
                dets.clear();
                obs = 0;
            };
            for (size_t k = 2; k < tokens.size(); k++) {
                const Token &t = tokens[k];
                if (t.text == "^") {
                    close_part(part_column);
                    if (k + 1 == tokens.size()) {
                        throw DemParseError(line_number, t.column, "dangling '^' separator");
                    }
                    part_column = tokens[k + 1].column;
                } else if (t.text[0] == 'D') {
                    if (obs != 0) {
                        throw DemParseError(line_number, t.column, "detectors must precede observables within a part");
                    }
                    if (dets.size() == 2) {
                        throw DemParseError(
                            line_number, t.column, "a part may name at most two detectors; use '^' to decompose");
                    }
                    dets.push_back(parse_uint(t, t.text.substr(1), line_number, 1));
                } else if (t.text[0] == 'L') {
                    uint64_t index = parse_uint(t, t.text.substr(1), line_number, 1);
                    if (index >= kMaxObservables) {
                        throw DemParseError(line_number, t.column, "observable index exceeds 63");
                    }
                    if (!any_observable || index > worst_observable) {
                        worst_observable = index;
                        worst_observable_line = line_number;
                        worst_observable_column = t.column;
                        any_observable = true;
                    }
                    obs ^= ObservableMask{1} << index;
                } else {
                    throw DemParseError(line_number, t.column, "unexpected target '" + std::string(t.text) + "'");
                }
            }
            close_part(part_column);
            model.mechanisms.push_back(std::move(m));
        } else if (
            keyword == "detectors_per_cycle" || keyword == "observables" || keyword == "period" ||
            keyword == "prologue" || keyword == "epilogue") {
            if (tokens.size() != 2) {
                throw DemParseError(line_number, tokens[0].column, std::string(keyword) + " takes exactly one integer");
            }
            uint64_t value = parse_uint(tokens[1], tokens[1].text, line_number, 0);
            if (value > UINT32_MAX) {
                throw DemParseError(line_number, tokens[1].column, "value too large");
            }
            if (keyword == "detectors_per_cycle") {
                if (value == 0) {
                    throw DemParseError(line_number, tokens[1].column, "detectors_per_cycle must be positive");
                }
                model.detectors_per_cycle = (uint32_t)value;
                saw_detectors_per_cycle = true;
            } else if (keyword == "observables") {
                if (value > kMaxObservables) {
                    throw DemParseError(line_number, tokens[1].column, "at most 64 observables are supported");
                }
                model.num_observables = (uint32_t)value;
            } else if (keyword == "period") {
                if (value == 0) {
                    throw DemParseError(line_number, tokens[1].column, "period must be positive");
                }
                model.period = (uint32_t)value;
            } else if (keyword == "prologue") {
                model.prologue_cycles = (uint32_t)value;
            } else {
                model.epilogue_cycles = (uint32_t)value;
            }
        } else {
            throw DemParseError(line_number, tokens[0].column, "unknown instruction '" + std::string(keyword) + "'");
        }
        if (end == text.size()) {
            break;
        }
    }
    if (!saw_detectors_per_cycle) {
        throw DemParseError(1, 1, "missing 'detectors_per_cycle' header");
    }
    if (any_observable && worst_observable >= model.num_observables) {
        throw DemParseError(
            worst_observable_line,
            worst_observable_column,
            "observable L" + std::to_string(worst_observable) + " exceeds declared count " +
                std::to_string(model.num_observables));
    }
    return model;
}

NoiseModel read_dem_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open detector error model '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dem(ss.str());
}

NoiseModel canonicalize(NoiseModel model) {
    for (auto &m : model.mechanisms) {
        std::sort(m.parts.begin(), m.parts.end());
    }
    std::sort(model.mechanisms.begin(), model.mechanisms.end(), mechanism_less);
    return model;
}

std::string serialize_dem(const NoiseModel &model) {
    NoiseModel canon = canonicalize(model);
    std::string out;
    out += "detectors_per_cycle " + std::to_string(canon.detectors_per_cycle) + "\n";
    out += "observables " + std::to_string(canon.num_observables) + "\n";
    out += "period " + std::to_string(canon.period) + "\n";
    out += "prologue " + std::to_string(canon.prologue_cycles) + "\n";
    out += "epilogue " + std::to_string(canon.epilogue_cycles) + "\n";
    for (const auto &m : canon.mechanisms) {
        out += "error ";
        append_probability(out, m.probability);
        for (size_t k = 0; k < m.parts.size(); k++) {
            const auto &part = m.parts[k];
            if (k > 0) {
                out += " ^";
            }
            out += " D" + std::to_string(part.first);
            if (!part.is_boundary()) {
                out += " D" + std::to_string(part.second);
            }
            for (uint32_t b = 0; b < kMaxObservables; b++) {
                if ((part.observables >> b) & 1) {
                    out += " L" + std::to_string(b);
                }
            }
        }
        out += "\n";
    }
    return out;
}

PeriodicModel::PeriodicModel(NoiseModel model) : base_(std::move(model)) {
    if (base_.detectors_per_cycle == 0) {
        throw std::invalid_argument("detectors_per_cycle must be positive");
    }
    base_cycles_ = base_.num_cycles();
    const uint64_t fixed = (uint64_t)base_.prologue_cycles + base_.epilogue_cycles;
    if (base_cycles_ < fixed + base_.period || (base_cycles_ - fixed) % base_.period != 0) {
        throw std::invalid_argument(
            "model spans " + std::to_string(base_cycles_) + " cycles, which is not prologue + epilogue + a whole "
            "positive number of periods");
    }
    by_min_cycle_.resize(base_cycles_);
    for (uint32_t k = 0; k < base_.mechanisms.size(); k++) {
        const auto &m = base_.mechanisms[k];
        uint64_t lo = min_cycle_of(m, base_.detectors_per_cycle);
        uint64_t hi = max_cycle_of(m, base_.detectors_per_cycle);
        by_min_cycle_[lo].push_back(k);
        span_ = std::max<uint32_t>(span_, (uint32_t)(hi - lo));
    }

    auto canonical_at = [&](uint64_t cycle, int64_t shift_cycles) {
        std::vector<ErrorMechanism> ms;
        for (uint32_t k : by_min_cycle_[cycle]) {
            ms.push_back(translated(base_.mechanisms[k], -shift_cycles * (int64_t)base_.detectors_per_cycle));
            std::sort(ms.back().parts.begin(), ms.back().parts.end());
        }
        std::sort(ms.begin(), ms.end(), mechanism_less);
        return ms;
    };
    const uint64_t bulk_begin = base_.prologue_cycles;
    const uint64_t bulk_end = base_cycles_ - base_.epilogue_cycles;
    for (uint64_t c = bulk_begin + base_.period; c < bulk_end; c++) {
        uint64_t t = bulk_begin + (c - bulk_begin) % base_.period;
        if (canonical_at(c, (int64_t)(c - t)) != canonical_at(t, 0)) {
            throw std::invalid_argument(
                "bulk cycle " + std::to_string(c) + " does not repeat the template at cycle " + std::to_string(t));
        }
    }
}

bool PeriodicModel::supports_cycles(uint64_t total_cycles) const {
    const uint64_t fixed = (uint64_t)base_.prologue_cycles + base_.epilogue_cycles;
    return total_cycles >= fixed && (total_cycles - fixed) % base_.period == 0;
}

std::vector<ErrorMechanism> PeriodicModel::mechanisms_in_cycles(
    uint64_t lo, uint64_t hi, uint64_t total_cycles) const {
    if (!supports_cycles(total_cycles)) {
        throw std::invalid_argument(
            std::to_string(total_cycles) + " cycles is not compatible with the model's prologue, epilogue and period");
    }
    std::vector<ErrorMechanism> out;
    const uint64_t epilogue_begin = total_cycles - base_.epilogue_cycles;
    const int64_t dpc = base_.detectors_per_cycle;
    for (uint64_t c = lo; c < std::min(hi, total_cycles); c++) {
        uint64_t source;
        if (c < base_.prologue_cycles) {
            source = c;
        } else if (c >= epilogue_begin) {
            source = c - epilogue_begin + (base_cycles_ - base_.epilogue_cycles);
        } else {
            source = base_.prologue_cycles + (c - base_.prologue_cycles) % base_.period;
        }
        int64_t shift = ((int64_t)c - (int64_t)source) * dpc;
        for (uint32_t k : by_min_cycle_[source]) {
            out.push_back(translated(base_.mechanisms[k], shift));
        }
    }
    return out;
}

NoiseModel PeriodicModel::extrapolate(uint64_t total_cycles) const {
    NoiseModel out;
    out.detectors_per_cycle = base_.detectors_per_cycle;
    out.num_observables = base_.num_observables;
    out.period = base_.period;
    out.prologue_cycles = base_.prologue_cycles;
    out.epilogue_cycles = base_.epilogue_cycles;
    out.mechanisms = mechanisms_in_cycles(0, total_cycles, total_cycles);
    return out;
}

}  // namespace fm
