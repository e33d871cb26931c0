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


// fusematch: command-line front end for sampling, decoding and analysing
// detection-event streams.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "fusematch/common.h"
#include "fusematch/engine/matcher.h"
#include "fusematch/harness/generators.h"
#include "fusematch/harness/sampler.h"
#include "fusematch/harness/statistics.h"
#include "fusematch/model/matching_graph.h"
#include "fusematch/model/noise_model.h"
#include "fusematch/parallel/pipeline.h"
#include "fusematch/stream/format.h"
#include "fusematch/stream/metrics.h"
#include "fusematch/stream/socket.h"

using nlohmann::json;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kFormat = 2,
    kContract = 3,
};

std::ifstream open_in(const std::string &path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) {
        throw std::invalid_argument("cannot open " + path);
    }
    return in;
}

// Writes to `path`, or to stdout when it is empty or "-".
class Output {
   public:
    explicit Output(const std::string &path, std::ios::openmode mode = std::ios::out) {
        if (!path.empty() && path != "-") {
            file_.open(path, mode | std::ios::trunc);
            if (!file_) {
                throw std::invalid_argument("cannot write " + path);
            }
        }
    }
    std::ostream &stream() {
        return file_.is_open() ? file_ : std::cout;
    }

   private:
    std::ofstream file_;
};

std::vector<json> read_jsonl(const std::string &path) {
    std::ifstream in = open_in(path);
    std::vector<json> out;
    std::string line;
    size_t number = 0;
    while (std::getline(in, line)) {
        number++;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error &e) {
            throw fm::FormatError(path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

fm::PipelineOptions pipeline_options(uint32_t blocks, unsigned workers, bool no_preweights) {
    fm::PipelineOptions o;
    o.block_cycles = blocks;
    o.workers = std::max(1u, workers);
    o.preweights = !no_preweights;
    return o;
}

void check_stream_matches(const fm::StreamHeader &h, const fm::NoiseModel &model) {
    if (h.detectors_per_cycle != model.detectors_per_cycle) {
        throw fm::FormatError(
            "stream has " + std::to_string(h.detectors_per_cycle) + " detectors per cycle, the model has " +
            std::to_string(model.detectors_per_cycle));
    }
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
    std::string code = "repetition";
    uint32_t distance = 5;
    uint64_t cycles = 10;
    double p = 0.01;
    fm::ToySurfaceRates rates;
    std::string out;
};

int run_gen(const GenArgs &a) {
    fm::NoiseModel model;
    if (a.code == "repetition") {
        model = fm::repetition_code_model(a.distance, a.cycles, a.p);
    } else if (a.code == "surface") {
        if (a.distance != 3) {
            throw std::invalid_argument("the built-in surface code model has distance 3");
        }
        model = fm::toy_surface_code_model(a.cycles, a.rates);
    } else {
        throw std::invalid_argument("unknown code family " + a.code);
    }
    Output out(a.out);
    out.stream() << fm::serialize_dem(model);
    return kOk;
}

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
    std::string dem;
    uint64_t shots = 1000;
    uint64_t cycles = 0;
    uint64_t seed = 0;
    std::string out;
    std::string truth;
    bool unbounded = false;
    unsigned threads = 1;
};

int run_sample(const SampleArgs &a) {
    fm::NoiseModel model = fm::read_dem_file(a.dem);
    const uint64_t cycles = a.cycles == 0 ? model.num_cycles() : a.cycles;
    auto samples = fm::sample_shots(model, a.shots, cycles, a.seed, std::max(1u, a.threads));
    fm::StreamHeader h;
    h.detectors_per_cycle = model.detectors_per_cycle;
    h.observables = (uint16_t)model.num_observables;
    h.cycles_per_shot = a.unbounded ? 0 : cycles;
    Output out(a.out, std::ios::binary);
    fm::FrameWriter writer(out.stream(), h);
    for (const auto &s : samples) {
        writer.write_shot(s);
    }
    out.stream().flush();
    if (!a.truth.empty()) {
        Output truth(a.truth);
        for (const auto &s : samples) {
            json j;
            j["shot"] = s.shot;
            j["observables"] = fm::mask_to_hex(s.observables);
            j["cycles"] = s.num_cycles;
            truth.stream() << j.dump() << '\n';
        }
    }
    return kOk;
}

// ---- decode ---------------------------------------------------------------

struct DecodeArgs {
    std::string dem;
    std::string shots;
    bool exact = false;
    uint32_t blocks = 10;
    unsigned workers = 1;
    bool no_preweights = false;
    std::string out;
};

int run_decode(const DecodeArgs &a) {
    fm::NoiseModel model = fm::read_dem_file(a.dem);
    std::ifstream in = open_in(a.shots, std::ios::binary);
    fm::StreamHeader header;
    auto shots = fm::read_shots(in, &header);
    check_stream_matches(header, model);
    Output out(a.out);
    if (a.exact) {
        std::map<uint64_t, std::unique_ptr<fm::ExactDecoder>> decoders;
        for (const auto &s : shots) {
            auto &dec = decoders[s.num_cycles];
            if (!dec) {
                dec = std::make_unique<fm::ExactDecoder>(
                    fm::build_matching_graph(fm::model_for_cycles(model, s.num_cycles)));
            }
            fm::Matching m = dec->decode(s.detectors);
            fm::Prediction p;
            p.shot = s.shot;
            p.observables = m.observables;
            p.weight = m.total_weight;
            out.stream() << fm::emit_prediction(p) << '\n';
        }
        return kOk;
    }
    auto periodic = std::make_shared<const fm::PeriodicModel>(std::move(model));
    auto predictions = fm::decode_shots(periodic, shots, pipeline_options(a.blocks, a.workers, a.no_preweights));
    for (const auto &p : predictions) {
        out.stream() << fm::emit_prediction(p) << '\n';
    }
    return kOk;
}

// ---- stream ---------------------------------------------------------------

struct StreamArgs {
    std::string dem;
    std::string listen;
    bool use_stdin = false;
    uint32_t blocks = 10;
    unsigned workers = 1;
    bool no_preweights = false;
    std::string metrics;
    std::string out;
    double t_input_us = 0;
    double t_output_us = 0;
    double t_control_us = 0;
};

void serve(std::istream &in, const StreamArgs &a) {
    fm::NoiseModel model = fm::read_dem_file(a.dem);
    fm::FrameReader reader(in);
    check_stream_matches(reader.header(), model);
    auto periodic = std::make_shared<const fm::PeriodicModel>(std::move(model));

    std::unique_ptr<Output> metrics_out;
    std::unique_ptr<fm::MetricsSink> sink;
    fm::PipelineOptions options = pipeline_options(a.blocks, a.workers, a.no_preweights);
    if (!a.metrics.empty()) {
        metrics_out = std::make_unique<Output>(a.metrics);
        fm::TimingBudget budget{(int64_t)(a.t_input_us * 1000), (int64_t)(a.t_output_us * 1000),
                                (int64_t)(a.t_control_us * 1000)};
        sink = std::make_unique<fm::MetricsSink>(metrics_out->stream(), budget);
        options.metrics = sink.get();
    }
    Output out(a.out);
    fm::Pipeline pipe(periodic, options, [&](const fm::Prediction &p, const fm::ShotLatency &l) {
        out.stream() << fm::emit_prediction(p, &l) << '\n';
        out.stream().flush();
    });

    const uint64_t per_shot = reader.header().cycles_per_shot;
    bool in_shot = false;
    std::vector<uint32_t> fired;
    for (;;) {
        fm::FrameKind kind = reader.next(fired);
        if (kind == fm::FrameKind::kEndOfStream) {
            break;
        }
        if (!in_shot) {
            pipe.begin_shot(per_shot);
            in_shot = true;
        }
        if (kind == fm::FrameKind::kCycle) {
            pipe.push_cycle(fired);
        } else {
            if (per_shot == 0) {
                pipe.end_shot();
            }
            in_shot = false;
        }
    }
    if (in_shot) {
        throw fm::FormatError("stream ended inside a shot at byte offset " + std::to_string(reader.offset()));
    }
    pipe.finish();
    if (pipe.backlog_alarm()) {
        std::cerr << "warning: decoding fell behind the stream (backlog alarm raised)\n";
    }
}

int run_stream(const StreamArgs &a) {
    if (a.use_stdin == !a.listen.empty()) {
        throw std::invalid_argument("give exactly one of --listen or --stdin");
    }
    if (a.use_stdin) {
        serve(std::cin, a);
        return kOk;
    }
    int fd = fm::tcp_accept_one(a.listen, [](int port, void *) {
        std::cerr << "listening on port " << port << std::endl;
    });
    fm::SocketStreamBuf buf(fd);
    std::istream in(&buf);
    serve(in, a);
    return kOk;
}

// ---- replay ---------------------------------------------------------------

struct ReplayArgs {
    std::string in;
    double rate = 0;
    std::string to;
};

int run_replay(const ReplayArgs &a) {
    if (a.rate < 0) {
        throw std::invalid_argument("--rate must be non-negative");
    }
    std::ifstream file = open_in(a.in, std::ios::binary);
    fm::FrameReader reader(file);
    int fd = fm::tcp_connect(a.to);
    fm::SocketStreamBuf buf(fd);
    std::ostream out(&buf);
    fm::FrameWriter writer(out, reader.header());

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    uint64_t sent = 0;
    std::vector<uint32_t> fired;
    for (;;) {
        fm::FrameKind kind = reader.next(fired);
        if (kind == fm::FrameKind::kEndOfStream) {
            break;
        }
        if (kind == fm::FrameKind::kEndOfShot) {
            writer.end_shot();
            continue;
        }
        if (a.rate > 0) {
            std::this_thread::sleep_until(start + std::chrono::duration<double>((double)sent / a.rate));
        }
        writer.write_cycle(fired);
        out.flush();
        sent++;
    }
    out.flush();
    return kOk;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
    std::string predictions;
    std::string truth;
    double min_cycles = 0;
    bool herald_as_error = false;
    std::string label;
};

int run_fit(const FitArgs &a) {
    // Records pair up line by line, so files for several shot lengths can
    // simply be concatenated; the shot indices must agree.
    const std::vector<json> truth = read_jsonl(a.truth);
    const std::vector<json> predictions = read_jsonl(a.predictions);
    if (truth.size() != predictions.size()) {
        throw fm::FormatError(std::to_string(predictions.size()) + " predictions but " +
                              std::to_string(truth.size()) + " truth records");
    }
    struct Tally {
        uint64_t shots = 0;
        uint64_t errors = 0;
        uint64_t heralded = 0;
    };
    std::map<uint64_t, Tally> by_cycles;
    for (size_t k = 0; k < truth.size(); k++) {
        const json &t = truth[k];
        const json &p = predictions[k];
        if (t.at("shot") != p.at("shot")) {
            throw fm::FormatError("record " + std::to_string(k + 1) + ": prediction is for shot " +
                                  p.at("shot").dump() + ", truth for shot " + t.at("shot").dump());
        }
        Tally &tally = by_cycles[t.at("cycles").get<uint64_t>()];
        const bool wrong = fm::mask_from_hex(p.at("observables").get<std::string>()) !=
                           fm::mask_from_hex(t.at("observables").get<std::string>());
        if (p.value("heralded", false)) {
            tally.heralded++;
            if (a.herald_as_error) {
                tally.shots++;
                tally.errors++;
            }
            continue;
        }
        tally.shots++;
        tally.errors += wrong;
    }
    std::vector<fm::FitPoint> points;
    json per_point = json::array();
    uint64_t heralded = 0;
    for (auto [cycles, t] : by_cycles) {
        heralded += t.heralded;
        if (t.shots == 0) {
            continue;
        }
        const double p_L = (double)t.errors / (double)t.shots;
        points.push_back({(double)cycles, p_L, t.shots});
        per_point.push_back(
            {{"cycles", cycles}, {"shots", t.shots}, {"errors", t.errors}, {"heralded", t.heralded}, {"p_L", p_L}});
    }
    fm::FitOptions options;
    options.min_cycles = a.min_cycles;
    fm::FitResult r = fm::fit_epsilon(points, options);
    json j;
    j["epsilon"] = r.epsilon;
    j["sigma"] = r.sigma;
    j["slope"] = r.slope;
    j["slope_sigma"] = r.slope_sigma;
    j["reduced_chi2"] = r.reduced_chi2;
    j["points_used"] = r.points_used;
    j["label"] = a.label;
    j["heralded"] = heralded;
    j["herald_as_error"] = a.herald_as_error;
    j["points"] = per_point;
    std::cout << j.dump(2) << '\n';
    return kOk;
}

// ---- lambda ---------------------------------------------------------------

int run_lambda(const std::string &path) {
    std::ifstream in = open_in(path);
    json fits;
    try {
        fits = json::parse(in);
    } catch (const json::parse_error &e) {
        throw fm::FormatError(path + ": " + e.what());
    }
    std::vector<fm::LambdaPoint> points;
    for (const auto &f : fits) {
        points.push_back({f.at("distance").get<uint32_t>(), f.at("epsilon").get<double>(), f.value("sigma", 0.0)});
    }
    fm::LambdaResult r = fm::compute_lambda(points);
    json j{{"lambda", r.lambda}, {"delta", r.delta}, {"slope", r.slope}, {"slope_sigma", r.slope_sigma}};
    std::cout << j.dump(2) << '\n';
    return kOk;
}

// ---- bench ----------------------------------------------------------------

json summary(std::vector<int64_t> values) {
    if (values.empty()) {
        return json::object();
    }
    json deciles = json::array();
    for (int k = 1; k <= 9; k++) {
        deciles.push_back(fm::percentile(values, k / 10.0));
    }
    return {{"count", values.size()},
            {"median", fm::percentile(values, 0.5)},
            {"p99", fm::percentile(values, 0.99)},
            {"max", *std::max_element(values.begin(), values.end())},
            {"deciles", deciles}};
}

int run_bench(const std::string &path) {
    std::vector<int64_t> sub_shot;
    std::vector<int64_t> end_of_shot;
    json series = json::array();
    uint64_t alarms = 0;
    for (const auto &j : read_jsonl(path)) {
        const std::string kind = j.at("kind");
        if (kind == "block") {
            const int64_t latency = j.at("sub_shot_latency_ns").get<int64_t>();
            sub_shot.push_back(latency);
            series.push_back({j.at("shot"), j.at("block"), latency, j.value("queue_depth", 0)});
        } else if (kind == "shot") {
            end_of_shot.push_back(j.at("end_of_shot_latency_ns").get<int64_t>());
        } else if (kind == "backlog") {
            alarms++;
        }
    }
    // First and last decile of the block series show whether latency drifts
    // as the stream goes on.
    json drift = json::object();
    if (sub_shot.size() >= 10) {
        const size_t tenth = sub_shot.size() / 10;
        std::vector<int64_t> first(sub_shot.begin(), sub_shot.begin() + (std::ptrdiff_t)tenth);
        std::vector<int64_t> last(sub_shot.end() - (std::ptrdiff_t)tenth, sub_shot.end());
        drift = {{"first_decile_median_ns", fm::percentile(first, 0.5)},
                 {"last_decile_median_ns", fm::percentile(last, 0.5)}};
    }
    json j;
    j["sub_shot_latency_ns"] = summary(sub_shot);
    j["end_of_shot_latency_ns"] = summary(end_of_shot);
    j["drift"] = drift;
    j["backlog_alarms"] = alarms;
    j["series_columns"] = {"shot", "block", "sub_shot_latency_ns", "queue_depth"};
    j["series"] = series;
    std::cout << j.dump() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Streaming block-parallel matching decoder"};
    app.require_subcommand(1);

    GenArgs gen;
    auto *gen_cmd = app.add_subcommand("gen", "Write a built-in noise model as a DEM file");
    gen_cmd->add_option("--code", gen.code, "repetition or surface")->capture_default_str();
    gen_cmd->add_option("--distance", gen.distance)->capture_default_str();
    gen_cmd->add_option("--cycles", gen.cycles)->capture_default_str();
    gen_cmd->add_option("--p", gen.p, "Per-mechanism probability (repetition)")->capture_default_str();
    gen_cmd->add_option("--px", gen.rates.x, "X rate (surface)")->capture_default_str();
    gen_cmd->add_option("--pz", gen.rates.z, "Z rate (surface)")->capture_default_str();
    gen_cmd->add_option("--py", gen.rates.y, "Y rate (surface)")->capture_default_str();
    gen_cmd->add_option("--pm", gen.rates.measurement, "Measurement rate (surface)")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output file (default stdout)");

    SampleArgs sample;
    auto *sample_cmd = app.add_subcommand("sample", "Sample shots into a detection-event stream");
    sample_cmd->add_option("--dem", sample.dem)->required()->check(CLI::ExistingFile);
    sample_cmd->add_option("--shots", sample.shots)->capture_default_str();
    sample_cmd->add_option("--cycles", sample.cycles, "Cycles per shot (default: the model's own)");
    sample_cmd->add_option("--seed", sample.seed)->capture_default_str();
    sample_cmd->add_option("--out", sample.out)->required();
    sample_cmd->add_option("--truth", sample.truth, "JSON lines with the true observables");
    sample_cmd->add_flag("--unbounded", sample.unbounded, "End every shot with a terminator frame");
    sample_cmd->add_option("--threads", sample.threads)->capture_default_str();

    DecodeArgs decode;
    auto *decode_cmd = app.add_subcommand("decode", "Decode a stream file offline");
    decode_cmd->add_option("--dem", decode.dem)->required()->check(CLI::ExistingFile);
    decode_cmd->add_option("--shots", decode.shots)->required()->check(CLI::ExistingFile);
    auto *exact_flag = decode_cmd->add_flag("--exact", decode.exact, "Monolithic decoding of each whole shot");
    decode_cmd->add_option("--blocks", decode.blocks, "Cycles per block")->capture_default_str()->excludes(exact_flag);
    decode_cmd->add_option("--workers", decode.workers)->capture_default_str()->excludes(exact_flag);
    decode_cmd->add_flag("--no-preweights", decode.no_preweights)->excludes(exact_flag);
    decode_cmd->add_option("--out", decode.out, "Predictions file (default stdout)");

    StreamArgs stream;
    auto *stream_cmd = app.add_subcommand("stream", "Decode a live stream from TCP or stdin");
    stream_cmd->add_option("--dem", stream.dem)->required()->check(CLI::ExistingFile);
    stream_cmd->add_option("--listen", stream.listen, "host:port to accept one connection on");
    stream_cmd->add_flag("--stdin", stream.use_stdin);
    stream_cmd->add_option("--blocks", stream.blocks)->capture_default_str();
    stream_cmd->add_option("--workers", stream.workers)->capture_default_str();
    stream_cmd->add_flag("--no-preweights", stream.no_preweights);
    stream_cmd->add_option("--metrics", stream.metrics, "Latency records as JSON lines");
    stream_cmd->add_option("--out", stream.out, "Predictions file (default stdout)");
    stream_cmd->add_option("--t-input-us", stream.t_input_us)->capture_default_str();
    stream_cmd->add_option("--t-output-us", stream.t_output_us)->capture_default_str();
    stream_cmd->add_option("--t-control-us", stream.t_control_us)->capture_default_str();

    ReplayArgs replay;
    auto *replay_cmd = app.add_subcommand("replay", "Send a stream file to a decoder at a fixed cycle rate");
    replay_cmd->add_option("--in", replay.in)->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--rate", replay.rate, "Cycles per second (0 = as fast as possible)")
        ->capture_default_str();
    replay_cmd->add_option("--to", replay.to, "host:port")->required();

    FitArgs fit;
    auto *fit_cmd = app.add_subcommand("fit", "Fit the logical error per cycle");
    fit_cmd->add_option("--predictions", fit.predictions)->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--truth", fit.truth)->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--min-cycles", fit.min_cycles)->capture_default_str();
    fit_cmd->add_flag("--herald-as-error", fit.herald_as_error);
    fit_cmd->add_option("--label", fit.label);

    std::string fits_path;
    auto *lambda_cmd = app.add_subcommand("lambda", "Error suppression factor from per-distance fits");
    lambda_cmd->add_option("--fits", fits_path, "JSON array of {distance, epsilon, sigma}")
        ->required()
        ->check(CLI::ExistingFile);

    std::string metrics_path;
    auto *bench_cmd = app.add_subcommand("bench", "Summarise a latency metrics file");
    bench_cmd->add_option("--metrics", metrics_path)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen_cmd) {
            return run_gen(gen);
        }
        if (*sample_cmd) {
            return run_sample(sample);
        }
        if (*decode_cmd) {
            return run_decode(decode);
        }
        if (*stream_cmd) {
            return run_stream(stream);
        }
        if (*replay_cmd) {
            return run_replay(replay);
        }
        if (*fit_cmd) {
            return run_fit(fit);
        }
        if (*lambda_cmd) {
            return run_lambda(fits_path);
        }
        if (*bench_cmd) {
            return run_bench(metrics_path);
        }
    } catch (const fm::FormatError &e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kFormat;
    } catch (const fm::ContractViolation &e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return kContract;
    } catch (const json::exception &e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kFormat;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
