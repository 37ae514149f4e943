#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ksconv/analysis.hpp"
#include "ksconv/engines.hpp"
#include "ksconv/error.hpp"
#include "ksconv/synthetic.hpp"

namespace ksconv::bench {

struct LayerConfig {
    std::string name;
    std::size_t input_h = 0;
    std::size_t input_w = 0;
    std::size_t c_in = 0;
    std::size_t kernel_n = 0;
    std::size_t c_out = 0;
    std::size_t pad = 2;
    std::size_t repeats = 1;

    TransposeConvSpec spec() const { return {input_h, input_w, kernel_n, pad, c_in, c_out}; }

    friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

/// Transpose-convolution layers of four GAN generators (DC-GAN, ArtGAN,
/// GP-GAN, EB-GAN), all with stride 2, 4×4 kernels and padding 2. The
/// ArtGAN layer-4 bank takes its input-channel count from the layer input
/// (128).
inline std::vector<LayerConfig> gan_suite() {
    auto layer = [](std::string name, std::size_t n, std::size_t c_in, std::size_t c_out) {
        return LayerConfig{std::move(name), n, n, c_in, 4, c_out, 2, 1};
    };
    return {
        layer("DC-GAN/2", 4, 1024, 512),  layer("DC-GAN/3", 8, 512, 256),   layer("DC-GAN/4", 16, 256, 128),
        layer("DC-GAN/5", 32, 128, 3),    layer("ArtGAN/2", 4, 512, 256),   layer("ArtGAN/3", 8, 256, 128),
        layer("ArtGAN/4", 16, 128, 128),  layer("ArtGAN/6", 32, 128, 3),    layer("GP-GAN/2", 4, 512, 256),
        layer("GP-GAN/3", 8, 256, 128),   layer("GP-GAN/4", 16, 128, 64),   layer("GP-GAN/5", 32, 64, 3),
        layer("EB-GAN/2", 4, 2048, 1024), layer("EB-GAN/3", 8, 1024, 512),  layer("EB-GAN/4", 16, 512, 256),
        layer("EB-GAN/5", 32, 256, 128),  layer("EB-GAN/6", 64, 128, 64),   layer("EB-GAN/7", 128, 64, 64),
    };
}

/// Parses layer configs written as blocks of `key = value` lines separated by
/// blank lines. Keys: name, input_h, input_w, c_in, kernel_n, c_out, pad,
/// repeats (pad defaults to 2, repeats to 1). '#' starts a comment.
inline std::vector<LayerConfig> parse_configs(std::string_view text) {
    std::vector<LayerConfig> out;
    std::map<std::string, std::string> block;
    std::size_t line_no = 0, block_line = 0;

    auto trim = [](std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return std::string_view{};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    auto number = [&](const std::string& key, const std::string& value) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(value, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != value.size() || value.empty() || value.front() == '-')
            throw FormatError("config line " + std::to_string(block_line) + ": '" + key +
                              "' must be a non-negative integer, got '" + value + "'");
        return static_cast<std::size_t>(v);
    };
    auto flush = [&] {
        if (block.empty()) return;
        LayerConfig c;
        for (const char* key : {"name", "input_h", "input_w", "c_in", "kernel_n", "c_out"})
            if (!block.contains(key))
                throw FormatError("config block at line " + std::to_string(block_line) + ": missing key '" + key + "'");
        c.name = block["name"];
        c.input_h = number("input_h", block["input_h"]);
        c.input_w = number("input_w", block["input_w"]);
        c.c_in = number("c_in", block["c_in"]);
        c.kernel_n = number("kernel_n", block["kernel_n"]);
        c.c_out = number("c_out", block["c_out"]);
        if (block.contains("pad")) c.pad = number("pad", block["pad"]);
        if (block.contains("repeats")) c.repeats = number("repeats", block["repeats"]);
        out.push_back(std::move(c));
        block.clear();
    };

    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find('\n', start), text.size());
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            flush();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw FormatError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        static constexpr std::string_view known[] = {"name", "input_h", "input_w", "c_in",
                                                     "kernel_n", "c_out", "pad", "repeats"};
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (block.empty()) block_line = line_no;
        if (block.contains(key))
            throw FormatError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        block[key] = value;
    }
    flush();
    return out;
}

struct EngineSet {
    bool reference = true;
    bool segregated = true;
};

inline EngineSet parse_engine_set(std::string_view s) {
    if (s == "ref") return {true, false};
    if (s == "seg") return {false, true};
    if (s == "both") return {true, true};
    throw FormatError("unknown engine set '" + std::string(s) + "' (expected ref, seg or both)");
}

inline std::string to_string(EngineSet e) {
    return e.reference && e.segregated ? "both" : e.reference ? "ref" : "seg";
}

struct BenchOptions {
    EngineSet engines;
    /// Overrides every config's repeat count when set.
    std::optional<std::size_t> repeats;
    unsigned threads = 1;
    std::uint64_t seed = 42;
    bool verify = false;
    double rel_tol = 1e-5;
    double abs_tol = 1e-6;
};

struct LayerRecord {
    LayerConfig config;
    std::size_t output_h = 0;
    std::size_t output_w = 0;
    std::optional<double> time_ref_s;
    std::optional<double> time_seg_s;
    std::optional<double> speedup;
    std::uint64_t mults_ref = 0;
    std::uint64_t mults_seg = 0;
    std::uint64_t mem_upsampled_total = 0;
    std::uint64_t mem_upsampled_minus_input = 0;
    bool verified = false;
    bool equivalent = false;
    double max_abs_diff = 0.0;
    double max_rel_diff = 0.0;
    /// FNV-1a over the output bytes of each engine that ran.
    std::optional<std::uint64_t> checksum_ref;
    std::optional<std::uint64_t> checksum_seg;
    std::string error;
};

struct BenchReport {
    std::size_t element_bytes = kDefaultElementBytes;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::string engines = "both";
    std::vector<LayerRecord> layers;
};

inline std::uint64_t fnv1a(std::span<const float> values) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (float v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

/// Runs `fn` once untimed, then `repeats` more times, and returns the
/// warm-up result together with the median of the timed runs in seconds.
template <typename Fn>
std::pair<ChannelTensor<float>, double> time_median(Fn&& fn, std::size_t repeats) {
    using clock = std::chrono::steady_clock;
    ChannelTensor<float> result = fn();
    std::vector<double> samples;
    samples.reserve(repeats);
    for (std::size_t i = 0; i < repeats; ++i) {
        const auto t0 = clock::now();
        const auto out = fn();
        const auto t1 = clock::now();
        samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t m = samples.size();
    const double median = m % 2 ? samples[m / 2] : 0.5 * (samples[m / 2 - 1] + samples[m / 2]);
    return {std::move(result), median};
}

inline LayerRecord run_layer(const LayerConfig& cfg, const BenchOptions& opts) {
    LayerRecord rec;
    rec.config = cfg;
    if (opts.repeats) rec.config.repeats = *opts.repeats;
    try {
        const auto spec = cfg.spec();
        const auto dims = output_dims(spec);
        if (rec.config.repeats == 0) throw InvalidSpecError("repeats must be at least 1");
        rec.output_h = dims.rows;
        rec.output_w = dims.cols;
        rec.mults_ref = mult_count_reference(spec);
        rec.mults_seg = mult_count_segregated(spec);
        rec.mem_upsampled_total = memory_savings_bytes(cfg.input_h, cfg.input_w, cfg.pad, cfg.c_in,
                                                       SavingsMode::upsampled_total);
        rec.mem_upsampled_minus_input = memory_savings_bytes(cfg.input_h, cfg.input_w, cfg.pad, cfg.c_in,
                                                             SavingsMode::upsampled_minus_input);
        if (cfg.kernel_n < 2) throw InvalidSpecError("kernel_n must be at least 2");

        const auto input = gen_synthetic(cfg.c_in, cfg.input_h, cfg.input_w, opts.seed);
        const auto bank = random_kernel_bank(cfg.c_in, cfg.c_out, cfg.kernel_n, opts.seed);
        const SegregatedBank<float> seg_bank(bank);
        const ExecOptions exec{opts.threads};
        auto run_ref = [&] { return layer_forward_reference(input, bank, cfg.pad, exec); };
        auto run_seg = [&] { return layer_forward_segregated(input, seg_bank, cfg.pad, exec); };

        std::optional<ChannelTensor<float>> out_ref, out_seg;
        if (opts.engines.reference) {
            auto [out, t] = time_median(run_ref, rec.config.repeats);
            out_ref = std::move(out);
            rec.time_ref_s = t;
        }
        if (opts.engines.segregated) {
            auto [out, t] = time_median(run_seg, rec.config.repeats);
            out_seg = std::move(out);
            rec.time_seg_s = t;
        }
        if (rec.time_ref_s && rec.time_seg_s && *rec.time_seg_s > 0.0)
            rec.speedup = *rec.time_ref_s / *rec.time_seg_s;
        if (opts.verify) {
            if (!out_ref) out_ref = run_ref();
            if (!out_seg) out_seg = run_seg();
            const auto cmp = compare_outputs(*out_ref, *out_seg, opts.rel_tol, opts.abs_tol);
            rec.verified = true;
            rec.equivalent = cmp.pass;
            rec.max_abs_diff = cmp.max_abs_diff;
            rec.max_rel_diff = cmp.max_rel_diff;
        }
        if (out_ref) rec.checksum_ref = fnv1a(out_ref->data());
        if (out_seg) rec.checksum_seg = fnv1a(out_seg->data());
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

/// Runs every config in order; a failing config is recorded, not fatal.
inline BenchReport run_benchmark(const std::vector<LayerConfig>& configs, const BenchOptions& opts) {
    BenchReport report;
    report.threads = opts.threads;
    report.seed = opts.seed;
    report.engines = to_string(opts.engines);
    for (const auto& cfg : configs) report.layers.push_back(run_layer(cfg, opts));
    return report;
}

/// 0 on success, 1 if any verification failed, 2 if any config errored.
inline int exit_status(const BenchReport& report) {
    bool failed = false;
    for (const auto& l : report.layers) {
        if (!l.error.empty()) return 2;
        if (l.verified && !l.equivalent) failed = true;
    }
    return failed ? 1 : 0;
}

enum class ReportFormat { json, markdown, csv };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "json") return ReportFormat::json;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    if (s == "csv") return ReportFormat::csv;
    throw FormatError("unknown report format '" + std::string(s) + "'");
}

inline constexpr const char* kReportSchema = "ksconv.bench.v1";

namespace detail {

using nlohmann::json;

template <typename T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> json_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string group_digits(std::uint64_t v) {
    auto s = std::to_string(v);
    for (int i = int(s.size()) - 3; i > 0; i -= 3) s.insert(std::size_t(i), ",");
    return s;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> csv_split(std::string_view line) {
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cells.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back();
        } else {
            cells.back() += c;
        }
    }
    return cells;
}

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {
        "layer",       "input_h",       "input_w",       "c_in",          "kernel_n",
        "c_out",       "pad",           "repeats",       "output_h",      "output_w",
        "time_ref_s",  "time_seg_s",    "speedup",       "mults_ref",     "mults_seg",
        "mem_upsampled_total",          "mem_upsampled_minus_input",      "verified",
        "equivalent",  "max_abs_diff",  "max_rel_diff",  "checksum_ref",  "checksum_seg",
        "error"};
    return cols;
}

} // namespace detail

inline nlohmann::json report_to_json(const BenchReport& r) {
    using detail::json;
    using detail::opt_json;
    json layers = json::array();
    for (const auto& l : r.layers) {
        layers.push_back({
            {"name", l.config.name},
            {"input_h", l.config.input_h},
            {"input_w", l.config.input_w},
            {"c_in", l.config.c_in},
            {"kernel_n", l.config.kernel_n},
            {"c_out", l.config.c_out},
            {"pad", l.config.pad},
            {"repeats", l.config.repeats},
            {"output_h", l.output_h},
            {"output_w", l.output_w},
            {"time_ref_s", opt_json(l.time_ref_s)},
            {"time_seg_s", opt_json(l.time_seg_s)},
            {"speedup", opt_json(l.speedup)},
            {"mults_ref", l.mults_ref},
            {"mults_seg", l.mults_seg},
            {"mem_upsampled_total", l.mem_upsampled_total},
            {"mem_upsampled_minus_input", l.mem_upsampled_minus_input},
            {"verified", l.verified},
            {"equivalent", l.equivalent},
            {"max_abs_diff", l.max_abs_diff},
            {"max_rel_diff", l.max_rel_diff},
            {"checksum_ref", opt_json(l.checksum_ref)},
            {"checksum_seg", opt_json(l.checksum_seg)},
            {"error", l.error},
        });
    }
    return {
        {"schema", kReportSchema},
        {"environment",
         {{"element_bytes", r.element_bytes}, {"threads", r.threads}, {"seed", r.seed}, {"engines", r.engines}}},
        {"layers", std::move(layers)},
    };
}

inline BenchReport report_from_json(const nlohmann::json& j) {
    using detail::json_opt;
    if (j.value("schema", "") != std::string(kReportSchema)) throw FormatError("report: unknown schema");
    BenchReport r;
    const auto& env = j.at("environment");
    r.element_bytes = env.at("element_bytes").get<std::size_t>();
    r.threads = env.at("threads").get<unsigned>();
    r.seed = env.at("seed").get<std::uint64_t>();
    r.engines = env.at("engines").get<std::string>();
    for (const auto& l : j.at("layers")) {
        LayerRecord rec;
        rec.config.name = l.at("name").get<std::string>();
        rec.config.input_h = l.at("input_h").get<std::size_t>();
        rec.config.input_w = l.at("input_w").get<std::size_t>();
        rec.config.c_in = l.at("c_in").get<std::size_t>();
        rec.config.kernel_n = l.at("kernel_n").get<std::size_t>();
        rec.config.c_out = l.at("c_out").get<std::size_t>();
        rec.config.pad = l.at("pad").get<std::size_t>();
        rec.config.repeats = l.at("repeats").get<std::size_t>();
        rec.output_h = l.at("output_h").get<std::size_t>();
        rec.output_w = l.at("output_w").get<std::size_t>();
        rec.time_ref_s = json_opt<double>(l, "time_ref_s");
        rec.time_seg_s = json_opt<double>(l, "time_seg_s");
        rec.speedup = json_opt<double>(l, "speedup");
        rec.mults_ref = l.at("mults_ref").get<std::uint64_t>();
        rec.mults_seg = l.at("mults_seg").get<std::uint64_t>();
        rec.mem_upsampled_total = l.at("mem_upsampled_total").get<std::uint64_t>();
        rec.mem_upsampled_minus_input = l.at("mem_upsampled_minus_input").get<std::uint64_t>();
        rec.verified = l.at("verified").get<bool>();
        rec.equivalent = l.at("equivalent").get<bool>();
        rec.max_abs_diff = l.at("max_abs_diff").get<double>();
        rec.max_rel_diff = l.at("max_rel_diff").get<double>();
        rec.checksum_ref = json_opt<std::uint64_t>(l, "checksum_ref");
        rec.checksum_seg = json_opt<std::uint64_t>(l, "checksum_seg");
        rec.error = l.at("error").get<std::string>();
        r.layers.push_back(std::move(rec));
    }
    return r;
}

inline std::string emit_csv(const BenchReport& r) {
    using namespace detail;
    std::ostringstream os;
    os << "# element_bytes=" << r.element_bytes << " threads=" << r.threads << " seed=" << r.seed
       << " engines=" << r.engines << "\n";
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    auto opt_d = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    auto opt_u = [](const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& l : r.layers) {
        const auto& c = l.config;
        os << csv_escape(c.name) << ',' << c.input_h << ',' << c.input_w << ',' << c.c_in << ',' << c.kernel_n << ','
           << c.c_out << ',' << c.pad << ',' << c.repeats << ',' << l.output_h << ',' << l.output_w << ','
           << opt_d(l.time_ref_s) << ',' << opt_d(l.time_seg_s) << ',' << opt_d(l.speedup) << ',' << l.mults_ref
           << ',' << l.mults_seg << ',' << l.mem_upsampled_total << ',' << l.mem_upsampled_minus_input << ','
           << (l.verified ? "true" : "false") << ',' << (l.equivalent ? "true" : "false") << ','
           << fmt_double(l.max_abs_diff) << ',' << fmt_double(l.max_rel_diff) << ',' << opt_u(l.checksum_ref) << ','
           << opt_u(l.checksum_seg) << ',' << csv_escape(l.error) << "\n";
    }
    return os.str();
}

inline BenchReport report_from_csv(std::string_view text) {
    using namespace detail;
    BenchReport r;
    std::istringstream is{std::string(text)};
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw FormatError("csv report: missing environment line");
    {
        std::istringstream env(line.substr(2));
        std::string kv;
        while (env >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw FormatError("csv report: bad environment entry '" + kv + "'");
            const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
            if (key == "element_bytes") r.element_bytes = std::stoull(value);
            else if (key == "threads") r.threads = static_cast<unsigned>(std::stoul(value));
            else if (key == "seed") r.seed = std::stoull(value);
            else if (key == "engines") r.engines = value;
        }
    }
    if (!std::getline(is, line) || csv_split(line) != csv_columns()) throw FormatError("csv report: bad header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = csv_split(line);
        if (cells.size() != csv_columns().size()) throw FormatError("csv report: wrong column count");
        std::size_t i = 0;
        auto u = [&] { return static_cast<std::uint64_t>(std::stoull(cells[i++])); };
        auto d = [&] { return std::strtod(cells[i++].c_str(), nullptr); };
        auto od = [&]() -> std::optional<double> {
            const auto& s = cells[i++];
            if (s.empty()) return std::nullopt;
            return std::strtod(s.c_str(), nullptr);
        };
        auto ou = [&]() -> std::optional<std::uint64_t> {
            const auto& s = cells[i++];
            if (s.empty()) return std::nullopt;
            return std::stoull(s);
        };
        auto b = [&] { return cells[i++] == "true"; };
        LayerRecord l;
        l.config.name = cells[i++];
        l.config.input_h = u();
        l.config.input_w = u();
        l.config.c_in = u();
        l.config.kernel_n = u();
        l.config.c_out = u();
        l.config.pad = u();
        l.config.repeats = u();
        l.output_h = u();
        l.output_w = u();
        l.time_ref_s = od();
        l.time_seg_s = od();
        l.speedup = od();
        l.mults_ref = u();
        l.mults_seg = u();
        l.mem_upsampled_total = u();
        l.mem_upsampled_minus_input = u();
        l.verified = b();
        l.equivalent = b();
        l.max_abs_diff = d();
        l.max_rel_diff = d();
        l.checksum_ref = ou();
        l.checksum_seg = ou();
        l.error = cells[i++];
        r.layers.push_back(std::move(l));
    }
    return r;
}

inline std::string emit_markdown(const BenchReport& r) {
    using namespace detail;
    std::ostringstream os;
    os << "| layer | input size | kernel size | time_ref (s) | time_seg (s) | speedup | mults_ref | mults_seg "
          "| memory savings (bytes) |\n";
    os << "|---|---|---|---:|---:|---:|---:|---:|---:|\n";
    auto opt = [](const std::optional<double>& v, int digits) { return v ? fmt_fixed(*v, digits) : std::string("-"); };
    for (const auto& l : r.layers) {
        const auto& c = l.config;
        os << "| " << c.name << " | " << c.input_h << "x" << c.input_w << "x" << c.c_in << " | " << c.kernel_n << "x"
           << c.kernel_n << "x" << c.c_in << "x" << c.c_out << " | " << opt(l.time_ref_s, 6) << " | "
           << opt(l.time_seg_s, 6) << " | " << opt(l.speedup, 3) << " | " << group_digits(l.mults_ref) << " | "
           << group_digits(l.mults_seg) << " | " << group_digits(l.mem_upsampled_total) << " |\n";
    }
    return os.str();
}

inline std::string emit_report(const BenchReport& r, ReportFormat format) {
    switch (format) {
    case ReportFormat::json: return report_to_json(r).dump(2) + "\n";
    case ReportFormat::markdown: return emit_markdown(r);
    case ReportFormat::csv: return emit_csv(r);
    }
    return {};
}

} // namespace ksconv::bench
