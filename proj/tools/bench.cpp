// bench: run and verify stride-2 transpose-convolution engines.
//
//   bench run --config layers.cfg --verify --format markdown
//   bench gan-suite --verify
//   bench verify --n 5 --size 4 --pad 1
//   bench convert image.ppm image.sct

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ksconv/ksconv.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfigError = 2;

struct RunArgs {
    std::string engine = "both";
    std::size_t repeats = 0;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    bool verify = false;
    std::string format = "markdown";
    std::string out;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--engine", a.engine, "Engines to time: ref, seg or both")
        ->check(CLI::IsMember({"ref", "seg", "both"}));
    cmd->add_option("--repeats", a.repeats, "Timed repeats per engine (overrides config)");
    cmd->add_option("--seed", a.seed, "Seed for synthetic inputs and kernels");
    cmd->add_option("--threads", a.threads, "Worker threads per layer")->check(CLI::PositiveNumber);
    cmd->add_flag("--verify", a.verify, "Compare engine outputs");
    cmd->add_option("--format", a.format, "Report format: json, markdown or csv")
        ->check(CLI::IsMember({"json", "markdown", "md", "csv"}));
    cmd->add_option("--out", a.out, "Write the report here instead of stdout");
}

int run_configs(const std::vector<ksconv::bench::LayerConfig>& configs, const RunArgs& a) {
    using namespace ksconv::bench;
    BenchOptions opts;
    opts.engines = parse_engine_set(a.engine);
    if (a.repeats > 0) opts.repeats = a.repeats;
    opts.seed = a.seed;
    opts.threads = a.threads;
    opts.verify = a.verify;

    const auto report = run_benchmark(configs, opts);
    const auto text = emit_report(report, parse_report_format(a.format));
    if (a.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(a.out);
        if (!f) throw ksconv::FormatError("cannot write " + a.out);
        f << text;
    }
    for (const auto& l : report.layers) {
        if (!l.error.empty()) std::cerr << "error: " << l.config.name << ": " << l.error << "\n";
        else if (l.verified && !l.equivalent)
            std::cerr << "verification failed: " << l.config.name << " (max abs diff " << l.max_abs_diff << ")\n";
    }
    return exit_status(report);
}

int verify_case(std::size_t n, std::size_t size, std::size_t pad, std::size_t c_in, std::size_t c_out,
                std::uint64_t seed) {
    using namespace ksconv;
    const auto input = gen_synthetic(c_in, size, size, seed);
    const auto bank = random_kernel_bank(c_in, c_out, n, seed);
    const auto ref = layer_forward(input, bank, pad, Engine::reference);
    CountingProbe probe;
    const auto seg = layer_forward_segregated(input, SegregatedBank<float>(bank), pad, {}, probe);
    const auto cmp = compare_outputs(ref, seg, 1e-5, 1e-6);
    const TransposeConvSpec spec{size, size, n, pad, c_in, c_out};

    std::cout << "input " << size << "x" << size << "x" << c_in << ", kernel " << n << "x" << n << "x" << c_in << "x"
              << c_out << ", pad " << pad << " -> output " << ref.height() << "x" << ref.width() << "x"
              << ref.channels() << "\n"
              << "mults reference " << mult_count_reference(spec) << ", segregated " << probe.product_count()
              << " (closed form " << mult_count_segregated(spec) << ")\n"
              << "writes " << probe.write_count() << "\n"
              << "max abs diff " << cmp.max_abs_diff << ", max rel diff " << cmp.max_rel_diff << "\n"
              << (cmp.pass ? "PASS" : "FAIL") << "\n";
    return cmp.pass ? kExitOk : kExitVerifyFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stride-2 transpose convolution: reference vs kernel-segregated engines"};
    app.require_subcommand(1);

    RunArgs run_args;
    std::string config_path;
    auto* run = app.add_subcommand("run", "Benchmark layers listed in a config file");
    run->add_option("--config", config_path, "Layer config file")->required();
    add_run_options(run, run_args);

    RunArgs suite_args;
    auto* suite = app.add_subcommand("gan-suite", "Benchmark the built-in GAN generator layers");
    add_run_options(suite, suite_args);

    std::size_t v_n = 0, v_size = 0, v_pad = 0, v_cin = 1, v_cout = 1;
    std::uint64_t v_seed = 42;
    auto* verify = app.add_subcommand("verify", "Check one case of segregated against reference");
    verify->add_option("--n", v_n, "Kernel size")->required();
    verify->add_option("--size", v_size, "Input height and width")->required();
    verify->add_option("--pad", v_pad, "Original padding")->required();
    verify->add_option("--c-in", v_cin, "Input channels");
    verify->add_option("--c-out", v_cout, "Output channels");
    verify->add_option("--seed", v_seed, "Seed");

    std::string ppm_path, sct_path;
    auto* convert = app.add_subcommand("convert", "Convert a binary PPM image to an SCT1 raw tensor");
    convert->add_option("ppm", ppm_path, "Input P6 image")->required();
    convert->add_option("sct", sct_path, "Output tensor")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (*run) {
            std::ifstream f(config_path);
            if (!f) throw ksconv::FormatError("cannot open config " + config_path);
            std::stringstream ss;
            ss << f.rdbuf();
            return run_configs(ksconv::bench::parse_configs(ss.str()), run_args);
        }
        if (*suite) return run_configs(ksconv::bench::gan_suite(), suite_args);
        if (*verify) return verify_case(v_n, v_size, v_pad, v_cin, v_cout, v_seed);
        if (*convert) {
            const auto t = ksconv::load_ppm(ppm_path);
            ksconv::save_raw_tensor(t, sct_path);
            std::cout << "wrote " << sct_path << " (" << t.channels() << "x" << t.height() << "x" << t.width()
                      << ")\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitOk;
}
