#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stochsrc/pipeline.hpp"

using namespace stochsrc;

namespace {

struct Flags {
    std::string config;
    std::string out;
    long long seed = -1;
    int threads = 0;
    bool list = false;
};

ExperimentConfig effective_config(const Flags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (!f.out.empty()) c.out_dir = f.out;
    if (f.seed >= 0) c.seed = std::uint64_t(f.seed);
    if (f.threads > 0) c.threads = f.threads;
    validate_config(c);
    return c;
}

int run(const std::string& command, const Flags& f) {
    if (command == "verify" && f.list) {
        for (const auto& c : verify::check_list()) std::cout << c.id << " " << c.name << "\n";
        return 0;
    }
    const ExperimentConfig c = effective_config(f);
    if (command == "sample") pipeline::cmd_sample(c, std::cerr);
    else if (command == "forward") pipeline::cmd_forward(c, std::cerr);
    else if (command == "estimate") pipeline::cmd_estimate(c, std::cerr);
    else if (command == "reconstruct") pipeline::cmd_reconstruct(c, std::cerr);
    else if (command == "verify") {
        const auto v = pipeline::cmd_verify(c, std::cerr);
        std::cout << pipeline::format_table(v.results);
        return v.all_passed ? 0 : 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random sources in attenuating media: sampling, forward solves, moment estimates, inversion"};
    app.require_subcommand(1, 1);
    Flags flags;
    for (const char* name : {"sample", "forward", "estimate", "reconstruct", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", flags.config, "experiment configuration file");
        sub->add_option("--out", flags.out, "output directory (overrides run.out)");
        sub->add_option("--seed", flags.seed, "seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", flags.threads, "worker threads (overrides run.threads)")->check(CLI::PositiveNumber);
        if (std::string(name) == "verify") sub->add_flag("--list", flags.list, "print check names and exit");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, flags);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
