// gcfed command-line runner.
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "gcfed/config.hpp"
#include "gcfed/fl.hpp"
#include "gcfed/partition.hpp"
#include "gcfed/runner.hpp"
#include "gcfed/theory.hpp"

namespace {

using namespace gcfed;

std::string run_label(const ExperimentConfig& cfg) {
    return to_string(cfg.strategy.kind) + "-s" + std::to_string(cfg.seed);
}

int cmd_simulate(const std::string& config, const std::optional<std::string>& out, std::optional<std::size_t> workers) {
    ExperimentConfig cfg = load_config(config);
    if (workers) {
        cfg.workers = *workers;
        cfg.validate();
    }
    const auto dir = make_run_dir(output_root(out), run_label(cfg));
    std::cout << "run directory: " << dir.string() << "\n";
    const auto outcome = simulate_to(cfg, dir, &std::cout);
    if (outcome.summary.final_smoothed_accuracy) {
        std::cout << "final smoothed accuracy: " << format_double(*outcome.summary.final_smoothed_accuracy) << "\n";
    }
    if (outcome.result.aborted) {
        std::cerr << "simulate: aborted after a failed round (fail_policy = abort)\n";
        return 3;
    }
    return 0;
}

int cmd_theory(std::size_t trials, std::uint64_t seed) {
    const auto problem = theory::make_problem({}, seed);
    const Tensor w0 = theory::random_hyperplane_point(problem.shape(), seed + 1);
    std::cout << "eta      gap_before  gap_fedavg  gap_gc      b2_term     residual_bound\n";
    for (double eta : {0.1, 0.5, 1.0}) {
        const auto r = theory::gap_report(problem, w0, eta);
        std::cout << std::fixed << std::setprecision(6) << std::left << std::setw(9) << eta << std::setw(12)
                  << r.gap_before << std::setw(12) << r.gap_after_fedavg << std::setw(12) << r.gap_after_gc
                  << std::setw(12) << r.b2_term << r.residual_bound << "\n";
    }
    std::cout << std::defaultfloat << "\n";
    bool ok = true;
    for (const auto& line : theory::run_theory_suite(trials, seed)) {
        std::cout << (line.passed ? "PASS " : "FAIL ") << std::left << std::setw(40) << line.name
                  << " value=" << format_double(line.value) << " tol=" << format_double(line.tolerance) << "  "
                  << line.detail << "\n";
        ok = ok && line.passed;
    }
    return ok ? 0 : 1;
}

int cmd_partition_stats(const std::string& config) {
    const ExperimentConfig cfg = load_config(config);
    const FederatedData data = prepare_data(cfg);
    const auto st = partition_stats(data.plan);
    std::cout << "client,size,class_entropy,classes\n";
    for (std::size_t k = 0; k < st.sizes.size(); ++k) {
        std::size_t present = 0;
        for (std::size_t c : data.plan.class_histograms[k]) present += c > 0 ? 1 : 0;
        std::cout << k << "," << st.sizes[k] << "," << format_double(st.class_entropy[k]) << "," << present << "\n";
    }
    std::cout << "# clients=" << st.sizes.size() << " min_size=" << st.min_size << " max_size=" << st.max_size
              << " single_class_clients=" << st.single_class_clients
              << " mean_entropy=" << format_double(st.mean_entropy) << " repairs=" << data.plan.repairs << "\n";
    return 0;
}

int cmd_sweep(const std::string& config, const std::string& grid_text, std::size_t seeds,
              const std::optional<std::string>& out) {
    const ExperimentConfig cfg = load_config(config);
    const GridSpec grid = parse_grid(grid_text);
    const auto dir = make_run_dir(output_root(out), "sweep-" + grid.key);
    std::cout << "sweep directory: " << dir.string() << "\n";
    const auto rows = run_sweep(cfg, grid, seeds, dir, &std::cout);
    std::cout << "wrote " << rows.size() << " runs and comparison.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated learning simulator with gradient centralization"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    auto* simulate = app.add_subcommand("simulate", "Run one experiment");
    simulate->add_option("--config", config, "Experiment config file")->required();
    simulate->add_option("--out", out, "Output root (overrides GCFED_OUT)");
    simulate->add_option("--workers", workers, "Client training threads")->check(CLI::PositiveNumber);

    std::size_t trials = 10000;
    std::uint64_t theory_seed = 0;
    auto* theory_cmd = app.add_subcommand("theory-check", "Verify the one-step gap identities on quadratics");
    theory_cmd->add_option("--trials", trials, "Monte-Carlo trials")->check(CLI::Range(2, 100000000));
    theory_cmd->add_option("--seed", theory_seed, "Master seed");

    auto* pstats = app.add_subcommand("partition-stats", "Print the client partition summary");
    pstats->add_option("--config", config, "Experiment config file")->required();

    std::string grid;
    std::size_t seeds = 1;
    auto* sweep = app.add_subcommand("sweep", "Grid of runs over one config key and several seeds");
    sweep->add_option("--config", config, "Experiment config file")->required();
    sweep->add_option("--grid", grid, "key=v1,v2,...")->required();
    sweep->add_option("--seeds", seeds, "Seeds per grid value")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out, "Output root (overrides GCFED_OUT)");

    CLI11_PARSE(app, argc, argv);

    const char* where = "gcfed";
    try {
        if (*simulate) {
            where = "simulate";
            return cmd_simulate(config, out, workers);
        }
        if (*theory_cmd) {
            where = "theory-check";
            return cmd_theory(trials, theory_seed);
        }
        if (*pstats) {
            where = "partition-stats";
            return cmd_partition_stats(config);
        }
        where = "sweep";
        return cmd_sweep(config, grid, seeds, out);
    } catch (const ConfigError& e) {
        std::cerr << where << ": config error: " << e.what() << "\n";
    } catch (const DataError& e) {
        std::cerr << where << ": data error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << where << ": " << e.what() << "\n";
    }
    return 2;
}
