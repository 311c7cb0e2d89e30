#include "gcfed/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gcfed/metrics.hpp"
#include "gcfed/partition.hpp"

namespace gcfed {

namespace fs = std::filesystem;

RunSummary summarize(std::span<const RoundRecord> records, std::size_t window) {
    RunSummary s;
    if (records.size() < 2) return s;
    std::vector<double> acc;
    acc.reserve(records.size());
    for (const auto& r : records) acc.push_back(r.accuracy);
    const auto fo = first_order_stats(acc);
    s.mean_diff = fo.mean;
    s.std_diff = fo.std;
    s.min_diff = fo.min;
    const auto smooth = moving_average(acc, window);
    double peak = smooth.front();
    for (double v : smooth) peak = std::max(peak, v);
    s.peak_smoothed_accuracy = peak;
    s.final_smoothed_accuracy = smooth.back();
    return s;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string rounds_csv_row(const RoundRecord& rec) {
    std::string row = std::to_string(rec.round) + "," + format_double(rec.accuracy) + "," +
                      format_double(rec.update_norm) + ",";
    if (rec.discrepancy) row += format_double(*rec.discrepancy);
    row += rec.failed ? ",1" : ",0";
    return row;
}

std::string rounds_csv(std::span<const RoundRecord> records) {
    std::string out = std::string(kRoundsCsvHeader) + "\r\n";
    for (const auto& r : records) out += rounds_csv_row(r) + "\r\n";
    return out;
}

std::string round_jsonl(const RoundRecord& rec) {
    nlohmann::json j;
    j["t"] = rec.round;
    j["selected"] = rec.selected;
    j["accuracy"] = rec.accuracy;
    j["update_norm"] = rec.update_norm;
    j["discrepancy"] = rec.discrepancy ? nlohmann::json(*rec.discrepancy) : nlohmann::json(nullptr);
    j["discrepancy_cosine"] =
        rec.discrepancy_cosine ? nlohmann::json(*rec.discrepancy_cosine) : nlohmann::json(nullptr);
    j["cka"] = rec.cka;
    j["failed"] = rec.failed;
    if (rec.failed) j["failure"] = rec.failure;
    j["wall_ms"] = rec.wall_ms;
    return j.dump();
}

std::string summary_json(const RunSummary& s) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["mean_diff"] = opt(s.mean_diff);
    j["std_diff"] = opt(s.std_diff);
    j["min_diff"] = opt(s.min_diff);
    j["peak_smoothed_accuracy"] = opt(s.peak_smoothed_accuracy);
    j["final_smoothed_accuracy"] = opt(s.final_smoothed_accuracy);
    return j.dump(2) + "\n";
}

fs::path output_root(const std::optional<std::string>& cli_out) {
    if (cli_out && !cli_out->empty()) return *cli_out;
    if (const char* env = std::getenv("GCFED_OUT"); env && *env) return env;
    return "runs";
}

fs::path make_run_dir(const fs::path& root, const std::string& label) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    const std::string base = std::string(stamp) + "-" + label;
    fs::create_directories(root);
    fs::path dir = root / base;
    for (int i = 1; !fs::create_directory(dir); ++i) dir = root / (base + "-" + std::to_string(i));
    return dir;
}

ExperimentConfig resolved_config(const ExperimentConfig& cfg, double resolved_lambda) {
    ExperimentConfig out = cfg;
    if (cfg.strategy.kind == StrategyKind::GCFed) out.strategy.lambda = resolved_lambda;
    return out;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void log_partition(std::ostream& log, const PartitionPlan& plan) {
    const auto st = partition_stats(plan);
    log << "partition: clients=" << plan.num_clients() << " alpha=" << format_double(plan.alpha)
        << " repairs=" << plan.repairs << " min_size=" << st.min_size << " max_size=" << st.max_size
        << " single_class_clients=" << st.single_class_clients << " mean_entropy=" << format_double(st.mean_entropy)
        << "\n";
}

}  // namespace

SimulationOutcome simulate_to(const ExperimentConfig& cfg, const fs::path& run_dir, std::ostream* progress) {
    cfg.validate();
    fs::create_directories(run_dir);
    const FederatedData data = prepare_data(cfg);

    std::ofstream log(run_dir / "run.log");
    log << "init: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, seed " << cfg.seed << "\n";
    log << "data: train=" << data.train.size() << " test=" << data.test.size()
        << " classes=" << data.train.num_classes << "\n";
    log_partition(log, data.plan);

    std::ofstream csv(run_dir / "rounds.csv", std::ios::binary);
    std::ofstream jsonl(run_dir / "rounds.jsonl", std::ios::binary);
    if (!csv || !jsonl) throw std::runtime_error("cannot write outputs in " + run_dir.string());
    csv << kRoundsCsvHeader << "\r\n";

    SimulationOutcome out;
    out.run_dir = run_dir;
    out.result = run_experiment(cfg, data, [&](const RoundRecord& rec) {
        csv << rounds_csv_row(rec) << "\r\n";
        jsonl << round_jsonl(rec) << "\n";
        csv.flush();
        jsonl.flush();
        if (rec.failed) log << "round " << rec.round << " failed: " << rec.failure << "\n";
        if (progress && (rec.round % 10 == 0 || rec.round == cfg.rounds || rec.failed)) {
            *progress << "round " << rec.round << "/" << cfg.rounds << " acc " << format_double(rec.accuracy)
                      << (rec.failed ? " (failed)" : "") << "\n";
        }
    });
    log << "resolved lambda: " << format_double(out.result.resolved_lambda) << "\n";
    if (out.result.aborted) log << "aborted after round " << out.result.records.size() << "\n";

    out.summary = summarize(out.result.records);
    write_file(run_dir / "summary.json", summary_json(out.summary));
    save_config(resolved_config(cfg, out.result.resolved_lambda), run_dir / "config.resolved");
    return out;
}

GridSpec parse_grid(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw ConfigError("grid must look like key=v1,v2,... (got '" + text + "')");
    }
    GridSpec g;
    g.key = text.substr(0, eq);
    std::stringstream ss(text.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) {
        if (v.empty()) throw ConfigError("grid '" + text + "' has an empty value");
        g.values.push_back(v);
    }
    return g;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const GridSpec& grid, std::size_t seeds,
                                const fs::path& sweep_dir, std::ostream* progress) {
    if (seeds < 1) throw ConfigError("sweep: --seeds must be >= 1");
    // Check every grid value before spending time on any run.
    std::vector<ExperimentConfig> configs;
    for (const auto& v : grid.values) {
        ExperimentConfig c = base;
        apply_setting(c, grid.key, v);
        c.validate();
        configs.push_back(std::move(c));
    }
    fs::create_directories(sweep_dir);
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        for (std::size_t s = 0; s < seeds; ++s) {
            ExperimentConfig c = configs[i];
            c.seed = base.seed + s;
            const fs::path dir = sweep_dir / (grid.key + "=" + grid.values[i]) / ("seed" + std::to_string(c.seed));
            if (progress) *progress << "sweep " << grid.key << "=" << grid.values[i] << " seed " << c.seed << "\n";
            auto outcome = simulate_to(c, dir);
            SweepRow row{grid.values[i], c.seed, dir, outcome.summary, 0};
            for (const auto& r : outcome.result.records) row.failed_rounds += r.failed ? 1 : 0;
            rows.push_back(std::move(row));
        }
    }

    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::string csv = "key,value,seed,final_smoothed_accuracy,peak_smoothed_accuracy,mean_diff,std_diff,min_diff,"
                      "failed_rounds,run_dir\r\n";
    for (const auto& r : rows) {
        csv += csv_field(grid.key) + "," + csv_field(r.value) + "," + std::to_string(r.seed) + "," +
               opt(r.summary.final_smoothed_accuracy) + "," + opt(r.summary.peak_smoothed_accuracy) + "," +
               opt(r.summary.mean_diff) + "," + opt(r.summary.std_diff) + "," + opt(r.summary.min_diff) + "," +
               std::to_string(r.failed_rounds) + "," + csv_field(fs::relative(r.run_dir, sweep_dir).string()) +
               "\r\n";
    }
    write_file(sweep_dir / "comparison.csv", csv);
    return rows;
}

}  // namespace gcfed
