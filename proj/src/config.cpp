#include "gcfed/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gcfed {

std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw ConfigError("config key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) bad_value(key, v, "expected integer >= 0");
    errno = 0;
    const unsigned long long out = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) bad_value(key, v, "out of range");
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(parse_u64(key, v));
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(out)) {
        bad_value(key, v, "expected a finite number");
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
    return out;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

template <typename F>
auto wrap(const std::string& key, const std::string& value, F&& parse) {
    try {
        return parse(value);
    } catch (const ConfigError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_u64(k, v); }},
        {"clients", [](auto& c, auto& k, auto& v) { c.clients = parse_size(k, v); }},
        {"participants", [](auto& c, auto& k, auto& v) { c.participants = parse_size(k, v); }},
        {"local_epochs", [](auto& c, auto& k, auto& v) { c.local_epochs = parse_size(k, v); }},
        {"rounds", [](auto& c, auto& k, auto& v) { c.rounds = parse_size(k, v); }},
        {"lr", [](auto& c, auto& k, auto& v) { c.lr = parse_double(k, v); }},
        {"momentum", [](auto& c, auto& k, auto& v) { c.momentum = parse_double(k, v); }},
        {"weight_decay", [](auto& c, auto& k, auto& v) { c.weight_decay = parse_double(k, v); }},
        {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = parse_size(k, v); }},
        {"alpha", [](auto& c, auto& k, auto& v) { c.alpha = parse_double(k, v); }},
        {"strategy", [](auto& c, auto& k, auto& v) { c.strategy.kind = wrap(k, v, parse_strategy); }},
        {"gc.lambda",
         [](auto& c, auto& k, auto& v) {
             if (v == "auto") {
                 c.strategy.lambda.reset();
             } else {
                 c.strategy.lambda = parse_double(k, v);
             }
         }},
        {"gc.axis_mode", [](auto& c, auto& k, auto& v) { c.gc.axis_mode = wrap(k, v, parse_axis_mode); }},
        {"fedprox.mu", [](auto& c, auto& k, auto& v) { c.strategy.mu_prox = parse_double(k, v); }},
        {"aggregation", [](auto& c, auto& k, auto& v) { c.aggregation = wrap(k, v, parse_aggregation); }},
        {"dataset",
         [](auto& c, auto& k, auto& v) {
             if (v == "synthetic") {
                 c.dataset = DatasetKind::Synthetic;
             } else if (v == "idx") {
                 c.dataset = DatasetKind::Idx;
             } else {
                 bad_value(k, v, "expected synthetic or idx");
             }
         }},
        {"synthetic.num_classes", [](auto& c, auto& k, auto& v) { c.synthetic.num_classes = parse_size(k, v); }},
        {"synthetic.input_dim", [](auto& c, auto& k, auto& v) { c.synthetic.input_dim = parse_size(k, v); }},
        {"synthetic.separation", [](auto& c, auto& k, auto& v) { c.synthetic.separation = parse_double(k, v); }},
        {"synthetic.noise", [](auto& c, auto& k, auto& v) { c.synthetic.noise = parse_double(k, v); }},
        {"synthetic.samples_per_class",
         [](auto& c, auto& k, auto& v) { c.synthetic.samples_per_class = parse_size(k, v); }},
        {"synthetic.seed", [](auto& c, auto& k, auto& v) { c.synthetic.seed = parse_u64(k, v); }},
        {"idx.train_images", [](auto& c, auto&, auto& v) { c.idx.train_images = v; }},
        {"idx.train_labels", [](auto& c, auto&, auto& v) { c.idx.train_labels = v; }},
        {"idx.test_images", [](auto& c, auto&, auto& v) { c.idx.test_images = v; }},
        {"idx.test_labels", [](auto& c, auto&, auto& v) { c.idx.test_labels = v; }},
        {"idx.limit", [](auto& c, auto& k, auto& v) { c.idx.limit = parse_size(k, v); }},
        {"idx.num_classes", [](auto& c, auto& k, auto& v) { c.idx.num_classes = parse_size(k, v); }},
        {"arch", [](auto& c, auto& k, auto& v) { c.arch.kind = wrap(k, v, parse_arch_kind); }},
        {"arch.hidden", [](auto& c, auto& k, auto& v) { c.arch.hidden = parse_size_list(k, v); }},
        {"arch.conv_channels", [](auto& c, auto& k, auto& v) { c.arch.conv_channels = parse_size_list(k, v); }},
        {"arch.kernel", [](auto& c, auto& k, auto& v) { c.arch.kernel = parse_size(k, v); }},
        {"arch.fc_hidden", [](auto& c, auto& k, auto& v) { c.arch.fc_hidden = parse_size_list(k, v); }},
        {"measure.discrepancy_every", [](auto& c, auto& k, auto& v) { c.discrepancy_every = parse_size(k, v); }},
        {"measure.cka_every", [](auto& c, auto& k, auto& v) { c.cka_every = parse_size(k, v); }},
        {"measure.cka_probe", [](auto& c, auto& k, auto& v) { c.cka_probe = parse_size(k, v); }},
        {"fail_policy",
         [](auto& c, auto& k, auto& v) {
             if (v == "continue") {
                 c.fail_policy = FailPolicy::Continue;
             } else if (v == "abort") {
                 c.fail_policy = FailPolicy::Abort;
             } else {
                 bad_value(k, v, "expected continue or abort");
             }
         }},
        {"workers", [](auto& c, auto& k, auto& v) { c.workers = parse_size(k, v); }},
        {"partition_file", [](auto& c, auto&, auto& v) { c.partition_file = v; }},
    };
    return table;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix,
                  std::vector<std::pair<std::string, std::string>>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        const auto& v = it.value();
        if (v.is_object()) {
            flatten_json(v, key, out);
        } else if (v.is_string()) {
            out.emplace_back(key, v.get<std::string>());
        } else if (v.is_null()) {
            out.emplace_back(key, "auto");
        } else if (v.is_array()) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) s += ',';
                s += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
            }
            out.emplace_back(key, s);
        } else if (v.is_number_float()) {
            out.emplace_back(key, format_double(v.get<double>()));
        } else {
            out.emplace_back(key, v.dump());
        }
    }
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError("config key '" + key + "': " + why);
    };
    if (clients < 1) fail("clients", "N must be >= 1");
    if (participants < 1) fail("participants", "K must be >= 1");
    if (participants > clients) {
        fail("participants", "K = " + std::to_string(participants) + " exceeds N = " + std::to_string(clients));
    }
    if (!(lr > 0.0)) fail("lr", "learning rate must be > 0");
    if (momentum < 0.0) fail("momentum", "must be >= 0");
    if (weight_decay < 0.0) fail("weight_decay", "must be >= 0");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (!(alpha > 0.0)) fail("alpha", "must be > 0");
    if (strategy.lambda && !(*strategy.lambda >= 0.0 && *strategy.lambda <= 1.0)) fail("gc.lambda", "must lie in [0, 1]");
    if (strategy.mu_prox < 0.0) fail("fedprox.mu", "must be >= 0");
    if (cka_probe < 2) fail("measure.cka_probe", "must be >= 2");
    if (workers < 1) fail("workers", "must be >= 1");
    if (dataset == DatasetKind::Synthetic) {
        try {
            synthetic.validate();
        } catch (const ConfigError& e) {
            fail("synthetic", e.what());
        }
        if (arch.kind == ArchKind::Cnn) fail("arch", "cnn requires image data (dataset = idx)");
    } else {
        if (idx.train_images.empty() || idx.train_labels.empty() || idx.test_images.empty() ||
            idx.test_labels.empty()) {
            fail("idx", "train/test image and label paths are required for dataset = idx");
        }
        if (idx.num_classes < 2 || idx.num_classes > 256) fail("idx.num_classes", "must lie in [2, 256]");
    }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"seed", std::to_string(seed)},
        {"clients", std::to_string(clients)},
        {"participants", std::to_string(participants)},
        {"local_epochs", std::to_string(local_epochs)},
        {"rounds", std::to_string(rounds)},
        {"lr", format_double(lr)},
        {"momentum", format_double(momentum)},
        {"weight_decay", format_double(weight_decay)},
        {"batch_size", std::to_string(batch_size)},
        {"alpha", format_double(alpha)},
        {"strategy", to_string(strategy.kind)},
        {"gc.lambda", strategy.lambda ? format_double(*strategy.lambda) : "auto"},
        {"gc.axis_mode", to_string(gc.axis_mode)},
        {"fedprox.mu", format_double(strategy.mu_prox)},
        {"aggregation", to_string(aggregation)},
        {"dataset", dataset == DatasetKind::Synthetic ? "synthetic" : "idx"},
        {"synthetic.num_classes", std::to_string(synthetic.num_classes)},
        {"synthetic.input_dim", std::to_string(synthetic.input_dim)},
        {"synthetic.separation", format_double(synthetic.separation)},
        {"synthetic.noise", format_double(synthetic.noise)},
        {"synthetic.samples_per_class", std::to_string(synthetic.samples_per_class)},
        {"synthetic.seed", std::to_string(synthetic.seed)},
        {"idx.train_images", idx.train_images},
        {"idx.train_labels", idx.train_labels},
        {"idx.test_images", idx.test_images},
        {"idx.test_labels", idx.test_labels},
        {"idx.limit", std::to_string(idx.limit)},
        {"idx.num_classes", std::to_string(idx.num_classes)},
        {"arch", to_string(arch.kind)},
        {"arch.hidden", join(arch.hidden)},
        {"arch.conv_channels", join(arch.conv_channels)},
        {"arch.kernel", std::to_string(arch.kernel)},
        {"arch.fc_hidden", join(arch.fc_hidden)},
        {"measure.discrepancy_every", std::to_string(discrepancy_every)},
        {"measure.cka_every", std::to_string(cka_every)},
        {"measure.cka_probe", std::to_string(cka_probe)},
        {"fail_policy", fail_policy == FailPolicy::Continue ? "continue" : "abort"},
        {"workers", std::to_string(workers)},
        {"partition_file", partition_file},
    };
    return kv;
}

ExperimentConfig parse_config_text(const std::string& text, bool json) {
    std::vector<std::pair<std::string, std::string>> kv;
    if (json) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config JSON parse error: ") + e.what());
        }
        if (!j.is_object()) throw ConfigError("config JSON must be an object");
        flatten_json(j, "", kv);
    } else {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
            }
            kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    ExperimentConfig cfg;
    std::optional<std::pair<std::string, std::string>> participation;
    for (const auto& [key, value] : kv) {
        if (key == "participation") {
            participation.emplace(key, value);
            continue;
        }
        apply_setting(cfg, key, value);
    }
    if (participation) {
        const double c = parse_double(participation->first, participation->second);
        if (!(c > 0.0 && c <= 1.0)) bad_value(participation->first, participation->second, "must lie in (0, 1]");
        cfg.participants = static_cast<std::size_t>(std::floor(c * static_cast<double>(cfg.clients) + 1e-9));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.extension() == ".json");
}

std::string format_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.to_key_values()) out += k + " = " + v + "\n";
    return out;
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << format_config(cfg);
}

ArchSpec resolve_arch(const ArchConfig& arch, const Shape& sample_shape, std::size_t num_classes) {
    ArchSpec spec;
    spec.kind = arch.kind;
    spec.num_classes = num_classes;
    if (arch.kind == ArchKind::Cnn) {
        if (sample_shape.size() != 3) throw ConfigError("arch: cnn needs [C,H,W] samples");
        spec.in_channels = sample_shape[0];
        spec.height = sample_shape[1];
        spec.width = sample_shape[2];
        spec.kernel = arch.kernel;
        spec.conv_channels = arch.conv_channels;
        spec.fc_hidden = arch.fc_hidden;
        return spec;
    }
    spec.widths.push_back(shape_numel(sample_shape));
    if (arch.kind == ArchKind::Mlp) spec.widths.insert(spec.widths.end(), arch.hidden.begin(), arch.hidden.end());
    spec.widths.push_back(num_classes);
    return spec;
}

}  // namespace gcfed
