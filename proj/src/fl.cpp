#include "gcfed/fl.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "gcfed/gc.hpp"
#include "gcfed/metrics.hpp"
#include "gcfed/seed.hpp"

namespace gcfed {

LocalTrainSettings LocalTrainSettings::from(const ExperimentConfig& cfg) {
    LocalTrainSettings s;
    s.local_epochs = cfg.local_epochs;
    s.batch_size = cfg.batch_size;
    s.lr = cfg.lr;
    s.momentum = cfg.momentum;
    s.weight_decay = cfg.weight_decay;
    s.gc = cfg.gc;
    s.seed = cfg.seed;
    return s;
}

std::vector<std::size_t> sample_clients(std::size_t num_clients, std::size_t k, std::uint64_t seed,
                                        std::size_t round) {
    if (k < 1 || k > num_clients) {
        throw ConfigError("sample_clients: need 1 <= K <= N, got K = " + std::to_string(k) +
                          ", N = " + std::to_string(num_clients));
    }
    std::vector<std::size_t> ids(num_clients);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng rng = make_rng(seed, "sample", {round});
    // Partial Fisher-Yates: the first k slots are a uniform sample without replacement.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, num_clients - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

UpdateDelta local_train(const ModelParams& global, const ClientDataset& data, std::size_t client_id,
                        std::size_t round, const LocalTrainSettings& settings, const Strategy& strategy) {
    if (settings.batch_size == 0) throw ConfigError("local_train: batch_size must be >= 1");
    if (data.size() == 0) throw DataError("local_train: client " + std::to_string(client_id) + " has no data");

    ModelParams local = global;
    OptimizerState opt;
    opt.learning_rate = settings.lr;
    opt.momentum = settings.momentum;
    opt.weight_decay = settings.weight_decay;
    opt.velocity = zeros_like(local);

    const auto local_gc = strategy.local_gc_layers(local.layer_count());
    std::optional<ProxTerm> prox;
    if (strategy.kind == StrategyKind::FedProx) prox = ProxTerm{strategy.mu_prox, &global};

    std::vector<std::size_t> order(data.size());
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < settings.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = make_rng(settings.seed, "batch", {round, client_id, epoch});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
            const std::size_t end = std::min(order.size(), start + settings.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const auto labels = data.batch_labels(idx);
            LossAndGrad lg = loss_and_grad(local, data.batch(idx), labels, prox);
            if (!std::isfinite(lg.loss) || !all_finite(lg.grads)) {
                throw TrainingFailure(client_id, step,
                                      "client " + std::to_string(client_id) + ": non-finite loss or gradient at step " +
                                          std::to_string(step));
            }
            for (std::size_t l = 0; l < local_gc.size(); ++l) {
                if (local_gc[l]) centralize_in_place(lg.grads[2 * l], settings.gc);
            }
            sgd_step(local, lg.grads, opt);
            ++step;
        }
    }
    const ParamGroups groups = local.groups();
    if (!all_finite(groups)) {
        throw TrainingFailure(client_id, step,
                              "client " + std::to_string(client_id) + ": non-finite weights after local training");
    }
    return UpdateDelta{difference(local, global), client_id, data.size()};
}

UpdateDelta aggregate(std::span<const UpdateDelta> deltas, Aggregation weighting) {
    if (deltas.empty()) throw std::logic_error("aggregate: no client updates");
    std::vector<const UpdateDelta*> ordered;
    for (const auto& d : deltas) ordered.push_back(&d);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const UpdateDelta* a, const UpdateDelta* b) { return a->client_id < b->client_id; });

    double total = 0.0;
    for (const auto* d : ordered) total += static_cast<double>(d->num_samples);
    if (weighting == Aggregation::ByNk && !(total > 0.0)) {
        throw std::logic_error("aggregate: by_n_k weighting with zero total samples");
    }

    UpdateDelta out;
    out.client_id = ordered.front()->client_id;
    out.num_samples = static_cast<std::size_t>(total);
    out.groups.reserve(ordered.front()->groups.size());
    for (const auto& g : ordered.front()->groups) out.groups.push_back(Tensor::zeros_like(g));
    for (const auto* d : ordered) {
        const double w = weighting == Aggregation::Uniform ? 1.0 / static_cast<double>(ordered.size())
                                                           : static_cast<double>(d->num_samples) / total;
        if (d->groups.size() != out.groups.size()) throw ConfigError("aggregate: delta layouts differ");
        axpy(out.groups, w, d->groups);
    }
    return out;
}

UpdateDelta apply_global_gc(UpdateDelta delta, const Strategy& strategy, const ProjectionSpec& spec) {
    const std::size_t layers = delta.groups.size() / 2;
    const auto global = strategy.global_gc_layers(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        if (global[l]) centralize_in_place(delta.groups[2 * l], spec);
    }
    return delta;
}

UpdateDelta centralize_delta(UpdateDelta delta, const ProjectionSpec& spec) {
    for (auto& g : delta.groups) centralize_in_place(g, spec);
    return delta;
}

FederatedData federate(Dataset train, Dataset test, PartitionPlan plan) {
    train.validate();
    test.validate();
    plan.validate(train.labels);
    FederatedData data;
    data.clients.reserve(plan.num_clients());
    for (const auto& idx : plan.assignments) data.clients.push_back(train.subset(idx));
    data.train = std::move(train);
    data.test = std::move(test);
    data.plan = std::move(plan);
    return data;
}

FederatedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset train, test;
    if (cfg.dataset == DatasetKind::Synthetic) {
        auto tt = generate_synthetic(cfg.synthetic);
        train = std::move(tt.train);
        test = std::move(tt.test);
    } else {
        train = load_idx(cfg.idx.train_images, cfg.idx.train_labels, cfg.idx.num_classes, cfg.idx.limit);
        test = load_idx(cfg.idx.test_images, cfg.idx.test_labels, cfg.idx.num_classes, cfg.idx.limit);
    }
    PartitionPlan plan;
    if (!cfg.partition_file.empty()) {
        std::ifstream in(cfg.partition_file);
        if (!in) throw ConfigError("cannot open partition_file " + cfg.partition_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("partition_file: " + std::string(e.what()));
        }
        plan = partition_from_json(j);
        if (plan.num_clients() != cfg.clients) {
            throw ConfigError("partition_file has " + std::to_string(plan.num_clients()) +
                              " clients but config has clients = " + std::to_string(cfg.clients));
        }
    } else {
        plan = lda_partition(train.labels, train.num_classes, cfg.clients, cfg.alpha, cfg.seed);
    }
    return federate(std::move(train), std::move(test), std::move(plan));
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads; per-index exceptions are
// captured and returned in index order.
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t workers,
                                             const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t threads = std::min(workers, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
        return errors;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) run(i);
        });
    }
    for (auto& th : pool) th.join();
    return errors;
}

std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        return ex.what();
    } catch (...) {
        return "unknown error";
    }
}

std::vector<std::size_t> choose_probe(const Dataset& test, std::size_t probe, std::uint64_t seed) {
    std::vector<std::size_t> idx(test.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(probe, idx.size());
    Rng rng = make_rng(seed, "cka_probe");
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const FederatedData& data, const RoundCallback& on_round) {
    cfg.validate();
    cfg.strategy.validate();
    if (data.clients.size() != cfg.clients) {
        throw ConfigError("run_experiment: data has " + std::to_string(data.clients.size()) +
                          " clients, config expects " + std::to_string(cfg.clients));
    }
    const ArchSpec arch = resolve_arch(cfg.arch, data.train.sample_shape, data.train.num_classes);
    ModelParams model = build_model(arch, cfg.seed);

    ExperimentResult result;
    result.initial_model = model;
    result.resolved_lambda = cfg.strategy.resolved_lambda(model.layer_count());
    const LocalTrainSettings settings = LocalTrainSettings::from(cfg);

    Tensor probe;
    if (cfg.cka_every > 0) probe = data.test.batch(choose_probe(data.test, cfg.cka_probe, cfg.seed));

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        const auto started = std::chrono::steady_clock::now();
        RoundRecord rec;
        rec.round = t;
        rec.selected = sample_clients(cfg.clients, cfg.participants, cfg.seed, t);

        std::vector<UpdateDelta> deltas(rec.selected.size());
        auto errors = parallel_for(rec.selected.size(), cfg.workers, [&](std::size_t i) {
            const std::size_t id = rec.selected[i];
            deltas[i] = local_train(model, data.clients[id], id, t, settings, cfg.strategy);
        });
        for (const auto& e : errors) {
            if (e) {
                rec.failed = true;
                rec.failure = describe(e);
                break;
            }
        }

        if (!rec.failed) {
            const UpdateDelta update = apply_global_gc(aggregate(deltas, cfg.aggregation), cfg.strategy, cfg.gc);

            if (cfg.discrepancy_every > 0 && t % cfg.discrepancy_every == 0) {
                // Train the clients that sat out this round from the same global model.
                std::vector<UpdateDelta> all(cfg.clients);
                std::vector<std::size_t> missing;
                for (std::size_t i = 0; i < rec.selected.size(); ++i) all[rec.selected[i]] = deltas[i];
                for (std::size_t id = 0; id < cfg.clients; ++id) {
                    if (!std::binary_search(rec.selected.begin(), rec.selected.end(), id)) missing.push_back(id);
                }
                auto errs = parallel_for(missing.size(), cfg.workers, [&](std::size_t i) {
                    const std::size_t id = missing[i];
                    all[id] = local_train(model, data.clients[id], id, t, settings, cfg.strategy);
                });
                if (std::none_of(errs.begin(), errs.end(), [](const auto& e) { return static_cast<bool>(e); })) {
                    const UpdateDelta truth = apply_global_gc(aggregate(all, cfg.aggregation), cfg.strategy, cfg.gc);
                    rec.discrepancy = update_discrepancy(truth.groups, update.groups);
                    rec.discrepancy_cosine = cosine_discrepancy(truth.groups, update.groups);
                }
            }

            ModelParams next = model;
            next.add(update.groups);
            if (!all_finite(next.groups())) {
                rec.failed = true;
                rec.failure = "non-finite global model after aggregation";
            } else {
                if (cfg.cka_every > 0 && t % cfg.cka_every == 0) {
                    const auto global_trace = forward_trace(next, probe);
                    std::vector<double> sums(global_trace.size(), 0.0);
                    for (const auto& d : deltas) {
                        ModelParams client = model;
                        client.add(d.groups);
                        const auto trace = forward_trace(client, probe);
                        for (std::size_t l = 0; l < trace.size(); ++l) sums[l] += linear_cka(trace[l], global_trace[l]);
                    }
                    for (double& s : sums) s /= static_cast<double>(deltas.size());
                    rec.cka = std::move(sums);
                }
                rec.update_norm = std::sqrt(squared_norm(update.groups));
                model = std::move(next);
            }
        }

        rec.accuracy = top1_accuracy(model, data.test);
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        if (on_round) on_round(rec);
        const bool abort = rec.failed && cfg.fail_policy == FailPolicy::Abort;
        result.records.push_back(std::move(rec));
        if (abort) {
            result.aborted = true;
            break;
        }
    }
    result.final_model = std::move(model);
    return result;
}

}  // namespace gcfed
