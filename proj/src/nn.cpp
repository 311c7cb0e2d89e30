#include "gcfed/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gcfed/seed.hpp"

namespace gcfed {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.sample_shape = sample_shape;
    out.num_classes = num_classes;
    const std::size_t d = sample_size();
    out.features.reserve(indices.size() * d);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        auto row = sample(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(labels.at(i));
    }
    return out;
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
    Shape shape{indices.size()};
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
    Tensor out(shape);
    const std::size_t d = sample_size();
    for (std::size_t r = 0; r < indices.size(); ++r) {
        auto row = sample(indices[r]);
        std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    return out;
}

Tensor Dataset::all_features() const {
    Shape shape{size()};
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
    return Tensor(shape, features);
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(labels.at(i));
    return out;
}

void Dataset::validate() const {
    if (labels.empty()) throw DataError("dataset is empty");
    if (features.size() != labels.size() * sample_size()) {
        throw DataError("dataset feature buffer has " + std::to_string(features.size()) +
                        " values, expected " + std::to_string(labels.size() * sample_size()));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw DataError("label " + std::to_string(labels[i]) + " at sample " + std::to_string(i) +
                            " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!std::isfinite(features[i])) {
            throw DataError("non-finite feature in sample " + std::to_string(i / sample_size()));
        }
    }
}

// ---------------------------------------------------------------------------
// ModelParams
// ---------------------------------------------------------------------------

ParamGroups ModelParams::groups() const {
    ParamGroups out;
    out.reserve(group_count());
    for (std::size_t g = 0; g < group_count(); ++g) out.push_back(group(g));
    return out;
}

void ModelParams::set_groups(const ParamGroups& values) {
    if (values.size() != group_count()) throw ConfigError("set_groups: group count mismatch");
    for (std::size_t g = 0; g < group_count(); ++g) {
        require_same_shape(group(g), values[g], "set_groups");
        group(g) = values[g];
    }
}

void ModelParams::add(const ParamGroups& delta, double scale) {
    if (delta.size() != group_count()) throw ConfigError("model add: group count mismatch");
    for (std::size_t g = 0; g < group_count(); ++g) group(g).axpy(scale, delta[g]);
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

namespace {

std::string layer_name(std::size_t l) { return "layer " + std::to_string(l); }

// Per-sample output shape of layer `l` given its per-sample input shape.
Shape layer_output_shape(const LayerParams& layer, const Shape& in, std::size_t l) {
    if (layer.weight.rank() != (layer.kind == LayerKind::FullyConnected ? 2u : 4u)) {
        throw ConfigError(layer_name(l) + ": weight rank " + std::to_string(layer.weight.rank()) +
                          " inconsistent with layer kind");
    }
    if (layer.bias.rank() != 1 || layer.bias.size() != layer.weight.dim(0)) {
        throw ConfigError(layer_name(l) + ": bias length must equal output size");
    }
    if (layer.kind == LayerKind::FullyConnected) {
        if (shape_numel(in) != layer.weight.dim(1)) {
            throw ConfigError(layer_name(l) + ": expects " + std::to_string(layer.weight.dim(1)) +
                              " inputs, got " + shape_to_string(in));
        }
        return {layer.weight.dim(0)};
    }
    if (in.size() != 3 || in[0] != layer.weight.dim(1)) {
        throw ConfigError(layer_name(l) + ": conv expects [" + std::to_string(layer.weight.dim(1)) +
                          ",H,W] input, got " + shape_to_string(in));
    }
    if (layer.weight.dim(2) != layer.weight.dim(3) || layer.weight.dim(2) % 2 == 0) {
        throw ConfigError(layer_name(l) + ": conv kernel must be square with odd size");
    }
    if (in[1] < 2 || in[2] < 2) throw ConfigError(layer_name(l) + ": spatial size too small to pool");
    return {layer.weight.dim(0), in[1] / 2, in[2] / 2};
}

}  // namespace

void ModelParams::validate() const {
    if (layers.empty()) throw ConfigError("model has no layers");
    Shape cur = input_shape;
    for (std::size_t l = 0; l < layers.size(); ++l) cur = layer_output_shape(layers[l], cur, l);
}

ParamGroups zeros_like(const ModelParams& model) {
    ParamGroups out;
    out.reserve(model.group_count());
    for (std::size_t g = 0; g < model.group_count(); ++g) out.push_back(Tensor::zeros_like(model.group(g)));
    return out;
}

ParamGroups difference(const ModelParams& a, const ModelParams& b) {
    if (a.group_count() != b.group_count()) throw ConfigError("difference: models differ in layout");
    ParamGroups out;
    out.reserve(a.group_count());
    for (std::size_t g = 0; g < a.group_count(); ++g) out.push_back(a.group(g) - b.group(g));
    return out;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

std::string to_string(ArchKind kind) {
    switch (kind) {
        case ArchKind::Linear: return "linear";
        case ArchKind::Mlp: return "mlp";
        case ArchKind::Cnn: return "cnn";
    }
    return "?";
}

ArchKind parse_arch_kind(const std::string& name) {
    if (name == "linear") return ArchKind::Linear;
    if (name == "mlp") return ArchKind::Mlp;
    if (name == "cnn") return ArchKind::Cnn;
    throw ConfigError("unknown architecture '" + name + "' (expected linear, mlp or cnn)");
}

namespace {

void init_uniform(Tensor& w, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : w.data()) v = dist(rng);
}

LayerParams make_fc(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    LayerParams layer{LayerKind::FullyConnected, act, Tensor({out, in}), Tensor({out})};
    init_uniform(layer.weight, in, rng);
    return layer;
}

}  // namespace

ModelParams build_model(const ArchSpec& spec, std::uint64_t seed) {
    Rng rng = make_rng(seed, "init");
    ModelParams model;
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) throw ConfigError(std::string("architecture: ") + what + " must be positive");
    };

    if (spec.kind == ArchKind::Linear || spec.kind == ArchKind::Mlp) {
        if (spec.widths.size() < 2) throw ConfigError("architecture: need at least input and output widths");
        if (spec.kind == ArchKind::Linear && spec.widths.size() != 2) {
            throw ConfigError("architecture: linear takes exactly [input, classes]");
        }
        for (std::size_t w : spec.widths) positive(w, "layer width");
        model.input_shape = {spec.widths.front()};
        for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
            const bool last = i + 2 == spec.widths.size();
            model.layers.push_back(make_fc(spec.widths[i], spec.widths[i + 1],
                                           last ? Activation::Identity : Activation::ReLU, rng));
        }
    } else {
        positive(spec.in_channels, "in_channels");
        positive(spec.height, "height");
        positive(spec.width, "width");
        positive(spec.kernel, "kernel");
        positive(spec.num_classes, "num_classes");
        if (spec.kernel % 2 == 0) throw ConfigError("architecture: conv kernel must be odd");
        model.input_shape = {spec.in_channels, spec.height, spec.width};
        std::size_t c = spec.in_channels, h = spec.height, w = spec.width;
        for (std::size_t out_c : spec.conv_channels) {
            positive(out_c, "conv channels");
            LayerParams layer{LayerKind::Convolutional, Activation::ReLU,
                              Tensor({out_c, c, spec.kernel, spec.kernel}), Tensor({out_c})};
            init_uniform(layer.weight, c * spec.kernel * spec.kernel, rng);
            model.layers.push_back(std::move(layer));
            c = out_c;
            h /= 2;
            w /= 2;
            if (h == 0 || w == 0) throw ConfigError("architecture: too many pooling stages for input size");
        }
        std::size_t in = c * h * w;
        for (std::size_t hidden : spec.fc_hidden) {
            positive(hidden, "fc width");
            model.layers.push_back(make_fc(in, hidden, Activation::ReLU, rng));
            in = hidden;
        }
        model.layers.push_back(make_fc(in, spec.num_classes, Activation::Identity, rng));
    }
    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace {

struct LayerCache {
    Shape in_shape;           // per-sample input shape
    std::vector<double> in;   // layer input, [B, numel(in_shape)]
    std::vector<double> pre;  // pre-activation
    std::vector<std::size_t> pool_arg;  // conv only: flat index into pre for each pooled output
    std::vector<double> out;  // layer output after activation / pooling
    Shape out_shape;
};

void fc_forward(const LayerParams& layer, std::size_t batch, LayerCache& c) {
    const std::size_t out_f = layer.weight.dim(0), in_f = layer.weight.dim(1);
    const double* w = layer.weight.data().data();
    c.pre.assign(batch * out_f, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* x = c.in.data() + b * in_f;
        for (std::size_t o = 0; o < out_f; ++o) {
            const double* wr = w + o * in_f;
            double s = layer.bias[o];
            for (std::size_t i = 0; i < in_f; ++i) s += wr[i] * x[i];
            c.pre[b * out_f + o] = s;
        }
    }
    c.out = c.pre;
    if (layer.activation == Activation::ReLU) {
        for (double& v : c.out) v = v > 0.0 ? v : 0.0;
    }
    c.out_shape = {out_f};
}

void conv_forward(const LayerParams& layer, std::size_t batch, LayerCache& c) {
    const std::size_t co_n = layer.weight.dim(0), ci_n = layer.weight.dim(1), k = layer.weight.dim(2);
    const std::size_t h = c.in_shape[1], w = c.in_shape[2];
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const double* wt = layer.weight.data().data();
    c.pre.assign(batch * co_n * h * w, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = c.in.data() + b * ci_n * h * w;
        for (std::size_t co = 0; co < co_n; ++co) {
            double* zp = c.pre.data() + (b * co_n + co) * h * w;
            for (std::size_t i = 0; i < h * w; ++i) zp[i] = layer.bias[co];
            for (std::size_t ci = 0; ci < ci_n; ++ci) {
                const double* xc = xb + ci * h * w;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const double wv = wt[((co * ci_n + ci) * k + ky) * k + kx];
                        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                        for (std::size_t y = 0; y < h; ++y) {
                            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
                            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t x = 0; x < w; ++x) {
                                const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + dx;
                                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                                zp[y * w + x] += wv * xc[sy * static_cast<std::ptrdiff_t>(w) + sx];
                            }
                        }
                    }
                }
            }
        }
    }
    // ReLU then 2x2 max-pool; ties resolve to the first window element.
    const std::size_t ph = h / 2, pw = w / 2;
    c.out.assign(batch * co_n * ph * pw, 0.0);
    c.pool_arg.assign(c.out.size(), 0);
    for (std::size_t bc = 0; bc < batch * co_n; ++bc) {
        const std::size_t base = bc * h * w;
        for (std::size_t y = 0; y < ph; ++y) {
            for (std::size_t x = 0; x < pw; ++x) {
                std::size_t best = base + (2 * y) * w + 2 * x;
                double best_v = std::max(c.pre[best], 0.0);
                for (std::size_t oy = 0; oy < 2; ++oy) {
                    for (std::size_t ox = 0; ox < 2; ++ox) {
                        const std::size_t idx = base + (2 * y + oy) * w + 2 * x + ox;
                        const double v = std::max(c.pre[idx], 0.0);
                        if (v > best_v) {
                            best_v = v;
                            best = idx;
                        }
                    }
                }
                const std::size_t o = bc * ph * pw + y * pw + x;
                c.out[o] = best_v;
                c.pool_arg[o] = best;
            }
        }
    }
    c.out_shape = {co_n, ph, pw};
}

std::vector<LayerCache> run_forward(const ModelParams& model, const Tensor& batch) {
    if (batch.rank() < 1) throw ConfigError("forward: batch must have a leading batch dimension");
    const std::size_t n = batch.dim(0);
    const std::size_t per_sample = n == 0 ? 0 : batch.size() / n;
    if (per_sample != shape_numel(model.input_shape)) {
        throw ConfigError("forward: layer 0 expects input " + shape_to_string(model.input_shape) +
                          ", batch has shape " + shape_to_string(batch.shape()));
    }
    std::vector<LayerCache> caches(model.layers.size());
    Shape cur = model.input_shape;
    const std::vector<double>* prev = &batch.storage();
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const LayerParams& layer = model.layers[l];
        layer_output_shape(layer, cur, l);  // throws on mismatch
        LayerCache& c = caches[l];
        c.in_shape = cur;
        c.in = *prev;
        if (layer.kind == LayerKind::FullyConnected) {
            fc_forward(layer, n, c);
        } else {
            conv_forward(layer, n, c);
        }
        cur = c.out_shape;
        prev = &c.out;
    }
    return caches;
}

double cross_entropy(const std::vector<double>& logits, std::size_t n, std::size_t k,
                     std::span<const int> labels, std::vector<double>* dlogits) {
    if (labels.size() != n) throw DataError("label count does not match batch size");
    double total = 0.0;
    if (dlogits) dlogits->assign(n * k, 0.0);
    std::vector<double> p(k);
    for (std::size_t b = 0; b < n; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw DataError("invalid label " + std::to_string(y) + " at sample position " + std::to_string(b));
        }
        const double* z = logits.data() + b * k;
        const double zmax = *std::max_element(z, z + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            p[j] = std::exp(z[j] - zmax);
            sum += p[j];
        }
        total += -(z[y] - zmax - std::log(sum));
        if (dlogits) {
            for (std::size_t j = 0; j < k; ++j) {
                (*dlogits)[b * k + j] = (p[j] / sum - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) /
                                        static_cast<double>(n);
            }
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double prox_value(const ModelParams& model, const ProxTerm& prox) {
    if (!prox.anchor) throw ConfigError("proximal term without anchor model");
    double s = 0.0;
    for (std::size_t g = 0; g < model.group_count(); ++g) {
        const Tensor& w = model.group(g);
        const Tensor& a = prox.anchor->group(g);
        require_same_shape(w, a, "proximal anchor");
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double d = w[i] - a[i];
            s += d * d;
        }
    }
    return 0.5 * prox.mu * s;
}

}  // namespace

Tensor forward(const ModelParams& model, const Tensor& batch) {
    auto caches = run_forward(model, batch);
    const std::size_t n = batch.dim(0);
    return Tensor({n, model.num_classes()}, std::move(caches.back().out));
}

std::vector<Tensor> forward_trace(const ModelParams& model, const Tensor& batch) {
    auto caches = run_forward(model, batch);
    const std::size_t n = batch.dim(0);
    std::vector<Tensor> out;
    out.reserve(caches.size());
    for (auto& c : caches) {
        const std::size_t f = shape_numel(c.out_shape);
        out.emplace_back(Shape{n, f}, std::move(c.out));
    }
    return out;
}

double loss_only(const ModelParams& model, const Tensor& batch, std::span<const int> labels,
                 std::optional<ProxTerm> prox) {
    auto caches = run_forward(model, batch);
    double loss = cross_entropy(caches.back().out, batch.dim(0), model.num_classes(), labels, nullptr);
    if (prox) loss += prox_value(model, *prox);
    return loss;
}

LossAndGrad loss_and_grad(const ModelParams& model, const Tensor& batch, std::span<const int> labels,
                          std::optional<ProxTerm> prox) {
    auto caches = run_forward(model, batch);
    const std::size_t n = batch.dim(0);
    LossAndGrad result;
    std::vector<double> dout;
    result.loss = cross_entropy(caches.back().out, n, model.num_classes(), labels, &dout);
    result.grads = zeros_like(model);

    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const LayerParams& layer = model.layers[li];
        LayerCache& c = caches[li];
        Tensor& dw = result.grads[2 * li];
        Tensor& db = result.grads[2 * li + 1];
        std::vector<double> din(c.in.size(), 0.0);

        if (layer.kind == LayerKind::FullyConnected) {
            const std::size_t out_f = layer.weight.dim(0), in_f = layer.weight.dim(1);
            std::vector<double>& dz = dout;
            if (layer.activation == Activation::ReLU) {
                for (std::size_t i = 0; i < dz.size(); ++i) {
                    if (c.pre[i] <= 0.0) dz[i] = 0.0;
                }
            }
            const double* w = layer.weight.data().data();
            double* gw = dw.data().data();
            for (std::size_t b = 0; b < n; ++b) {
                const double* x = c.in.data() + b * in_f;
                double* dx = din.data() + b * in_f;
                for (std::size_t o = 0; o < out_f; ++o) {
                    const double g = dz[b * out_f + o];
                    if (g == 0.0) continue;
                    db[o] += g;
                    double* gwr = gw + o * in_f;
                    const double* wr = w + o * in_f;
                    for (std::size_t i = 0; i < in_f; ++i) {
                        gwr[i] += g * x[i];
                        dx[i] += g * wr[i];
                    }
                }
            }
        } else {
            const std::size_t co_n = layer.weight.dim(0), ci_n = layer.weight.dim(1), k = layer.weight.dim(2);
            const std::size_t h = c.in_shape[1], w = c.in_shape[2];
            const auto pad = static_cast<std::ptrdiff_t>(k / 2);
            // Unpool into the argmax positions, then mask by ReLU.
            std::vector<double> dz(c.pre.size(), 0.0);
            for (std::size_t o = 0; o < dout.size(); ++o) dz[c.pool_arg[o]] += dout[o];
            for (std::size_t i = 0; i < dz.size(); ++i) {
                if (c.pre[i] <= 0.0) dz[i] = 0.0;
            }
            const double* wt = layer.weight.data().data();
            double* gw = dw.data().data();
            for (std::size_t b = 0; b < n; ++b) {
                const double* xb = c.in.data() + b * ci_n * h * w;
                double* dxb = din.data() + b * ci_n * h * w;
                for (std::size_t co = 0; co < co_n; ++co) {
                    const double* dzp = dz.data() + (b * co_n + co) * h * w;
                    for (std::size_t i = 0; i < h * w; ++i) db[co] += dzp[i];
                    for (std::size_t ci = 0; ci < ci_n; ++ci) {
                        const double* xc = xb + ci * h * w;
                        double* dxc = dxb + ci * h * w;
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const std::size_t widx = ((co * ci_n + ci) * k + ky) * k + kx;
                                const double wv = wt[widx];
                                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                                const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                                double acc = 0.0;
                                for (std::size_t y = 0; y < h; ++y) {
                                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
                                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                                    for (std::size_t x = 0; x < w; ++x) {
                                        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) + dx;
                                        if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                                        const double g = dzp[y * w + x];
                                        const std::ptrdiff_t src = sy * static_cast<std::ptrdiff_t>(w) + sx;
                                        acc += g * xc[src];
                                        dxc[src] += g * wv;
                                    }
                                }
                                gw[widx] += acc;
                            }
                        }
                    }
                }
            }
        }
        dout = std::move(din);
    }

    if (prox) {
        result.loss += prox_value(model, *prox);
        for (std::size_t g = 0; g < model.group_count(); ++g) {
            const Tensor& w = model.group(g);
            const Tensor& a = prox->anchor->group(g);
            Tensor& grad = result.grads[g];
            for (std::size_t i = 0; i < w.size(); ++i) grad[i] += prox->mu * (w[i] - a[i]);
        }
    }
    return result;
}

ParamGroups finite_diff_grad(const std::function<double(const ParamGroups&)>& loss, ParamGroups point,
                             double eps) {
    ParamGroups grads;
    grads.reserve(point.size());
    for (const auto& t : point) grads.push_back(Tensor::zeros_like(t));
    for (std::size_t g = 0; g < point.size(); ++g) {
        for (std::size_t i = 0; i < point[g].size(); ++i) {
            const double orig = point[g][i];
            point[g][i] = orig + eps;
            const double up = loss(point);
            point[g][i] = orig - eps;
            const double down = loss(point);
            point[g][i] = orig;
            grads[g][i] = (up - down) / (2.0 * eps);
        }
    }
    return grads;
}

ParamGroups finite_diff_grad(const ModelParams& model, const Tensor& batch, std::span<const int> labels,
                             double eps) {
    ModelParams probe = model;
    auto loss = [&](const ParamGroups& groups) {
        probe.set_groups(groups);
        return loss_only(probe, batch, labels);
    };
    return finite_diff_grad(loss, model.groups(), eps);
}

void sgd_step(ModelParams& model, const ParamGroups& grads, OptimizerState& state) {
    if (state.learning_rate < 0 || state.momentum < 0 || state.weight_decay < 0) {
        throw ConfigError("optimizer coefficients must be non-negative");
    }
    if (grads.size() != model.group_count()) throw ConfigError("sgd_step: gradient group count mismatch");
    if (state.velocity.empty()) state.velocity = zeros_like(model);
    if (state.velocity.size() != model.group_count()) throw ConfigError("sgd_step: velocity layout mismatch");
    for (std::size_t g = 0; g < model.group_count(); ++g) {
        Tensor& w = model.group(g);
        Tensor& v = state.velocity[g];
        const Tensor& grad = grads[g];
        require_same_shape(w, grad, "sgd_step gradient");
        require_same_shape(w, v, "sgd_step velocity");
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = grad[i] + state.weight_decay * w[i];
            v[i] = state.momentum * v[i] + gi;
            w[i] -= state.learning_rate * v[i];
        }
    }
}

}  // namespace gcfed
