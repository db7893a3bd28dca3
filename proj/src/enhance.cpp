#include "ssc/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "ssc/parallel.hpp"
#include "ssc/rng.hpp"

namespace ssc {

namespace {

std::int32_t floor_div(std::int32_t a, std::int32_t b) {
    std::int32_t q = a / b;
    if (a % b != 0 && a < 0) --q;
    return q;
}

std::int32_t ceil_div(std::int32_t a, std::int32_t b) { return -floor_div(-a, b); }

Tensor uniform_tensor(std::vector<std::size_t> dims, double bound, SeededRng& rng) {
    Tensor t = Tensor::zeros(std::move(dims));
    for (double& v : t.values) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

void EnhanceConfig::validate() const {
    if (dims.h <= 0 || dims.w <= 0 || dims.z <= 0) throw invalid_input("enhance dims must be positive");
    if (feat_dim < 1 || embed_dim < 1 || d_model < 1) throw invalid_input("feature widths must be >= 1");
    if (heads < 1) throw invalid_input("heads must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw invalid_input("kernel must be odd and >= 1");
    if (d_model % heads != 0) throw invalid_input("d_model must be divisible by heads");
    if (static_cast<int>(dilations.size()) != heads) {
        throw invalid_input("need exactly one dilation per head");
    }
    for (int d : dilations) {
        if (d < 1) throw invalid_input("dilations must be >= 1");
    }
    if (layers < 1) throw invalid_input("layers must be >= 1");
    if (num_classes < 1) throw invalid_input("num_classes must be >= 1");
}

EnhanceParams EnhanceParams::seeded(const EnhanceConfig& config, std::uint64_t seed) {
    config.validate();
    SeededRng rng(seed);
    const std::size_t d = config.d_model;
    const std::size_t cat = static_cast<std::size_t>(config.feat_dim) + config.embed_dim;

    EnhanceParams p;
    p.embedding = uniform_tensor({static_cast<std::size_t>(config.num_classes) + 2,
                                  static_cast<std::size_t>(config.embed_dim)},
                                 1.0 / std::sqrt(static_cast<double>(config.embed_dim)), rng);
    p.w_fuse = uniform_tensor({d, cat}, 1.0 / std::sqrt(static_cast<double>(cat)), rng);
    p.b_fuse = Tensor::zeros({d});
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (int l = 0; l < config.layers; ++l) {
        LayerParams lp;
        lp.w_q = uniform_tensor({d, d}, bound, rng);
        lp.b_q = Tensor::zeros({d});
        lp.w_k = uniform_tensor({d, d}, bound, rng);
        lp.b_k = Tensor::zeros({d});
        lp.w_v = uniform_tensor({d, d}, bound, rng);
        lp.b_v = Tensor::zeros({d});
        lp.w_o = uniform_tensor({d, d}, bound, rng);
        lp.b_o = Tensor::zeros({d});
        p.layers.push_back(std::move(lp));
    }
    return p;
}

EnhanceParams EnhanceParams::zeros(const EnhanceConfig& config) {
    config.validate();
    const std::size_t d = config.d_model;
    const std::size_t cat = static_cast<std::size_t>(config.feat_dim) + config.embed_dim;

    EnhanceParams p;
    p.embedding = Tensor::zeros({static_cast<std::size_t>(config.num_classes) + 2,
                                 static_cast<std::size_t>(config.embed_dim)});
    p.w_fuse = Tensor::zeros({d, cat});
    p.b_fuse = Tensor::zeros({d});
    for (int l = 0; l < config.layers; ++l) {
        LayerParams lp;
        lp.w_q = Tensor::zeros({d, d});
        lp.b_q = Tensor::zeros({d});
        lp.w_k = Tensor::zeros({d, d});
        lp.b_k = Tensor::zeros({d});
        lp.w_v = Tensor::zeros({d, d});
        lp.b_v = Tensor::zeros({d});
        lp.w_o = Tensor::zeros({d, d});
        lp.b_o = Tensor::zeros({d});
        p.layers.push_back(std::move(lp));
    }
    return p;
}

void EnhanceParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("embedding", embedding);
    fn("w_fuse", w_fuse);
    fn("b_fuse", b_fuse);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "w_q", layers[l].w_q);
        fn(prefix + "b_q", layers[l].b_q);
        fn(prefix + "w_k", layers[l].w_k);
        fn(prefix + "b_k", layers[l].b_k);
        fn(prefix + "w_v", layers[l].w_v);
        fn(prefix + "b_v", layers[l].b_v);
        fn(prefix + "w_o", layers[l].w_o);
        fn(prefix + "b_o", layers[l].b_o);
    }
}

void EnhanceParams::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    const_cast<EnhanceParams*>(this)->for_each(
        [&](const std::string& name, Tensor& t) { fn(name, t); });
}

std::vector<std::int32_t> axis_window(std::int32_t center, std::int32_t dim, int kernel,
                                      int dilation) {
    if (kernel < 1 || kernel % 2 == 0) throw invalid_input("kernel must be odd and >= 1");
    if (dilation < 1) throw invalid_input("dilation must be >= 1");
    if (center < 0 || center >= dim) throw invalid_input("query position out of range");

    const std::int32_t r = (kernel - 1) / 2;
    // Range of window start offsets j0 (window = center + dilation*(j0..j0+k-1))
    // that keep the query inside the window and every member in [0, dim).
    std::int32_t lo = std::max(ceil_div(-center, dilation), -(kernel - 1));
    std::int32_t hi = std::min(floor_div(dim - 1 - center, dilation) - (kernel - 1), 0);

    std::vector<std::int32_t> out(static_cast<std::size_t>(kernel));
    if (lo <= hi) {
        const std::int32_t j0 = std::clamp(-r, lo, hi);
        for (int j = 0; j < kernel; ++j) out[j] = center + dilation * (j0 + j);
    } else {
        for (int j = 0; j < kernel; ++j) {
            out[j] = std::clamp(center + dilation * (j - r), 0, dim - 1);
        }
    }
    return out;
}

std::vector<std::size_t> neighborhood_indices(const VoxelIndex& pos, const Dims3& dims, int kernel,
                                              int dilation) {
    const auto wx = axis_window(pos.x, dims.h, kernel, dilation);
    const auto wy = axis_window(pos.y, dims.w, kernel, dilation);
    const auto wz = axis_window(pos.z, dims.z, kernel, dilation);
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(kernel) * kernel * kernel);
    for (std::int32_t x : wx) {
        for (std::int32_t y : wy) {
            for (std::int32_t z : wz) {
                out.push_back((static_cast<std::size_t>(x) * dims.w + y) * dims.z + z);
            }
        }
    }
    return out;
}

Tensor embed_clues(const LabelGrid& clues, const Tensor& table) {
    const std::size_t n = clues.labels.size();
    const std::size_t width = table.cols();
    Tensor out = Tensor::matrix(n, width);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t label = clues.labels[i];
        if (label >= table.rows()) {
            throw invalid_input("clue label " + std::to_string(label) +
                                " exceeds embedding table rows " + std::to_string(table.rows()));
        }
        std::memcpy(out.row(i), table.row(label), width * sizeof(double));
    }
    return out;
}

Tensor fuse_concat(const Tensor& feats, const Tensor& clue_emb, const Tensor& w, const Tensor& b) {
    if (feats.rows() != clue_emb.rows()) {
        throw invalid_input("fuse_concat: token counts differ");
    }
    const std::size_t n = feats.rows();
    const std::size_t df = feats.cols(), de = clue_emb.cols();
    Tensor cat = Tensor::matrix(n, df + de);
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(cat.row(i), feats.row(i), df * sizeof(double));
        std::memcpy(cat.row(i) + df, clue_emb.row(i), de * sizeof(double));
    }
    return linear_forward(cat, w, b);
}

// ---------------------------------------------------------------------------
// Dilated neighborhood attention
// ---------------------------------------------------------------------------

namespace {

// Per-head neighbor lists in CSR form. Duplicate positions from boundary
// clamping are collapsed so each voxel occupies one attention slot.
struct NeighborTable {
    std::vector<std::uint32_t> offsets;  // tokens + 1
    std::vector<std::uint32_t> ids;
};

NeighborTable build_neighbors(const Dims3& dims, int kernel, int dilation) {
    NeighborTable table;
    const std::size_t n = dims.total();
    table.offsets.reserve(n + 1);
    table.offsets.push_back(0);
    table.ids.reserve(n * kernel);

    std::vector<std::vector<std::int32_t>> wx(dims.h), wy(dims.w), wz(dims.z);
    auto dedupe = [](std::vector<std::int32_t> v) {
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    for (std::int32_t x = 0; x < dims.h; ++x) wx[x] = dedupe(axis_window(x, dims.h, kernel, dilation));
    for (std::int32_t y = 0; y < dims.w; ++y) wy[y] = dedupe(axis_window(y, dims.w, kernel, dilation));
    for (std::int32_t z = 0; z < dims.z; ++z) wz[z] = dedupe(axis_window(z, dims.z, kernel, dilation));

    for (std::int32_t x = 0; x < dims.h; ++x) {
        for (std::int32_t y = 0; y < dims.w; ++y) {
            for (std::int32_t z = 0; z < dims.z; ++z) {
                for (std::int32_t nx : wx[x]) {
                    for (std::int32_t ny : wy[y]) {
                        for (std::int32_t nz : wz[z]) {
                            table.ids.push_back(
                                static_cast<std::uint32_t>((static_cast<std::size_t>(nx) * dims.w + ny) * dims.z + nz));
                        }
                    }
                }
                table.offsets.push_back(static_cast<std::uint32_t>(table.ids.size()));
            }
        }
    }
    return table;
}

}  // namespace

struct LayerCache {
    Tensor x_in;                            // layer input
    Tensor q, k, v;                         // projections
    Tensor attn_out;                        // concat of heads, pre-output-projection
    std::vector<std::vector<double>> attn;  // [head] weights aligned with the neighbor table
};

struct DinaCache {
    std::vector<NeighborTable> neighbors;  // one per head
    std::vector<LayerCache> layers;
};

namespace {

void check_dina_input(const Tensor& x, const EnhanceParams& params, const EnhanceConfig& config) {
    config.validate();
    if (x.rows() != config.tokens() || x.cols() != static_cast<std::size_t>(config.d_model)) {
        throw invalid_input("dina_forward: input must be tokens x d_model");
    }
    if (params.layers.size() != static_cast<std::size_t>(config.layers)) {
        throw invalid_input("dina_forward: params carry " + std::to_string(params.layers.size()) +
                            " layers, config expects " + std::to_string(config.layers));
    }
    for (const LayerParams& lp : params.layers) {
        const std::size_t d = config.d_model;
        if (lp.w_q.rows() != d || lp.w_q.cols() != d || lp.w_k.rows() != d || lp.w_v.rows() != d ||
            lp.w_o.rows() != d || lp.b_q.numel() != d || lp.b_k.numel() != d ||
            lp.b_v.numel() != d || lp.b_o.numel() != d) {
            throw invalid_input("dina_forward: layer parameter shape mismatch");
        }
    }
}

}  // namespace

DinaResult dina_forward(const Tensor& x, const EnhanceParams& params, const EnhanceConfig& config) {
    check_dina_input(x, params, config);

    auto cache = std::make_shared<DinaCache>();
    cache->neighbors.reserve(config.heads);
    for (int h = 0; h < config.heads; ++h) {
        cache->neighbors.push_back(build_neighbors(config.dims, config.kernel, config.dilations[h]));
    }

    const std::size_t n = config.tokens();
    const std::size_t d = config.d_model;
    const std::size_t dh = config.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor current = x;
    for (int l = 0; l < config.layers; ++l) {
        const LayerParams& lp = params.layers[l];
        LayerCache lc;
        lc.x_in = current;
        lc.q = linear_forward(current, lp.w_q, lp.b_q);
        lc.k = linear_forward(current, lp.w_k, lp.b_k);
        lc.v = linear_forward(current, lp.w_v, lp.b_v);
        lc.attn_out = Tensor::matrix(n, d);
        lc.attn.resize(config.heads);
        for (int h = 0; h < config.heads; ++h) {
            lc.attn[h].assign(cache->neighbors[h].ids.size(), 0.0);
        }

        for (int h = 0; h < config.heads; ++h) {
            const NeighborTable& nb = cache->neighbors[h];
            const std::size_t col = static_cast<std::size_t>(h) * dh;
            std::vector<double>& weights = lc.attn[h];
            parallel_chunks(n, 512, [&](std::size_t, std::size_t begin, std::size_t end) {
                std::vector<double> logits;
                for (std::size_t i = begin; i < end; ++i) {
                    const std::uint32_t first = nb.offsets[i], last = nb.offsets[i + 1];
                    const std::size_t count = last - first;
                    logits.resize(count);
                    const double* qi = lc.q.row(i) + col;
                    double max_logit = -1e300;
                    for (std::size_t j = 0; j < count; ++j) {
                        const double* kj = lc.k.row(nb.ids[first + j]) + col;
                        double s = 0.0;
                        for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
                        logits[j] = s * scale;
                        max_logit = std::max(max_logit, logits[j]);
                    }
                    double denom = 0.0;
                    for (std::size_t j = 0; j < count; ++j) {
                        logits[j] = std::exp(logits[j] - max_logit);
                        denom += logits[j];
                    }
                    double* out = lc.attn_out.row(i) + col;
                    for (std::size_t j = 0; j < count; ++j) {
                        const double a = logits[j] / denom;
                        weights[first + j] = a;
                        const double* vj = lc.v.row(nb.ids[first + j]) + col;
                        for (std::size_t c = 0; c < dh; ++c) out[c] += a * vj[c];
                    }
                }
            });
        }

        Tensor next = linear_forward(lc.attn_out, lp.w_o, lp.b_o);
        for (std::size_t i = 0; i < next.values.size(); ++i) next.values[i] += current.values[i];
        cache->layers.push_back(std::move(lc));
        current = std::move(next);
    }

    current.check_finite("dina_forward output");
    return {std::move(current), std::move(cache)};
}

DinaGrads dina_backward(const DinaCache& cache, const Tensor& grad_y, const EnhanceParams& params,
                        const EnhanceConfig& config) {
    if (cache.layers.size() != static_cast<std::size_t>(config.layers)) {
        throw invalid_input("dina_backward: cache does not match the configured layer count");
    }
    const std::size_t n = config.tokens();
    const std::size_t d = config.d_model;
    if (grad_y.rows() != n || grad_y.cols() != d) {
        throw invalid_input("dina_backward: upstream gradient has the wrong shape");
    }
    const std::size_t dh = config.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    DinaGrads grads;
    grads.layers.resize(config.layers);
    for (int l = 0; l < config.layers; ++l) {
        LayerParams& g = grads.layers[l];
        g.w_q = Tensor::matrix(d, d);
        g.b_q = Tensor::zeros({d});
        g.w_k = Tensor::matrix(d, d);
        g.b_k = Tensor::zeros({d});
        g.w_v = Tensor::matrix(d, d);
        g.b_v = Tensor::zeros({d});
        g.w_o = Tensor::matrix(d, d);
        g.b_o = Tensor::zeros({d});
    }

    Tensor grad = grad_y;
    for (int l = config.layers - 1; l >= 0; --l) {
        const LayerCache& lc = cache.layers[l];
        const LayerParams& lp = params.layers[l];
        LayerParams& g = grads.layers[l];

        // y = x + attn_out W_o^T + b_o
        Tensor grad_attn = Tensor::matrix(n, d);
        Tensor grad_x = grad;  // residual path
        linear_backward(lc.attn_out, lp.w_o, grad, grad_attn, g.w_o, g.b_o);

        Tensor grad_q = Tensor::matrix(n, d);
        Tensor grad_k = Tensor::matrix(n, d);
        Tensor grad_v = Tensor::matrix(n, d);

        for (int h = 0; h < config.heads; ++h) {
            const NeighborTable& nb = cache.neighbors[h];
            const std::vector<double>& weights = lc.attn[h];
            const std::size_t col = static_cast<std::size_t>(h) * dh;
            std::vector<double> grad_a;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint32_t first = nb.offsets[i], last = nb.offsets[i + 1];
                const std::size_t count = last - first;
                const double* go = grad_attn.row(i) + col;

                grad_a.resize(count);
                double weighted_sum = 0.0;
                for (std::size_t j = 0; j < count; ++j) {
                    const std::uint32_t nj = nb.ids[first + j];
                    const double a = weights[first + j];
                    const double* vj = lc.v.row(nj) + col;
                    double* gv = grad_v.row(nj) + col;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) {
                        gv[c] += a * go[c];
                        dot += go[c] * vj[c];
                    }
                    grad_a[j] = dot;
                    weighted_sum += a * dot;
                }
                // softmax backward: dlogit_j = a_j (da_j - sum_l a_l da_l)
                const double* qi = lc.q.row(i) + col;
                double* gq = grad_q.row(i) + col;
                for (std::size_t j = 0; j < count; ++j) {
                    const std::uint32_t nj = nb.ids[first + j];
                    const double dlogit = weights[first + j] * (grad_a[j] - weighted_sum) * scale;
                    const double* kj = lc.k.row(nj) + col;
                    double* gk = grad_k.row(nj) + col;
                    for (std::size_t c = 0; c < dh; ++c) {
                        gq[c] += dlogit * kj[c];
                        gk[c] += dlogit * qi[c];
                    }
                }
            }
        }

        linear_backward(lc.x_in, lp.w_q, grad_q, grad_x, g.w_q, g.b_q);
        linear_backward(lc.x_in, lp.w_k, grad_k, grad_x, g.w_k, g.b_k);
        linear_backward(lc.x_in, lp.w_v, grad_v, grad_x, g.w_v, g.b_v);
        grad = std::move(grad_x);
    }

    grads.x = std::move(grad);
    return grads;
}

// ---------------------------------------------------------------------------
// Whole module
// ---------------------------------------------------------------------------

struct EnhanceCache {
    std::vector<std::uint16_t> labels;
    Tensor cat;  // concatenated [feats, emb] rows
    std::shared_ptr<const DinaCache> dina;
};

namespace {

void check_enhance_input(const Tensor& feats, const LabelGrid& clues, const EnhanceParams& params,
                         const EnhanceConfig& config) {
    config.validate();
    if (feats.rows() != config.tokens() || feats.cols() != static_cast<std::size_t>(config.feat_dim)) {
        throw invalid_input("enhance_forward: feature volume must be tokens x feat_dim");
    }
    if (clues.labels.size() != config.tokens()) {
        throw invalid_input("enhance_forward: clue grid token count mismatch");
    }
    if (params.embedding.rows() != static_cast<std::size_t>(config.num_classes) + 2 ||
        params.embedding.cols() != static_cast<std::size_t>(config.embed_dim)) {
        throw invalid_input("enhance_forward: embedding table shape mismatch");
    }
}

}  // namespace

EnhanceResult enhance_forward_cached(const Tensor& feats, const LabelGrid& clues,
                                     const EnhanceParams& params, const EnhanceConfig& config) {
    check_enhance_input(feats, clues, params, config);
    const Tensor emb = embed_clues(clues, params.embedding);

    const std::size_t n = feats.rows();
    const std::size_t df = feats.cols(), de = emb.cols();
    Tensor cat = Tensor::matrix(n, df + de);
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(cat.row(i), feats.row(i), df * sizeof(double));
        std::memcpy(cat.row(i) + df, emb.row(i), de * sizeof(double));
    }
    Tensor fused = linear_forward(cat, params.w_fuse, params.b_fuse);

    DinaResult dina = dina_forward(fused, params, config);

    auto cache = std::make_shared<EnhanceCache>();
    cache->labels = clues.labels;
    cache->cat = std::move(cat);
    cache->dina = dina.cache;
    return {std::move(dina.output), std::move(cache)};
}

Tensor enhance_forward(const Tensor& feats, const LabelGrid& clues, const EnhanceParams& params,
                       const EnhanceConfig& config) {
    return enhance_forward_cached(feats, clues, params, config).output;
}

EnhanceGrads enhance_backward(const EnhanceCache& cache, const Tensor& grad_y,
                              const EnhanceParams& params, const EnhanceConfig& config) {
    EnhanceGrads out;
    out.params = EnhanceParams::zeros(config);

    DinaGrads dina = dina_backward(*cache.dina, grad_y, params, config);
    out.params.layers = std::move(dina.layers);

    // fused = cat W_fuse^T + b_fuse
    const std::size_t n = cache.cat.rows();
    Tensor grad_cat = Tensor::matrix(n, cache.cat.cols());
    linear_backward(cache.cat, params.w_fuse, dina.x, grad_cat, out.params.w_fuse,
                    out.params.b_fuse);

    const std::size_t df = config.feat_dim, de = config.embed_dim;
    out.feats = Tensor::matrix(n, df);
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(out.feats.row(i), grad_cat.row(i), df * sizeof(double));
        double* grow = out.params.embedding.row(cache.labels[i]);
        const double* gcat = grad_cat.row(i) + df;
        for (std::size_t c = 0; c < de; ++c) grow[c] += gcat[c];
    }
    return out;
}

void sgd_step(EnhanceParams& params, const EnhanceParams& grads, double lr) {
    if (!(lr >= 0.0)) throw invalid_input("sgd_step: learning rate must be non-negative");
    if (params.layers.size() != grads.layers.size()) {
        throw invalid_input("sgd_step: layer count mismatch");
    }
    sgd_step(params.embedding, grads.embedding, lr);
    sgd_step(params.w_fuse, grads.w_fuse, lr);
    sgd_step(params.b_fuse, grads.b_fuse, lr);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        sgd_step(params.layers[l].w_q, grads.layers[l].w_q, lr);
        sgd_step(params.layers[l].b_q, grads.layers[l].b_q, lr);
        sgd_step(params.layers[l].w_k, grads.layers[l].w_k, lr);
        sgd_step(params.layers[l].b_k, grads.layers[l].b_k, lr);
        sgd_step(params.layers[l].w_v, grads.layers[l].w_v, lr);
        sgd_step(params.layers[l].b_v, grads.layers[l].b_v, lr);
        sgd_step(params.layers[l].w_o, grads.layers[l].w_o, lr);
        sgd_step(params.layers[l].b_o, grads.layers[l].b_o, lr);
    }
}

GradCheckResult finite_diff_check(const EnhanceConfig& config, std::uint64_t seed, double step) {
    config.validate();
    EnhanceParams params = EnhanceParams::seeded(config, seed);

    SeededRng rng(seed ^ 0x9e3779b97f4a7c15ull);
    const std::size_t n = config.tokens();
    Tensor feats = Tensor::matrix(n, config.feat_dim);
    for (double& v : feats.values) v = rng.uniform(-1.0, 1.0);

    GridConfig grid_cfg;
    grid_cfg.dims = config.dims;
    grid_cfg.num_classes = config.num_classes + 1;  // allow the unknown id in labels
    LabelGrid clues = LabelGrid::empty(grid_cfg);
    for (auto& label : clues.labels) {
        label = static_cast<std::uint16_t>(rng.bounded(config.num_classes + 2));
    }

    Tensor target = Tensor::matrix(n, config.d_model);
    for (double& v : target.values) v = rng.uniform(-1.0, 1.0);

    const auto loss_of = [&](const Tensor& f) {
        const Tensor y = enhance_forward(f, clues, params, config);
        double loss = 0.0;
        for (std::size_t i = 0; i < y.values.size(); ++i) {
            const double r = y.values[i] - target.values[i];
            loss += 0.5 * r * r;
        }
        return loss;
    };

    // Analytic gradients of the same loss.
    EnhanceResult fwd = enhance_forward_cached(feats, clues, params, config);
    Tensor grad_y = fwd.output;
    for (std::size_t i = 0; i < grad_y.values.size(); ++i) grad_y.values[i] -= target.values[i];
    EnhanceGrads analytic = enhance_backward(*fwd.cache, grad_y, params, config);

    GradCheckResult result;
    const auto compare = [&](const std::string& name, double analytic_g, double& slot) {
        const double saved = slot;
        slot = saved + step;
        const double plus = loss_of(feats);
        slot = saved - step;
        const double minus = loss_of(feats);
        slot = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double rel = std::abs(analytic_g - numeric) /
                           std::max({1.0, std::abs(analytic_g), std::abs(numeric)});
        ++result.coords_checked;
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_location = name;
        }
    };

    std::vector<std::pair<std::string, Tensor*>> param_slots;
    params.for_each([&](const std::string& name, Tensor& t) { param_slots.emplace_back(name, &t); });
    std::vector<const Tensor*> grad_slots;
    analytic.params.for_each(
        [&](const std::string&, const Tensor& t) { grad_slots.push_back(&t); });

    for (std::size_t s = 0; s < param_slots.size(); ++s) {
        Tensor& t = *param_slots[s].second;
        const Tensor& g = *grad_slots[s];
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            compare(param_slots[s].first + "[" + std::to_string(i) + "]", g.values[i], t.values[i]);
        }
    }
    for (std::size_t i = 0; i < feats.values.size(); ++i) {
        compare("feats[" + std::to_string(i) + "]", analytic.feats.values[i], feats.values[i]);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parameter serialization
// ---------------------------------------------------------------------------

namespace {

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
           static_cast<std::uint32_t>(b[off + 2]) << 16 |
           static_cast<std::uint32_t>(b[off + 3]) << 24;
}

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double get_f64le(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_enhance_params(const EnhanceConfig& config,
                                                const EnhanceParams& params) {
    config.validate();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'E', 'N', 'H', '1'});
    for (std::uint32_t v : {static_cast<std::uint32_t>(config.dims.h),
                            static_cast<std::uint32_t>(config.dims.w),
                            static_cast<std::uint32_t>(config.dims.z),
                            static_cast<std::uint32_t>(config.feat_dim),
                            static_cast<std::uint32_t>(config.embed_dim),
                            static_cast<std::uint32_t>(config.d_model),
                            static_cast<std::uint32_t>(config.heads),
                            static_cast<std::uint32_t>(config.kernel),
                            static_cast<std::uint32_t>(config.layers),
                            static_cast<std::uint32_t>(config.num_classes)}) {
        put_u32le(out, v);
    }
    for (int d : config.dilations) put_u32le(out, static_cast<std::uint32_t>(d));
    params.for_each([&](const std::string&, const Tensor& t) {
        for (double v : t.values) put_f64le(out, v);
    });
    return out;
}

std::pair<EnhanceConfig, EnhanceParams> decode_enhance_params(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "ENH1", 4) != 0) {
        throw codec_error("bad magic, expected 'ENH1'", 0);
    }
    const std::size_t header = 4 + 10 * 4;
    if (bytes.size() < header) throw codec_error("truncated config header", bytes.size());

    EnhanceConfig config;
    config.dims.h = static_cast<std::int32_t>(get_u32le(bytes, 4));
    config.dims.w = static_cast<std::int32_t>(get_u32le(bytes, 8));
    config.dims.z = static_cast<std::int32_t>(get_u32le(bytes, 12));
    config.feat_dim = static_cast<int>(get_u32le(bytes, 16));
    config.embed_dim = static_cast<int>(get_u32le(bytes, 20));
    config.d_model = static_cast<int>(get_u32le(bytes, 24));
    config.heads = static_cast<int>(get_u32le(bytes, 28));
    config.kernel = static_cast<int>(get_u32le(bytes, 32));
    config.layers = static_cast<int>(get_u32le(bytes, 36));
    config.num_classes = static_cast<int>(get_u32le(bytes, 40));

    const std::size_t dilations_end = header + static_cast<std::size_t>(config.heads) * 4;
    if (config.heads < 1 || bytes.size() < dilations_end) {
        throw codec_error("truncated dilation list", header);
    }
    config.dilations.clear();
    for (int h = 0; h < config.heads; ++h) {
        config.dilations.push_back(static_cast<int>(get_u32le(bytes, header + 4 * h)));
    }
    try {
        config.validate();
    } catch (const invalid_input& e) {
        throw codec_error(std::string("invalid config header: ") + e.what(), 4);
    }

    EnhanceParams params = EnhanceParams::zeros(config);
    std::size_t off = dilations_end;
    params.for_each([&](const std::string& name, Tensor& t) {
        if (bytes.size() < off + t.values.size() * 8) {
            throw codec_error("truncated tensor payload at " + name, off);
        }
        for (double& v : t.values) {
            v = get_f64le(bytes, off);
            off += 8;
        }
    });
    if (off != bytes.size()) throw codec_error("unexpected trailing data after payload", off);
    return {std::move(config), std::move(params)};
}

}  // namespace ssc
