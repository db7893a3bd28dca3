#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssc/tensor.hpp"
#include "ssc/voxel.hpp"

namespace ssc {

// Clue-guided enhancement: clue embedding + feature fusion followed by
// layers of dilated neighborhood self-attention with residual connections.
struct EnhanceConfig {
    Dims3 dims;                      // feature-volume voxel counts
    int feat_dim = 8;                // width of incoming feature rows
    int embed_dim = 4;               // clue embedding width
    int d_model = 8;                 // token width after fusion
    int heads = 2;
    int kernel = 3;                  // per-axis window size, odd
    std::vector<int> dilations{1, 2};  // one rate per head
    int layers = 2;
    int num_classes = 4;             // C; labels 0..C+1, C+1 = unknown

    void validate() const;
    std::size_t tokens() const { return dims.total(); }
    int head_dim() const { return d_model / heads; }
    std::uint16_t unknown_label() const { return static_cast<std::uint16_t>(num_classes + 1); }
};

struct LayerParams {
    Tensor w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
};

struct EnhanceParams {
    Tensor embedding;          // (C+2) x embed_dim
    Tensor w_fuse, b_fuse;     // d_model x (feat_dim + embed_dim), d_model
    std::vector<LayerParams> layers;

    // Uniform +-1/sqrt(fan_in) weights, zero biases.
    static EnhanceParams seeded(const EnhanceConfig& config, std::uint64_t seed);
    static EnhanceParams zeros(const EnhanceConfig& config);

    // Visits every tensor in declaration order with a stable name.
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

// Window along one axis: the arithmetic sequence center + dilation*j over a
// length-k index range containing j=0, shifted into [0, dim) when possible;
// when no in-bounds shift exists the centered sequence is clamped to the
// boundary (duplicates permitted).
std::vector<std::int32_t> axis_window(std::int32_t center, std::int32_t dim, int kernel,
                                      int dilation);

// Cartesian product of the per-axis windows in (x, y, z)-major order as
// linear token indices; always kernel^3 entries.
std::vector<std::size_t> neighborhood_indices(const VoxelIndex& pos, const Dims3& dims, int kernel,
                                              int dilation);

// Gathers one embedding row per voxel label. Labels must be < table rows.
Tensor embed_clues(const LabelGrid& clues, const Tensor& table);

// Row-wise concat of features and clue embeddings, then an affine map to
// d_model: out_i = w [feats_i; emb_i] + b.
Tensor fuse_concat(const Tensor& feats, const Tensor& clue_emb, const Tensor& w, const Tensor& b);

// Forward activations retained for the backward pass.
struct DinaCache;

struct DinaResult {
    Tensor output;
    std::shared_ptr<const DinaCache> cache;
};

// Attention neighborhoods come from neighborhood_indices with each head's
// dilation; duplicate positions produced by boundary clamping collapse to a
// single attention slot, so a window covering the whole grid reduces to
// dense self-attention.
DinaResult dina_forward(const Tensor& x, const EnhanceParams& params, const EnhanceConfig& config);

struct DinaGrads {
    Tensor x;
    std::vector<LayerParams> layers;
};

DinaGrads dina_backward(const DinaCache& cache, const Tensor& grad_y, const EnhanceParams& params,
                        const EnhanceConfig& config);

struct EnhanceCache;

struct EnhanceResult {
    Tensor output;
    std::shared_ptr<const EnhanceCache> cache;
};

Tensor enhance_forward(const Tensor& feats, const LabelGrid& clues, const EnhanceParams& params,
                       const EnhanceConfig& config);
EnhanceResult enhance_forward_cached(const Tensor& feats, const LabelGrid& clues,
                                     const EnhanceParams& params, const EnhanceConfig& config);

struct EnhanceGrads {
    EnhanceParams params;
    Tensor feats;
};

EnhanceGrads enhance_backward(const EnhanceCache& cache, const Tensor& grad_y,
                              const EnhanceParams& params, const EnhanceConfig& config);

// p -= lr * g over every parameter tensor.
void sgd_step(EnhanceParams& params, const EnhanceParams& grads, double lr);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_location;
    std::size_t coords_checked = 0;
};

// Central-difference check of the full module (all parameters plus the
// feature input) on a seeded toy instance against the analytic gradients of
// the squared-error loss. Relative error uses denominator max(1, |a|, |n|).
GradCheckResult finite_diff_check(const EnhanceConfig& config, std::uint64_t seed,
                                  double step = 1e-5);

// "ENH1" | 10 u32le header fields | heads u32le dilations | tensors as f64le
// in declaration order.
std::vector<std::uint8_t> encode_enhance_params(const EnhanceConfig& config,
                                                const EnhanceParams& params);
std::pair<EnhanceConfig, EnhanceParams> decode_enhance_params(std::span<const std::uint8_t> bytes);

}  // namespace ssc
