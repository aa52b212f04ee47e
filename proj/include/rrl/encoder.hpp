#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrl/graph.hpp"

namespace rrl {

// Shape of the descriptor network: a stack of conv blocks (3x3 same
// convolution -> ReLU -> 2x2 average pool), global average pooling, a
// dense layer to the gamma-dimensional descriptor (ReLU, so descriptors
// are non-negative as chi-square comparison requires), and a linear head
// predicting the vectorized C x C adjacency matrix.
//
// All arithmetic is 64-bit; gradient checks at 1e-4 are not reliable in
// single precision.
struct EncoderConfig {
    int input_channels = 3;
    int input_height = 32;
    int input_width = 32;
    std::vector<int> block_widths = {8, 16, 32};
    int gamma = 128;
    int num_classes = 8;
    std::uint64_t seed = 0;
};

void validate_config(const EncoderConfig& cfg);

struct ConvBlock {
    std::vector<double> kernel;  // [out][in][3][3]
    std::vector<double> bias;    // [out]
};

struct Dense {
    std::vector<double> weight;  // row-major [in][out]
    std::vector<double> bias;    // [out]
};

// Parameter container. Declaration order -- each block's kernel then
// bias, descriptor weight/bias, head weight/bias -- is the serialization
// order of the checkpoint format and of param_blocks().
struct EncoderParams {
    std::vector<ConvBlock> blocks;
    Dense descriptor;
    Dense head;
};

// Gradients and Adam moments are parameter-shaped buffers.
using Gradients = EncoderParams;

struct ParamBlockView {
    std::string name;
    std::vector<double>* values;
};

std::vector<ParamBlockView> param_blocks(EncoderParams& p);

EncoderParams zero_params(const EncoderConfig& cfg);

// He-scaled normal init, std = sqrt(2 / fan_in), biases zero. Bit-identical
// for equal seeds.
EncoderParams init_params(const EncoderConfig& cfg);

struct ForwardResult {
    std::vector<double> descriptor;           // gamma, element-wise >= 0
    std::vector<double> predicted_adjacency;  // C^2, unconstrained

    struct Cache {
        std::vector<std::vector<double>> block_inputs;  // [0] = image, [b] = pooled output of block b-1
        std::vector<std::vector<double>> conv_pre;      // pre-ReLU conv outputs per block
        std::vector<double> pooled_mean;                // global average per channel
        std::vector<double> descriptor_pre;             // dense pre-activation
    } cache;
};

ForwardResult forward(const EncoderParams& params, const EncoderConfig& cfg,
                      std::span<const double> image);

// Sum of squared differences divided by C^2 (per image).
double rrl_loss(std::span<const double> predicted, const AdjacencyMatrix& target);

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

// Exact analytic gradients of rrl_loss with respect to every parameter.
// `fwd` must come from forward() with the same params and config.
BackwardResult backward(const EncoderParams& params, const EncoderConfig& cfg,
                        const ForwardResult& fwd, const AdjacencyMatrix& target);

// Checkpoint: magic "RRLM", u32 format version, config fields, then all
// parameter arrays in declaration order as little-endian 64-bit floats.
// Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const EncoderConfig& cfg,
                     const EncoderParams& params);

struct Checkpoint {
    EncoderConfig config;
    EncoderParams params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace rrl
