#pragma once

#include <cstdint>
#include <vector>

#include "rrl/encoder.hpp"
#include "rrl/graph.hpp"
#include "rrl/retrieval.hpp"

namespace rrl {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t shuffle_seed = 0;
    WeightConfig weight_config;
    int threads = 1;
};

struct AdamState {
    EncoderParams first_moment;
    EncoderParams second_moment;
    std::int64_t step = 0;
};

AdamState make_adam_state(const EncoderConfig& cfg);

// One bias-corrected Adam update. The step counter is incremented before
// the correction. A non-finite gradient aborts with a diagnostic naming
// the offending parameter block.
void adam_step(EncoderParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainExample {
    std::vector<double> image;  // channels x H x W, row-major
    LabelMap map;
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;  // one entry per epoch
    EncoderParams final_params;
    double wall_seconds = 0.0;
};

// Mini-batch loop: targets are precomputed once from the label maps, each
// epoch reshuffles with a generator seeded by (shuffle_seed, epoch), and
// the batch loss is the SUM of per-image losses followed by one Adam
// step. Per-image work may run on cfg.threads workers; gradients are
// accumulated in ascending dataset order, so the result is bit-identical
// for any thread count.
TrainReport train(const std::vector<TrainExample>& dataset, const EncoderConfig& encoder_cfg,
                  const TrainConfig& train_cfg);

struct ArchiveImage {
    std::string id;
    std::vector<double> image;
    MultiLabelVector labels;
};

DescriptorStore extract_descriptors(const EncoderParams& params, const EncoderConfig& cfg,
                                    const std::vector<ArchiveImage>& archive, int threads = 1);

}  // namespace rrl
