#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rrl/labelmap.hpp"

namespace rrl {

// Recipe for a paired (image, label map) archive. Everything is a pure
// function of master_seed: image i draws from its own SplitMix64 stream
// seeded by the (i+1)-th output of the master sequence, so generation is
// independent per image.
struct SynthConfig {
    int num_images = 0;
    int height = 0;
    int width = 0;
    int num_classes = 2;
    int sites_per_image = 1;
    int channels = 3;
    double noise_sigma = 0.0;
    std::uint64_t master_seed = 0;
};

void validate_synth_config(const SynthConfig& cfg);

// Per-class base intensity per channel, in [0, 1]; signatures are kept at
// least 0.1 apart in max-norm so classes stay distinguishable.
using ClassSignature = std::vector<double>;

std::vector<ClassSignature> class_signatures(const SynthConfig& cfg);

struct SynthImage {
    std::string id;                // zero-padded index
    std::vector<double> image;     // channels x H x W, values in [0, 1]
    LabelMap map;
};

// Voronoi labeling: each image drops `sites_per_image` uniform site
// points, assigns each a uniform class, and labels every pixel with the
// class of its nearest site (ties go to the lowest site index). Pixel
// values are the class signature plus uniform noise of standard deviation
// noise_sigma (range +/- noise_sigma * sqrt(3)), clamped to [0, 1].
std::vector<SynthImage> generate(const SynthConfig& cfg);

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> query;
    std::vector<std::string> test;
};

// Deterministic shuffled partition. Counts are floor(fraction * n) for
// train and query with the remainder going to test; a partition with a
// positive fraction must end up non-empty.
SplitResult split(const std::vector<std::string>& ids, const std::array<double, 3>& fractions,
                  std::uint64_t seed);

// IMG v1: line 1 "IMG v1"; line 2 "H W channels"; then channels x H lines
// of W floats in shortest round-trip form.
void write_image(std::ostream& out, const std::vector<double>& image, int height, int width,
                 int channels);

struct ImageData {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> pixels;
};

ImageData read_image(std::istream& in);
void write_image_file(const std::string& path, const std::vector<double>& image, int height,
                      int width, int channels);
ImageData read_image_file(const std::string& path);

}  // namespace rrl
