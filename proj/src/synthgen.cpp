#include "rrl/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "rrl/error.hpp"
#include "rrl/rng.hpp"
#include "rrl/textio.hpp"

namespace rrl {

namespace {

constexpr double kMinSignatureSeparation = 0.1;
constexpr double kUniformSigmaToHalfRange = 1.7320508075688772;  // sqrt(3)

std::string padded_id(int index) {
    std::string digits = std::to_string(index);
    if (digits.size() < 5) digits.insert(digits.begin(), 5 - digits.size(), '0');
    return digits;
}

}  // namespace

void validate_synth_config(const SynthConfig& cfg) {
    if (cfg.num_images < 1) throw DataError("num_images must be >= 1");
    if (cfg.height < 1 || cfg.width < 1) throw DataError("image size must be >= 1");
    if (cfg.num_classes < 2) throw DataError("num_classes must be >= 2");
    if (cfg.sites_per_image < 1) throw DataError("sites_per_image must be >= 1");
    if (cfg.channels < 1) throw DataError("channels must be >= 1");
    if (cfg.noise_sigma < 0.0) throw DataError("noise_sigma must be >= 0");
}

std::vector<ClassSignature> class_signatures(const SynthConfig& cfg) {
    validate_synth_config(cfg);
    SplitMix64 rng(derive_seed(cfg.master_seed, 0));
    std::vector<ClassSignature> sigs;
    sigs.reserve(static_cast<std::size_t>(cfg.num_classes));
    int attempts = 0;
    while (static_cast<int>(sigs.size()) < cfg.num_classes) {
        if (++attempts > 100000 * cfg.num_classes)
            throw DataError("cannot place " + std::to_string(cfg.num_classes) +
                            " class signatures at separation " +
                            std::to_string(kMinSignatureSeparation));
        ClassSignature candidate(static_cast<std::size_t>(cfg.channels));
        for (auto& v : candidate) v = rng.next_double();
        bool distinct = true;
        for (const auto& s : sigs) {
            double max_diff = 0.0;
            for (int c = 0; c < cfg.channels; ++c)
                max_diff = std::max(max_diff, std::abs(candidate[static_cast<std::size_t>(c)] -
                                                       s[static_cast<std::size_t>(c)]));
            if (max_diff < kMinSignatureSeparation) {
                distinct = false;
                break;
            }
        }
        if (distinct) sigs.push_back(std::move(candidate));
    }
    return sigs;
}

std::vector<SynthImage> generate(const SynthConfig& cfg) {
    validate_synth_config(cfg);
    const auto sigs = class_signatures(cfg);
    const std::size_t plane = static_cast<std::size_t>(cfg.height) * cfg.width;

    std::vector<SynthImage> archive;
    archive.reserve(static_cast<std::size_t>(cfg.num_images));
    for (int i = 0; i < cfg.num_images; ++i) {
        SplitMix64 rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i) + 1));

        // Draw order per image: K site rows/cols, K site classes, then one
        // noise value per channel-major pixel.
        std::vector<double> site_row(static_cast<std::size_t>(cfg.sites_per_image));
        std::vector<double> site_col(static_cast<std::size_t>(cfg.sites_per_image));
        for (int s = 0; s < cfg.sites_per_image; ++s) {
            site_row[static_cast<std::size_t>(s)] = rng.next_double() * cfg.height;
            site_col[static_cast<std::size_t>(s)] = rng.next_double() * cfg.width;
        }
        std::vector<std::int32_t> site_class(static_cast<std::size_t>(cfg.sites_per_image));
        for (int s = 0; s < cfg.sites_per_image; ++s)
            site_class[static_cast<std::size_t>(s)] =
                static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(cfg.num_classes)));

        SynthImage item;
        item.id = padded_id(i);
        item.map.height = cfg.height;
        item.map.width = cfg.width;
        item.map.num_classes = cfg.num_classes;
        item.map.pixels.resize(plane);
        for (int r = 0; r < cfg.height; ++r)
            for (int c = 0; c < cfg.width; ++c) {
                int best = 0;
                double best_d2 = 0.0;
                for (int s = 0; s < cfg.sites_per_image; ++s) {
                    double dr = r - site_row[static_cast<std::size_t>(s)];
                    double dc = c - site_col[static_cast<std::size_t>(s)];
                    double d2 = dr * dr + dc * dc;
                    if (s == 0 || d2 < best_d2) {
                        best = s;
                        best_d2 = d2;
                    }
                }
                item.map.pixels[static_cast<std::size_t>(r) * cfg.width + c] =
                    site_class[static_cast<std::size_t>(best)];
            }

        const double half_range = cfg.noise_sigma * kUniformSigmaToHalfRange;
        item.image.resize(static_cast<std::size_t>(cfg.channels) * plane);
        for (int ch = 0; ch < cfg.channels; ++ch)
            for (std::size_t p = 0; p < plane; ++p) {
                auto cls = static_cast<std::size_t>(item.map.pixels[p]);
                double noise = (2.0 * rng.next_double() - 1.0) * half_range;
                double v = sigs[cls][static_cast<std::size_t>(ch)] + noise;
                item.image[static_cast<std::size_t>(ch) * plane + p] = std::clamp(v, 0.0, 1.0);
            }
        archive.push_back(std::move(item));
    }
    return archive;
}

SplitResult split(const std::vector<std::string>& ids, const std::array<double, 3>& fractions,
                  std::uint64_t seed) {
    if (ids.empty()) throw DataError("cannot split an empty id list");
    double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");
    for (double f : fractions)
        if (f < 0.0) throw DataError("split fractions must be non-negative");

    std::vector<std::string> shuffled = ids;
    SplitMix64 rng(seed);
    fisher_yates(shuffled, rng);

    const auto n = static_cast<double>(ids.size());
    auto n_query = static_cast<std::size_t>(std::floor(fractions[1] * n + 1e-9));
    auto n_test = static_cast<std::size_t>(std::floor(fractions[2] * n + 1e-9));
    if (n_query + n_test > ids.size()) throw DataError("split fractions overflow the id list");
    std::size_t n_train = ids.size() - n_query - n_test;

    if ((fractions[0] > 0.0 && n_train == 0) || (fractions[1] > 0.0 && n_query == 0) ||
        (fractions[2] > 0.0 && n_test == 0))
        throw DataError("empty partition: a positive fraction received no ids");

    SplitResult result;
    result.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    result.query.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                        shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_query));
    result.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_query),
                       shuffled.end());
    return result;
}

void write_image(std::ostream& out, const std::vector<double>& image, int height, int width,
                 int channels) {
    if (image.size() != static_cast<std::size_t>(channels) * height * width)
        throw DataError("image buffer does not match its stated dimensions");
    out << "IMG v1\n" << height << ' ' << width << ' ' << channels << '\n';
    for (int ch = 0; ch < channels; ++ch)
        for (int r = 0; r < height; ++r) {
            const double* row =
                image.data() + (static_cast<std::size_t>(ch) * height + r) * width;
            for (int c = 0; c < width; ++c) {
                if (c) out << ' ';
                out << format_double(row[c]);
            }
            out << '\n';
        }
}

ImageData read_image(std::istream& in) {
    std::string line;
    if (!read_line(in, line) || line != "IMG v1")
        throw DataError("malformed header: expected 'IMG v1' on line 1");
    if (!read_line(in, line)) throw DataError("malformed header: missing 'H W channels' line");
    auto dims = split_fields(line);
    if (dims.size() != 3)
        throw DataError("malformed header: expected 'H W channels', got '" + line + "'");
    ImageData img;
    img.height = static_cast<int>(parse_int(dims[0], "height"));
    img.width = static_cast<int>(parse_int(dims[1], "width"));
    img.channels = static_cast<int>(parse_int(dims[2], "channels"));
    if (img.height < 1 || img.width < 1 || img.channels < 1)
        throw DataError("malformed header: dimensions must be >= 1");
    img.pixels.reserve(static_cast<std::size_t>(img.channels) * img.height * img.width);
    const int rows = img.channels * img.height;
    for (int r = 0; r < rows; ++r) {
        if (!read_line(in, line))
            throw DataError("truncated image: expected " + std::to_string(rows) + " rows");
        auto fields = split_fields(line);
        if (static_cast<int>(fields.size()) != img.width)
            throw DataError("row length mismatch on image row " + std::to_string(r));
        for (auto f : fields) {
            double v = parse_double(f, "pixel value");
            if (!std::isfinite(v)) throw DataError("non-finite pixel value");
            img.pixels.push_back(v);
        }
    }
    return img;
}

void write_image_file(const std::string& path, const std::vector<double>& image, int height,
                      int width, int channels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image file: " + path);
    write_image(out, image, height, width, channels);
}

ImageData read_image_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open image file: " + path);
    try {
        return read_image(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

}  // namespace rrl
