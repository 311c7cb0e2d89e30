#include "gcfed/data.hpp"

#include <fstream>
#include <iterator>
#include <random>
#include <vector>

#include "gcfed/seed.hpp"

namespace gcfed {

void SyntheticTaskSpec::validate() const {
    if (num_classes < 2) throw ConfigError("synthetic.num_classes must be >= 2");
    if (input_dim < num_classes) throw ConfigError("synthetic.input_dim must be >= synthetic.num_classes");
    if (!(noise > 0.0)) throw ConfigError("synthetic.noise must be > 0");
    if (samples_per_class < 5) throw ConfigError("synthetic.samples_per_class must be >= 5");
}

TrainTest generate_synthetic(const SyntheticTaskSpec& spec) {
    spec.validate();
    TrainTest out;
    for (Dataset* d : {&out.train, &out.test}) {
        d->sample_shape = {spec.input_dim};
        d->num_classes = spec.num_classes;
    }
    Rng rng = make_rng(spec.seed, "synthetic");
    std::normal_distribution<double> gauss(0.0, spec.noise);
    std::vector<double> x(spec.input_dim);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t j = 0; j < spec.samples_per_class; ++j) {
            for (std::size_t i = 0; i < spec.input_dim; ++i) {
                x[i] = (i == c ? spec.separation : 0.0) + gauss(rng);
            }
            Dataset& dst = j % 5 == 4 ? out.test : out.train;
            dst.features.insert(dst.features.end(), x.begin(), x.end());
            dst.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open IDX file " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off, const std::filesystem::path& path) {
    if (off + 4 > buf.size()) {
        throw DataError(path.string() + ": truncated header at offset " + std::to_string(off));
    }
    return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
           (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t num_classes,
                 std::size_t limit) {
    const auto img = read_all(images);
    const auto lab = read_all(labels);

    const std::uint32_t img_magic = be32(img, 0, images);
    if (img_magic != 0x00000803u) {
        throw DataError(images.string() + ": bad image magic at offset 0 (got " + std::to_string(img_magic) +
                        ", expected 2051)");
    }
    const std::uint32_t lab_magic = be32(lab, 0, labels);
    if (lab_magic != 0x00000801u) {
        throw DataError(labels.string() + ": bad label magic at offset 0 (got " + std::to_string(lab_magic) +
                        ", expected 2049)");
    }
    const std::size_t n = be32(img, 4, images);
    const std::size_t rows = be32(img, 8, images);
    const std::size_t cols = be32(img, 12, images);
    const std::size_t n_lab = be32(lab, 4, labels);
    if (n != n_lab) {
        throw DataError("IDX count mismatch: " + images.string() + " has " + std::to_string(n) + " images (offset 4), " +
                        labels.string() + " has " + std::to_string(n_lab) + " labels (offset 4)");
    }
    constexpr std::size_t kImgHeader = 16, kLabHeader = 8;
    if (img.size() != kImgHeader + n * rows * cols) {
        throw DataError(images.string() + ": expected " + std::to_string(kImgHeader + n * rows * cols) +
                        " bytes, found " + std::to_string(img.size()) + " (payload starts at offset 16)");
    }
    if (lab.size() != kLabHeader + n) {
        throw DataError(labels.string() + ": expected " + std::to_string(kLabHeader + n) + " bytes, found " +
                        std::to_string(lab.size()) + " (payload starts at offset 8)");
    }

    const std::size_t keep = limit > 0 && limit < n ? limit : n;
    Dataset d;
    d.sample_shape = {1, rows, cols};
    d.num_classes = num_classes;
    d.features.reserve(keep * rows * cols);
    d.labels.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const unsigned char y = lab[kLabHeader + i];
        if (y >= num_classes) {
            throw DataError(labels.string() + ": label " + std::to_string(y) + " at offset " +
                            std::to_string(kLabHeader + i) + " exceeds " + std::to_string(num_classes - 1));
        }
        d.labels.push_back(y);
        const std::size_t base = kImgHeader + i * rows * cols;
        for (std::size_t p = 0; p < rows * cols; ++p) d.features.push_back(img[base + p] / 255.0);
    }
    return d;
}

}  // namespace gcfed
