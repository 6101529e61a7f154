#ifndef PFAN_DATASETS_HPP
#define PFAN_DATASETS_HPP

#include <optional>
#include <string>
#include <vector>

#include "pfan/matrix.hpp"
#include "pfan/rng.hpp"

namespace pfan {

enum class DomainTag { Source, Target };

// Features plus optional labels for one domain.  Target datasets handed to
// training code always have labels == nullopt; ground truth travels
// separately (see GenResult).
struct DomainDataset {
    Matrix features;                         // n x d
    std::optional<std::vector<int>> labels;  // values in [0, class_count)
    DomainTag domain_tag = DomainTag::Source;
    int class_count = 0;

    int size() const { return features.rows; }
    int dim() const { return features.cols; }

    // Per-class sample counts (labels required).
    std::vector<int> class_histogram() const;

    void validate() const;
};

// Per-dimension affine transform fitted on source statistics only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std_dev;  // floored at 1e-12

    static Standardizer fit(const Matrix& features);
    void apply(Matrix& features) const;
};

struct SyntheticShiftSpec {
    int class_count = 4;
    int input_dim = 2;
    int per_class = 100;          // samples per class per domain
    double radius = 4.0;          // class-mean circle radius
    double rotation = 0.0;        // radians, applied to target
    std::vector<double> translation;  // length input_dim (empty = zero)
    double noise_sigma = 0.5;
    double target_noise_scale = 1.0;  // optional per-class noise inflation
    std::uint64_t seed = 0;

    void validate() const;
};

// Ground-truth target labels leave the generator in this side channel; the
// eval module is the only consumer.  Training interfaces take the
// label-stripped DomainDataset.
struct GenResult {
    DomainDataset source;        // labeled
    DomainDataset target;        // labels stripped
    std::vector<int> target_truth;
    Standardizer standardizer;
};

// Isotropic Gaussians at class means evenly spaced on a circle; target means
// rotated/translated.  Both domains standardized with source statistics.
GenResult gen_gaussian_shift(const SyntheticShiftSpec& spec);

// Two interleaved half circles; target point cloud rotated about the origin.
GenResult gen_two_moons_shift(const SyntheticShiftSpec& spec);

// Seeded uniform subsample without replacement, labels carried along.
DomainDataset subsample(const DomainDataset& ds, int n, std::uint64_t seed);
std::vector<int> subsample_indices(int population, int n, std::uint64_t seed);

// One epoch of batch index slices: seeded shuffle, final short batch kept.
std::vector<std::vector<int>> epoch_batches(int n, int batch_size, Rng& rng);

// Cycles through epochs, reshuffling at each wrap.
class BatchCycler {
public:
    BatchCycler(int n, int batch_size, Rng rng);
    const std::vector<int>& next();

private:
    int n_;
    int batch_size_;
    Rng rng_;
    std::vector<std::vector<int>> epoch_;
    std::size_t pos_ = 0;
};

// Bilinear resize of row-flattened images (one image per row).
Matrix downsample_bilinear(const Matrix& images, int in_h, int in_w, int out_h, int out_w);

}  // namespace pfan

#endif
