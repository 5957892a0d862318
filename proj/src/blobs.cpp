#include "oocdr/blobs.hpp"

#include <algorithm>

namespace oocdr {

void SyntheticSpec::validate() const {
    if (d < 1) throw ValidationError("blob dimensionality must be at least 1");
    if (k_clusters < 1) throw ValidationError("cluster count must be at least 1");
    if (n < k_clusters) throw ValidationError("point count must be at least the cluster count");
    if (!(cluster_std > 0)) throw ValidationError("cluster_std must be positive");
}

BlobGenerator::BlobGenerator(const SyntheticSpec& spec)
    : spec_(spec), rng_(spec.seed), noise_(0.0, spec.cluster_std) {
    spec_.validate();
    std::uniform_real_distribution<double> box(-10.0, 10.0);
    centers_.resize(spec_.k_clusters, spec_.d);
    for (Index c = 0; c < centers_.rows(); ++c)
        for (Index j = 0; j < centers_.cols(); ++j) centers_(c, j) = box(rng_);
}

DataMatrixD BlobGenerator::next(std::uint64_t count) {
    const auto n = std::min(count, spec_.n - produced_);
    DataMatrixD out;
    out.row_offset = produced_;
    out.data.resize(static_cast<Index>(n), spec_.d);
    out.labels.emplace(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto label = static_cast<Index>((produced_ + i) % spec_.k_clusters);
        (*out.labels)[i] = static_cast<std::int32_t>(label);
        for (Index j = 0; j < out.data.cols(); ++j)
            out.data(static_cast<Index>(i), j) = centers_(label, j) + noise_(rng_);
    }
    produced_ += n;
    return out;
}

DataMatrixD generate_blobs(const SyntheticSpec& spec) {
    BlobGenerator gen(spec);
    return gen.next(spec.n);
}

MatrixHeader write_blobs(const std::filesystem::path& path, const SyntheticSpec& spec,
                         std::uint64_t chunk_rows) {
    BlobGenerator gen(spec);
    MatrixWriter w(path, spec.d, true);
    while (gen.produced() < spec.n) w.append(gen.next(chunk_rows));
    return w.finish();
}

}  // namespace oocdr
