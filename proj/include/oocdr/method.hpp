#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oocdr/keyvalue.hpp"
#include "oocdr/mds.hpp"
#include "oocdr/pca.hpp"
#include "oocdr/tsne.hpp"
#include "oocdr/types.hpp"

namespace oocdr {

/// Learned parameters of a fitted method. Transforms are const: a model
/// never changes once fitted.
class FittedModel {
public:
    virtual ~FittedModel() = default;

    virtual std::string method_id() const = 0;
    virtual Index input_dims() const = 0;
    virtual Index output_dims() const = 0;

    /// Maps every row of `points` independently of the others.
    virtual RowMatrix<double> transform(const RowMatrix<double>& points, int threads) const = 0;

    /// Exact byte image of the parameters; equal bytes means equal model.
    virtual std::vector<unsigned char> serialize() const = 0;

    virtual KeyValues hyperparameters() const = 0;

    /// Writes the parameter matrices as `<prefix>.<part>.mat` plus a
    /// `<prefix>.model` key=value file.
    virtual void save(const std::filesystem::path& prefix) const = 0;
};

struct FitOutput {
    RowMatrix<double> embedding;
    std::shared_ptr<const FittedModel> model;
};

class DrMethod {
public:
    virtual ~DrMethod() = default;
    virtual std::string id() const = 0;
    virtual Index output_dims() const = 0;
    virtual FitOutput fit(const RowMatrix<double>& reference, std::uint64_t seed) const = 0;
};

struct MethodConfig {
    std::string id = "pca";
    Index dims = 2;
    MdsOptions mds;
    TsneOptions tsne;
    int threads = 1;
};

std::unique_ptr<DrMethod> make_method(const MethodConfig& config);

std::shared_ptr<const FittedModel> load_model(const std::filesystem::path& prefix);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::vector<unsigned char>& bytes);

}  // namespace oocdr
