#include "oocdr/method.hpp"

#include <cstring>
#include <fstream>

#include "oocdr/io.hpp"

namespace oocdr {
namespace {

class ByteSink {
public:
    template <typename T>
    void put(const T& v) {
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    template <typename Derived>
    void put_matrix(const Eigen::DenseBase<Derived>& m) {
        put<std::int64_t>(m.rows());
        put<std::int64_t>(m.cols());
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) put<double>(m(i, j));
    }
    std::vector<unsigned char> take() { return std::move(bytes_); }

private:
    std::vector<unsigned char> bytes_;
};

template <typename Derived>
void save_part(const std::filesystem::path& prefix, const std::string& part, const Eigen::MatrixBase<Derived>& m) {
    DataMatrixD dm;
    dm.data = m;
    write_matrix(prefix.string() + "." + part + ".mat", dm);
    // The .mat copy is f32; the .f64 copy keeps reloads exact.
    const auto path = prefix.string() + "." + part + ".f64";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const std::int64_t shape[2] = {dm.data.rows(), dm.data.cols()};
    out.write(reinterpret_cast<const char*>(shape), sizeof shape);
    out.write(reinterpret_cast<const char*>(dm.data.data()), static_cast<std::streamsize>(dm.data.size() * sizeof(double)));
    if (!out) throw IoError("write failed (" + path + ")");
}

RowMatrix<double> load_part(const std::filesystem::path& prefix, const std::string& part) {
    const auto path = prefix.string() + "." + part + ".f64";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open (" + path + ")");
    std::int64_t shape[2] = {0, 0};
    in.read(reinterpret_cast<char*>(shape), sizeof shape);
    if (!in || shape[0] < 0 || shape[1] < 0 ||
        static_cast<std::uint64_t>(shape[0]) * static_cast<std::uint64_t>(shape[1]) >
            std::filesystem::file_size(path) / sizeof(double))
        throw IoError("corrupt model part (" + path + ")");
    RowMatrix<double> m(shape[0], shape[1]);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw IoError("truncated model part (" + path + ")");
    return m;
}

void write_model_file(const std::filesystem::path& prefix, const std::string& id, KeyValues kv) {
    kv.insert(kv.begin(), {"method", id});
    write_key_values(prefix.string() + ".model", kv);
}

std::string init_name(MdsInit i) { return i == MdsInit::nearest ? "nn" : "mean"; }

// ---- PCA -------------------------------------------------------------------

class PcaFitted final : public FittedModel {
public:
    explicit PcaFitted(PcaModel<double> m) : m_(std::move(m)) {}
    std::string method_id() const override { return "pca"; }
    Index input_dims() const override { return m_.mean.size(); }
    Index output_dims() const override { return m_.components.cols(); }
    RowMatrix<double> transform(const RowMatrix<double>& points, int threads) const override {
        return pca_transform(m_, points, threads);
    }
    std::vector<unsigned char> serialize() const override {
        ByteSink s;
        s.put_matrix(m_.mean);
        s.put_matrix(m_.components);
        s.put_matrix(m_.eigenvalues);
        return s.take();
    }
    KeyValues hyperparameters() const override { return {{"dims", std::to_string(output_dims())}}; }
    void save(const std::filesystem::path& prefix) const override {
        save_part(prefix, "mean", m_.mean.transpose());
        save_part(prefix, "eigenvalues", m_.eigenvalues.transpose());
        save_part(prefix, "components", m_.components);
        write_model_file(prefix, method_id(), hyperparameters());
    }
    const PcaModel<double>& model() const { return m_; }

private:
    PcaModel<double> m_;
};

class PcaMethod final : public DrMethod {
public:
    explicit PcaMethod(Index dims) : dims_(dims) {}
    std::string id() const override { return "pca"; }
    Index output_dims() const override { return dims_; }
    FitOutput fit(const RowMatrix<double>& reference, std::uint64_t) const override {
        auto f = pca_fit(reference, dims_);
        return {std::move(f.embedding), std::make_shared<PcaFitted>(std::move(f.model))};
    }

private:
    Index dims_;
};

// ---- MDS -------------------------------------------------------------------

KeyValues mds_keys(const MdsOptions& o) {
    return {{"dims", std::to_string(o.dims)},
            {"iterations", std::to_string(o.iterations)},
            {"step_size", format_double(o.step_size)},
            {"distance_floor", format_double(o.distance_floor)},
            {"init_scale", format_double(o.init_scale)},
            {"oos_init", init_name(o.oos_init)}};
}

class MdsFitted final : public FittedModel {
public:
    MdsFitted(MdsModel<double> m, int threads) : m_(std::move(m)), threads_(threads) {}
    std::string method_id() const override { return "mds"; }
    Index input_dims() const override { return m_.reference.cols(); }
    Index output_dims() const override { return m_.embedding.cols(); }
    RowMatrix<double> transform(const RowMatrix<double>& points, int threads) const override {
        return mds_transform(m_, points, threads > 0 ? threads : threads_);
    }
    std::vector<unsigned char> serialize() const override {
        ByteSink s;
        s.put_matrix(m_.reference);
        s.put_matrix(m_.embedding);
        s.put(m_.options.iterations);
        s.put(m_.options.step_size);
        s.put(m_.options.distance_floor);
        s.put(static_cast<int>(m_.options.oos_init));
        return s.take();
    }
    KeyValues hyperparameters() const override { return mds_keys(m_.options); }
    void save(const std::filesystem::path& prefix) const override {
        save_part(prefix, "reference", m_.reference);
        save_part(prefix, "embedding", m_.embedding);
        write_model_file(prefix, method_id(), hyperparameters());
    }

private:
    MdsModel<double> m_;
    int threads_;
};

class MdsMethod final : public DrMethod {
public:
    MdsMethod(MdsOptions o, int threads) : o_(o), threads_(threads) {}
    std::string id() const override { return "mds"; }
    Index output_dims() const override { return o_.dims; }
    FitOutput fit(const RowMatrix<double>& reference, std::uint64_t seed) const override {
        auto f = mds_fit(reference, o_, seed);
        return {std::move(f.embedding), std::make_shared<MdsFitted>(std::move(f.model), threads_)};
    }

private:
    MdsOptions o_;
    int threads_;
};

// ---- t-SNE -----------------------------------------------------------------

KeyValues tsne_keys(const TsneOptions& o) {
    KeyValues kv{{"dims", std::to_string(o.dims)},
                 {"perplexity", format_double(o.perplexity)},
                 {"iterations", std::to_string(o.iterations)},
                 {"exaggeration", format_double(o.exaggeration)},
                 {"exaggeration_iterations", std::to_string(o.exaggeration_iterations)},
                 {"momentum_early", format_double(o.momentum_early)},
                 {"momentum_late", format_double(o.momentum_late)},
                 {"oos_iterations", std::to_string(o.oos_iterations)},
                 {"k_init", std::to_string(o.k_init)},
                 {"oos_momentum", format_double(o.oos_momentum)},
                 {"oos_learning_rate_factor", format_double(o.oos_learning_rate_factor)}};
    if (o.learning_rate) kv.emplace_back("learning_rate", format_double(*o.learning_rate));
    return kv;
}

class TsneFitted final : public FittedModel {
public:
    TsneFitted(TsneModel<double> m, int threads) : m_(std::move(m)), threads_(threads) {}
    std::string method_id() const override { return "tsne"; }
    Index input_dims() const override { return m_.reference.cols(); }
    Index output_dims() const override { return m_.embedding.cols(); }
    RowMatrix<double> transform(const RowMatrix<double>& points, int threads) const override {
        return tsne_transform(m_, points, threads > 0 ? threads : threads_);
    }
    std::vector<unsigned char> serialize() const override {
        ByteSink s;
        s.put_matrix(m_.reference);
        s.put_matrix(m_.embedding);
        s.put_matrix(m_.sigma);
        s.put(m_.options.perplexity);
        s.put(m_.options.oos_iterations);
        s.put(m_.options.k_init);
        s.put(m_.options.oos_momentum);
        s.put(m_.options.oos_learning_rate_factor);
        return s.take();
    }
    KeyValues hyperparameters() const override { return tsne_keys(m_.options); }
    void save(const std::filesystem::path& prefix) const override {
        save_part(prefix, "reference", m_.reference);
        save_part(prefix, "embedding", m_.embedding);
        save_part(prefix, "sigma", m_.sigma.transpose());
        write_model_file(prefix, method_id(), hyperparameters());
    }

private:
    TsneModel<double> m_;
    int threads_;
};

class TsneMethod final : public DrMethod {
public:
    TsneMethod(TsneOptions o, int threads) : o_(o), threads_(threads) { o_.threads = threads; }
    std::string id() const override { return "tsne"; }
    Index output_dims() const override { return o_.dims; }
    FitOutput fit(const RowMatrix<double>& reference, std::uint64_t seed) const override {
        auto f = tsne_fit(reference, o_, seed);
        return {std::move(f.embedding), std::make_shared<TsneFitted>(std::move(f.model), threads_)};
    }

private:
    TsneOptions o_;
    int threads_;
};

int get_int(const std::map<std::string, std::string>& kv, const std::string& k) {
    return static_cast<int>(parse_u64(require_key(kv, k), k));
}

double get_double(const std::map<std::string, std::string>& kv, const std::string& k) {
    return parse_double(require_key(kv, k), k);
}

}  // namespace

std::unique_ptr<DrMethod> make_method(const MethodConfig& config) {
    if (config.dims < 1) throw ValidationError("output dims must be positive");
    if (config.id == "pca") return std::make_unique<PcaMethod>(config.dims);
    if (config.id == "mds") {
        auto o = config.mds;
        o.dims = config.dims;
        o.validate();
        return std::make_unique<MdsMethod>(o, config.threads);
    }
    if (config.id == "tsne") {
        auto o = config.tsne;
        o.dims = config.dims;
        o.validate();
        return std::make_unique<TsneMethod>(o, config.threads);
    }
    throw ValidationError("unknown method '" + config.id + "' (expected pca, mds or tsne)");
}

std::shared_ptr<const FittedModel> load_model(const std::filesystem::path& prefix) {
    const auto kv = read_key_values(prefix.string() + ".model");
    const auto& id = require_key(kv, "method");
    if (id == "pca") {
        PcaModel<double> m;
        m.mean = load_part(prefix, "mean").row(0).transpose();
        m.eigenvalues = load_part(prefix, "eigenvalues").row(0).transpose();
        m.components = load_part(prefix, "components");
        return std::make_shared<PcaFitted>(std::move(m));
    }
    if (id == "mds") {
        MdsModel<double> m;
        m.reference = load_part(prefix, "reference");
        m.embedding = load_part(prefix, "embedding");
        m.options.dims = m.embedding.cols();
        m.options.iterations = get_int(kv, "iterations");
        m.options.step_size = get_double(kv, "step_size");
        m.options.distance_floor = get_double(kv, "distance_floor");
        m.options.init_scale = get_double(kv, "init_scale");
        m.options.oos_init = require_key(kv, "oos_init") == "mean" ? MdsInit::mean : MdsInit::nearest;
        return std::make_shared<MdsFitted>(std::move(m), 1);
    }
    if (id == "tsne") {
        TsneModel<double> m;
        m.reference = load_part(prefix, "reference");
        m.embedding = load_part(prefix, "embedding");
        m.sigma = load_part(prefix, "sigma").row(0).transpose();
        auto& o = m.options;
        o.dims = m.embedding.cols();
        o.perplexity = get_double(kv, "perplexity");
        o.iterations = get_int(kv, "iterations");
        o.exaggeration = get_double(kv, "exaggeration");
        o.exaggeration_iterations = get_int(kv, "exaggeration_iterations");
        o.momentum_early = get_double(kv, "momentum_early");
        o.momentum_late = get_double(kv, "momentum_late");
        o.oos_iterations = get_int(kv, "oos_iterations");
        o.k_init = get_int(kv, "k_init");
        o.oos_momentum = get_double(kv, "oos_momentum");
        o.oos_learning_rate_factor = get_double(kv, "oos_learning_rate_factor");
        if (kv.count("learning_rate")) o.learning_rate = get_double(kv, "learning_rate");
        return std::make_shared<TsneFitted>(std::move(m), 1);
    }
    throw ValidationError("unknown method '" + id + "' in model file");
}

std::uint64_t fnv1a(const std::vector<unsigned char>& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (auto b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace oocdr
