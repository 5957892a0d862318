#include "oocdr/metrics.hpp"

#include <chrono>

#include "oocdr/io.hpp"
#include "oocdr/pipeline.hpp"

namespace oocdr {

const MetricValue* MetricReport::find(const std::string& name) const {
    for (const auto& v : values)
        if (v.name == name) return &v;
    return nullptr;
}

KeyValues MetricReport::key_values() const {
    KeyValues kv;
    for (const auto& v : values) kv.emplace_back(v.name, format_double(v.value));
    kv.emplace_back("k", std::to_string(k));
    kv.emplace_back("block", std::to_string(block));
    kv.emplace_back("n", std::to_string(n));
    kv.emplace_back("scope", scope_name(scope));
    for (const auto& v : values) kv.emplace_back(v.name + "_seconds", format_double(v.seconds));
    return kv;
}

std::string MetricReport::csv_header() const {
    std::string s = "scope,n,k,block";
    for (const auto& v : values) s += "," + v.name;
    return s;
}

std::string MetricReport::csv_row() const {
    std::string s = scope_name(scope) + "," + std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(block);
    for (const auto& v : values) s += "," + format_double(v.value);
    return s;
}

std::string scope_name(MetricScope s) {
    switch (s) {
        case MetricScope::reference: return "reference";
        case MetricScope::oos: return "oos";
        default: return "all";
    }
}

MetricScope parse_scope(const std::string& s) {
    if (s == "all") return MetricScope::all;
    if (s == "reference") return MetricScope::reference;
    if (s == "oos") return MetricScope::oos;
    throw ValidationError("unknown scope '" + s + "' (expected all, reference or oos)");
}

MetricReport evaluate_matrices(const RowMatrix<double>& x, const RowMatrix<double>& y, const MetricParams& params) {
    MetricReport report;
    report.k = params.k;
    report.block = params.block;
    report.n = x.rows();
    report.scope = params.scope;
    for (const auto& name : params.metrics) {
        const auto t0 = std::chrono::steady_clock::now();
        double v = 0;
        if (name == "stress")
            v = stress(x, y, params.block);
        else if (name == "pearson")
            v = pearson_distance_correlation(x, y, params.block);
        else if (name == "knn")
            v = knn_precision(x, y, params.k, params.block);
        else if (name == "trust")
            v = trustworthiness(x, y, params.k, params.block);
        else
            throw ValidationError("unknown metric '" + name + "' (expected stress, pearson, knn, trust)");
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.values.push_back({name, v, secs});
    }
    return report;
}

MetricReport evaluate(const std::filesystem::path& projection, const std::filesystem::path& dataset,
                      const MetricParams& params) {
    const auto proj = read_matrix(projection);
    const auto data = read_matrix(dataset);
    if (proj.rows() != data.rows())
        throw ValidationError("projection has " + std::to_string(proj.rows()) + " rows but dataset has " +
                              std::to_string(data.rows()));
    if (params.scope == MetricScope::all) return evaluate_matrices(data.data, proj.data, params);
    if (!proj.labels) throw ValidationError("projection file has no provenance column; only scope=all is possible");

    std::vector<Index> keep;
    for (Index i = 0; i < proj.rows(); ++i) {
        const bool is_ref = (*proj.labels)[static_cast<std::size_t>(i)] == kReferenceRow;
        if (is_ref == (params.scope == MetricScope::reference)) keep.push_back(i);
    }
    RowMatrix<double> x(static_cast<Index>(keep.size()), data.dims());
    RowMatrix<double> y(static_cast<Index>(keep.size()), proj.dims());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        x.row(static_cast<Index>(r)) = data.data.row(keep[r]);
        y.row(static_cast<Index>(r)) = proj.data.row(keep[r]);
    }
    return evaluate_matrices(x, y, params);
}

}  // namespace oocdr
