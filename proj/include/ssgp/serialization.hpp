#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ssgp/factor_model.hpp"

namespace ssgp {

inline constexpr const char* kModelFormat = "ssgp-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline nlohmann::json vector_json(const VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline VectorXd json_vector(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string("model file: '") + what + "' must be an array");
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

}  // namespace detail

/// Versioned JSON document. Doubles are written with round-trip precision, so a reloaded
/// model scores identically.
inline nlohmann::json to_json(const FactorModel& model) {
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["mode"] = to_string(model.mode);
    j["latents"] = nlohmann::json::array();
    for (const auto& s : model.latent_specs) j["latents"].push_back(to_string(s));
    j["loading"] = nlohmann::json::array();
    for (Index i = 0; i < model.loading.rows(); ++i) j["loading"].push_back(detail::vector_json(model.loading.row(i)));
    j["offset"] = detail::vector_json(model.offset);
    if (model.mode == LoadingMode::orthogonal) j["noise_variance"] = model.noise(0);
    else j["noise"] = detail::vector_json(model.noise);
    if (model.standardization) {
        j["standardization"] = {{"mean", detail::vector_json(model.standardization->mean)},
                                {"scale", detail::vector_json(model.standardization->scale)}};
    } else {
        j["standardization"] = nullptr;
    }
    j["time_scale"] = model.time_scale;
    j["training_log"] = nlohmann::json::array();
    for (double v : model.training_log) j["training_log"].push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
    return j;
}

inline FactorModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string()) != kModelFormat) throw ConfigError("model file: not an ssgp model document");
        const int version = j.at("version").get<int>();
        if (version != kModelVersion)
            throw ConfigError("model file: unsupported version " + std::to_string(version) + " (expected " +
                              std::to_string(kModelVersion) + ")");
        const LoadingMode mode = parse_loading_mode(j.at("mode").get<std::string>());
        std::vector<KernelSpec> specs;
        for (const auto& e : j.at("latents")) specs.push_back(parse_kernel(e.get<std::string>()));
        const auto& rows = j.at("loading");
        const Index d = static_cast<Index>(rows.size());
        const Index k = static_cast<Index>(specs.size());
        MatrixXd loading(d, k);
        for (Index i = 0; i < d; ++i) {
            const VectorXd row = detail::json_vector(rows[static_cast<std::size_t>(i)], "loading");
            if (row.size() != k) throw ConfigError("model file: loading row " + std::to_string(i) + " has wrong length");
            loading.row(i) = row;
        }
        const VectorXd offset = detail::json_vector(j.at("offset"), "offset");
        VectorXd noise = mode == LoadingMode::orthogonal ? VectorXd::Constant(d, j.at("noise_variance").get<double>())
                                                         : detail::json_vector(j.at("noise"), "noise");
        FactorModel m = FactorModel::make(std::move(specs), loading, offset, noise, mode);
        if (j.contains("standardization") && !j["standardization"].is_null()) {
            Standardization st{detail::json_vector(j["standardization"].at("mean"), "standardization.mean"),
                               detail::json_vector(j["standardization"].at("scale"), "standardization.scale")};
            if (st.mean.size() != d || st.scale.size() != d)
                throw ConfigError("model file: standardization vectors must have D entries");
            m.standardization = std::move(st);
        }
        m.time_scale = j.value("time_scale", 1.0);
        if (!(m.time_scale > 0.0)) throw ConfigError("model file: time_scale must be positive");
        if (j.contains("training_log"))
            for (const auto& v : j["training_log"]) m.training_log.push_back(v.is_null() ? kNaN : v.get<double>());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    }
}

inline void save_model(const std::filesystem::path& path, const FactorModel& model) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write model '" + path.string() + "'");
    out << to_json(model).dump(2) << '\n';
}

inline FactorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model file '" + path.string() + "': " + e.what());
    }
    return model_from_json(j);
}

}  // namespace ssgp
