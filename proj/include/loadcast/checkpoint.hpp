#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "loadcast/train.hpp"

namespace loadcast {

// ---------------------------------------------------------------------------
// Checkpoint file format (JSON, UTF-8). Every floating value is encoded as a
// 16-hex-digit big-endian IEEE-754 binary64 string so round trips are
// bit-exact; each encoded array carries a CRC-32 of its hex text so silent
// corruption is caught at load time and attributed to its field.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string hex_double(double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llX", static_cast<unsigned long long>(bits));
    return buf;
}

inline double unhex_double(std::string_view hex, const std::string& field) {
    if (hex.size() != 16)
        throw FormatError("checkpoint field '" + field + "': expected 16 hex digits, got " +
                          std::to_string(hex.size()));
    std::uint64_t bits = 0;
    for (char c : hex) {
        bits <<= 4;
        if (c >= '0' && c <= '9') bits |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'A' && c <= 'F') bits |= static_cast<std::uint64_t>(c - 'A' + 10);
        else if (c >= 'a' && c <= 'f') bits |= static_cast<std::uint64_t>(c - 'a' + 10);
        else
            throw FormatError("checkpoint field '" + field + "': invalid hex digit '" +
                              std::string(1, c) + "'");
    }
    return std::bit_cast<double>(bits);
}

inline std::uint32_t crc32(std::string_view s) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xFFFFFFFFu;
    for (unsigned char ch : s) c = table[(c ^ ch) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

inline std::string encode_doubles(const double* data, std::size_t n) {
    std::string out;
    out.reserve(n * 16);
    for (std::size_t i = 0; i < n; ++i) out += hex_double(data[i]);
    return out;
}

inline void decode_doubles(const std::string& hex, double* out, std::size_t n,
                           const std::string& field) {
    if (hex.size() != n * 16)
        throw FormatError("checkpoint field '" + field + "': expected " + std::to_string(n * 16) +
                          " hex digits, got " + std::to_string(hex.size()));
    for (std::size_t i = 0; i < n; ++i)
        out[i] = unhex_double(std::string_view(hex).substr(i * 16, 16), field);
}

inline nlohmann::json tensor_json(const Tensor& t) {
    const std::string hex = encode_doubles(t.data(), t.size());
    return {{"shape", {t.rows(), t.cols()}}, {"data", hex}, {"crc32", crc32(hex)}};
}

inline Tensor tensor_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.contains("shape") || !j.contains("data") || !j.contains("crc32"))
        throw FormatError("checkpoint field '" + field + "': missing shape/data/crc32");
    const std::size_t rows = j["shape"][0].get<std::size_t>();
    const std::size_t cols = j["shape"][1].get<std::size_t>();
    const std::string& hex = j["data"].get_ref<const std::string&>();
    if (crc32(hex) != j["crc32"].get<std::uint32_t>())
        throw FormatError("checkpoint field '" + field + "': checksum mismatch");
    Tensor t(rows, cols);
    decode_doubles(hex, t.data(), t.size(), field);
    return t;
}

} // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& cp) {
    using nlohmann::json;
    json j;
    j["format_version"] = cp.format_version;
    j["dims"] = {{"seq_len", cp.dims.seq_len},   {"in_dim", cp.dims.in_dim},
                 {"embed_dim", cp.dims.embed_dim}, {"hidden", cp.dims.hidden},
                 {"q_dim", cp.dims.q_dim},       {"out_len", cp.dims.out_len}};
    j["features"] = {{"time_onehots", cp.features.time_onehots},
                     {"stats", cp.features.stats},
                     {"similarity", cp.features.sim}};
    j["scaler"] = {{"min", detail::hex_double(cp.scaler.min_value)},
                   {"max", detail::hex_double(cp.scaler.max_value)}};

    const std::size_t n_c = cp.clusters.n_clusters();
    std::string centers_hex;
    for (const std::vector<double>& c : cp.clusters.centers)
        centers_hex += detail::encode_doubles(c.data(), c.size());
    j["clusters"] = {{"n_c", n_c},
                     {"dim", cp.clusters.dim()},
                     {"centers", centers_hex},
                     {"crc32", detail::crc32(centers_hex)},
                     {"final_objective", detail::hex_double(cp.clusters.final_objective)},
                     {"iterations_run", cp.clusters.iterations_run},
                     {"objective_history",
                      detail::encode_doubles(cp.clusters.objective_history.data(),
                                             cp.clusters.objective_history.size())}};

    json params = json::object();
    for (ModelParameters::Entry& e : const_cast<Checkpoint&>(cp).params.entries())
        params[e.name] = detail::tensor_json(*e.tensor);
    j["params"] = params;

    const TrainConfig& tc = cp.train_config;
    j["train_config"] = {{"lambda_perturb", detail::hex_double(tc.lambda_perturb)},
                         {"lr_offline", detail::hex_double(tc.lr_offline)},
                         {"lr_online", detail::hex_double(tc.lr_online)},
                         {"batch_size", tc.batch_size},
                         {"max_epochs_offline", tc.max_epochs_offline},
                         {"patience_offline", tc.patience_offline},
                         {"max_epochs_online", tc.max_epochs_online},
                         {"tolerance_online", tc.tolerance_online},
                         {"validation_fraction", detail::hex_double(tc.validation_fraction)},
                         {"early_stop_epsilon", detail::hex_double(tc.early_stop_epsilon)},
                         {"grad_clip", detail::hex_double(tc.grad_clip)},
                         {"forget_bias_one", tc.forget_bias_one},
                         {"seed", tc.seed}};

    json hist = json::array();
    for (const EpochRecord& r : cp.history)
        hist.push_back({{"epoch", r.epoch},
                        {"train", detail::hex_double(r.train_loss)},
                        {"val", detail::hex_double(r.val_loss)}});
    j["history"] = hist;
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint cp;
    if (!j.contains("format_version")) throw FormatError("checkpoint: missing format_version");
    cp.format_version = j["format_version"].get<int>();
    if (cp.format_version != Checkpoint::current_format_version)
        throw FormatError("checkpoint: unsupported format_version " +
                          std::to_string(cp.format_version) + " (this build reads version " +
                          std::to_string(Checkpoint::current_format_version) + ")");
    const nlohmann::json& d = j.at("dims");
    cp.dims.seq_len = d.at("seq_len").get<std::size_t>();
    cp.dims.in_dim = d.at("in_dim").get<std::size_t>();
    cp.dims.embed_dim = d.at("embed_dim").get<std::size_t>();
    cp.dims.hidden = d.at("hidden").get<std::size_t>();
    cp.dims.q_dim = d.at("q_dim").get<std::size_t>();
    cp.dims.out_len = d.at("out_len").get<std::size_t>();

    const nlohmann::json& f = j.at("features");
    cp.features.time_onehots = f.at("time_onehots").get<bool>();
    cp.features.stats = f.at("stats").get<bool>();
    cp.features.sim = f.at("similarity").get<bool>();
    cp.features.fcnn = cp.dims.q_dim > 0;

    cp.scaler.min_value =
        detail::unhex_double(j.at("scaler").at("min").get_ref<const std::string&>(), "scaler.min");
    cp.scaler.max_value =
        detail::unhex_double(j.at("scaler").at("max").get_ref<const std::string&>(), "scaler.max");

    const nlohmann::json& cl = j.at("clusters");
    const std::size_t n_c = cl.at("n_c").get<std::size_t>();
    const std::size_t cdim = cl.at("dim").get<std::size_t>();
    const std::string& centers_hex = cl.at("centers").get_ref<const std::string&>();
    if (detail::crc32(centers_hex) != cl.at("crc32").get<std::uint32_t>())
        throw FormatError("checkpoint field 'clusters.centers': checksum mismatch");
    if (centers_hex.size() != n_c * cdim * 16)
        throw FormatError("checkpoint field 'clusters.centers': wrong length");
    cp.clusters.centers.assign(n_c, std::vector<double>(cdim));
    for (std::size_t c = 0; c < n_c; ++c)
        detail::decode_doubles(centers_hex.substr(c * cdim * 16, cdim * 16),
                               cp.clusters.centers[c].data(), cdim, "clusters.centers");
    cp.clusters.final_objective = detail::unhex_double(
        cl.at("final_objective").get_ref<const std::string&>(), "clusters.final_objective");
    cp.clusters.iterations_run = cl.at("iterations_run").get<int>();
    const std::string& oh = cl.at("objective_history").get_ref<const std::string&>();
    if (oh.size() % 16 != 0)
        throw FormatError("checkpoint field 'clusters.objective_history': wrong length");
    cp.clusters.objective_history.resize(oh.size() / 16);
    detail::decode_doubles(oh, cp.clusters.objective_history.data(),
                           cp.clusters.objective_history.size(), "clusters.objective_history");

    // shapes come from dims, so a file whose arrays disagree is rejected
    cp.params = init_params(cp.dims, 0);
    const nlohmann::json& pj = j.at("params");
    for (ModelParameters::Entry& e : cp.params.entries()) {
        if (!pj.contains(e.name))
            throw FormatError(std::string("checkpoint: missing parameter '") + e.name + "'");
        Tensor t = detail::tensor_from_json(pj[e.name], std::string("params.") + e.name);
        if (!t.same_shape(*e.tensor))
            throw FormatError(std::string("checkpoint: parameter '") + e.name + "' has shape " +
                              t.shape_str() + ", dims require " + e.tensor->shape_str());
        *e.tensor = std::move(t);
    }

    const nlohmann::json& tc = j.at("train_config");
    TrainConfig& c = cp.train_config;
    c.lambda_perturb =
        detail::unhex_double(tc.at("lambda_perturb").get_ref<const std::string&>(), "lambda_perturb");
    c.lr_offline = detail::unhex_double(tc.at("lr_offline").get_ref<const std::string&>(), "lr_offline");
    c.lr_online = detail::unhex_double(tc.at("lr_online").get_ref<const std::string&>(), "lr_online");
    c.batch_size = tc.at("batch_size").get<std::size_t>();
    c.max_epochs_offline = tc.at("max_epochs_offline").get<int>();
    c.patience_offline = tc.at("patience_offline").get<int>();
    c.max_epochs_online = tc.at("max_epochs_online").get<int>();
    c.tolerance_online = tc.at("tolerance_online").get<int>();
    c.validation_fraction = detail::unhex_double(
        tc.at("validation_fraction").get_ref<const std::string&>(), "validation_fraction");
    c.early_stop_epsilon = detail::unhex_double(
        tc.at("early_stop_epsilon").get_ref<const std::string&>(), "early_stop_epsilon");
    c.grad_clip = detail::unhex_double(tc.at("grad_clip").get_ref<const std::string&>(), "grad_clip");
    c.forget_bias_one = tc.at("forget_bias_one").get<bool>();
    c.seed = tc.at("seed").get<std::uint64_t>();

    for (const nlohmann::json& r : j.at("history"))
        cp.history.push_back({r.at("epoch").get<int>(),
                              detail::unhex_double(r.at("train").get_ref<const std::string&>(),
                                                   "history.train"),
                              detail::unhex_double(r.at("val").get_ref<const std::string&>(),
                                                   "history.val")});
    return cp;
}

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path);
    out << checkpoint_to_json(cp).dump(1) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint " + path + ": malformed JSON: " + e.what());
    }
    try {
        return checkpoint_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint " + path + ": " + e.what());
    }
}

} // namespace loadcast
