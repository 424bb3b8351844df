#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "jawprint/error.hpp"
#include "jawprint/verifier.hpp"

namespace jawprint {

/// Container layout, all integers little-endian:
///   "JWPR" | u32 version | u64 header bytes | JSON header | u64 value count |
///   f64 values | u64 FNV-1a of everything before it
/// The JSON header carries the kind tag, identity, config snapshot and a blob
/// table; every parameter that affects a score lives in the f64 section.
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'J', 'W', 'P', 'R'};

namespace detail {

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    const std::vector<unsigned char>& bytes() const { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<unsigned char>& b, std::size_t end) : b_(b), end_(end) {}
    void need(std::size_t n) const {
        if (end_ - at_ < n) throw Error(ErrorKind::CorruptModelFile, "model file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[at_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[at_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + at_), n);
        at_ += n;
        return s;
    }
    std::size_t position() const { return at_; }

private:
    const std::vector<unsigned char>& b_;
    std::size_t end_;
    std::size_t at_ = 0;
};

inline std::uint64_t fnv1a_bytes(const unsigned char* p, std::size_t n) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 1099511628211ull;
    return h;
}

/// Named matrices packed back to back into one f64 section.
class BlobPack {
public:
    void put(const std::string& name, const Eigen::MatrixXd& m) {
        table_.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", values_.size()}});
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) values_.push_back(m(r, c));
    }
    void put(const std::string& name, const std::vector<double>& v) {
        put(name, Eigen::MatrixXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))));
    }
    nlohmann::json table() const { return table_; }
    const std::vector<double>& values() const { return values_; }

private:
    nlohmann::json table_ = nlohmann::json::array();
    std::vector<double> values_;
};

class BlobView {
public:
    BlobView(const nlohmann::json& table, std::vector<double> values) : values_(std::move(values)) {
        for (const auto& e : table) {
            const auto rows = e.at("rows").get<std::size_t>(), cols = e.at("cols").get<std::size_t>();
            const auto offset = e.at("offset").get<std::size_t>();
            if (offset > values_.size() || rows * cols > values_.size() - offset)
                throw Error(ErrorKind::CorruptModelFile, "blob '" + e.at("name").get<std::string>() + "' out of range");
            index_[e.at("name").get<std::string>()] = {rows, cols, offset};
        }
    }
    Eigen::MatrixXd matrix(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error(ErrorKind::CorruptModelFile, "missing blob '" + name + "'");
        const auto [rows, cols, offset] = it->second;
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        std::size_t k = offset;
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = values_[k++];
        return m;
    }
    Eigen::VectorXd vector(const std::string& name) const {
        const auto m = matrix(name);
        return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    }

private:
    std::map<std::string, std::tuple<std::size_t, std::size_t, std::size_t>> index_;
    std::vector<double> values_;
};

inline nlohmann::json descriptor_json(const FeatureDescriptor& d) {
    return {{"feature", std::string(d.name())}, {"axis", d.axis}, {"location", std::string(file_stem(d.location))}};
}

} // namespace detail

inline std::vector<unsigned char> serialize_model(const VerifierModel& model) {
    using nlohmann::json;
    detail::BlobPack blobs;
    json header;
    header["kind"] = std::string(to_string(model.kind));
    header["user_id"] = model.user_id;
    header["activity"] = std::string(to_string(model.activity));
    header["plan"] = model.plan.label();
    json locations = json::array();
    for (auto loc : model.plan.locations) locations.push_back(std::string(file_stem(loc)));
    header["locations"] = locations;
    blobs.put("threshold", std::vector<double>{model.threshold.threshold, model.threshold.eer});
    if (model.kind == ClassifierKind::Svm) {
        const auto& s = model.svm;
        json selected = json::array();
        for (const auto& d : model.selected) selected.push_back(detail::descriptor_json(d));
        header["selected"] = selected;
        header["selected_columns"] = model.selected_columns;
        blobs.put("svm.weights", Eigen::MatrixXd(s.weights));
        blobs.put("svm.scalars", std::vector<double>{s.bias, s.platt_a, s.platt_b});
        blobs.put("svm.norm.mean", Eigen::MatrixXd(s.normalizer.mean));
        blobs.put("svm.norm.stddev", Eigen::MatrixXd(s.normalizer.stddev));
    } else {
        const auto& m = model.lstm;
        const auto& c = m.config;
        header["lstm_input"] = std::string(to_string(model.lstm_input));
        header["feature_subwindows"] = model.feature_subwindows;
        header["input_dim"] = m.input_dim;
        header["config"] = {{"units_per_layer", c.units_per_layer}, {"layers", c.layers},
                            {"dropout", c.dropout}, {"learning_rate", c.learning_rate},
                            {"max_epochs", c.max_epochs}, {"early_stop_patience", c.early_stop_patience},
                            {"lr_reduce_factor", c.lr_reduce_factor}, {"lr_reduce_patience", c.lr_reduce_patience},
                            {"batch_size", c.batch_size}, {"seed", c.seed},
                            {"class_weighting", c.class_weighting}, {"validation_fraction", c.validation_fraction}};
        header["history"] = {{"epochs_run", m.history.epochs_run}, {"best_epoch", m.history.best_epoch},
                             {"best_monitor", m.history.best_monitor},
                             {"final_learning_rate", m.history.final_learning_rate}};
        header["layer_count"] = m.params.layers.size();
        for (std::size_t l = 0; l < m.params.layers.size(); ++l) {
            const auto p = "lstm." + std::to_string(l) + ".";
            blobs.put(p + "w", m.params.layers[l].w);
            blobs.put(p + "u", m.params.layers[l].u);
            blobs.put(p + "b", Eigen::MatrixXd(m.params.layers[l].b));
        }
        blobs.put("lstm.head_w", Eigen::MatrixXd(m.params.head_w));
        blobs.put("lstm.head_b", std::vector<double>{m.params.head_b});
        blobs.put("lstm.norm.mean", Eigen::MatrixXd(m.normalizer.mean));
        blobs.put("lstm.norm.stddev", Eigen::MatrixXd(m.normalizer.stddev));
    }
    header["blobs"] = blobs.table();
    const std::string text = header.dump();

    detail::ByteWriter w;
    w.raw(kModelMagic, 4);
    w.u32(kModelFormatVersion);
    w.u64(text.size());
    w.raw(text.data(), text.size());
    w.u64(blobs.values().size());
    for (double v : blobs.values()) w.f64(v);
    auto bytes = w.bytes();
    const auto sum = detail::fnv1a_bytes(bytes.data(), bytes.size());
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(sum >> (8 * i)));
    return bytes;
}

inline VerifierModel deserialize_model(const std::vector<unsigned char>& bytes) {
    using nlohmann::json;
    if (bytes.size() < 4 + 4 + 8 + 8 + 8 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw Error(ErrorKind::CorruptModelFile, "not a model file");
    detail::ByteReader r(bytes, bytes.size() - 8);
    r.text(4);
    const auto version = r.u32();
    if (version != kModelFormatVersion)
        throw Error(ErrorKind::VersionMismatch,
                    "model format " + std::to_string(version) + ", this build reads " + std::to_string(kModelFormatVersion));
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + static_cast<std::size_t>(i)]) << (8 * i);
    if (stored != detail::fnv1a_bytes(bytes.data(), bytes.size() - 8))
        throw Error(ErrorKind::CorruptModelFile, "checksum mismatch");

    json header;
    try {
        header = json::parse(r.text(r.u64()));
        const auto count = r.u64();
        if (count > (bytes.size() - 8 - r.position()) / 8) throw Error(ErrorKind::CorruptModelFile, "value section truncated");
        std::vector<double> values(count);
        for (auto& v : values) v = r.f64();
        if (r.position() != bytes.size() - 8) throw Error(ErrorKind::CorruptModelFile, "trailing bytes");
        const detail::BlobView blobs(header.at("blobs"), std::move(values));

        VerifierModel m;
        m.kind = parse_classifier(header.at("kind").get<std::string>());
        m.user_id = header.at("user_id").get<std::string>();
        m.activity = parse_activity(header.at("activity").get<std::string>());
        m.plan.locations.clear();
        for (const auto& l : header.at("locations")) m.plan.locations.push_back(parse_location(l.get<std::string>()));
        const auto th = blobs.vector("threshold");
        m.threshold = {m.user_id, th(0), th(1)};
        if (m.kind == ClassifierKind::Svm) {
            for (const auto& d : header.at("selected"))
                m.selected.push_back({feature_index(d.at("feature").get<std::string>()), d.at("axis").get<int>(),
                                      parse_location(d.at("location").get<std::string>())});
            m.selected_columns = header.at("selected_columns").get<std::vector<std::size_t>>();
            m.svm.weights = blobs.vector("svm.weights");
            const auto sc = blobs.vector("svm.scalars");
            m.svm.bias = sc(0);
            m.svm.platt_a = sc(1);
            m.svm.platt_b = sc(2);
            m.svm.normalizer = {blobs.vector("svm.norm.mean"), blobs.vector("svm.norm.stddev")};
        } else {
            m.lstm_input = parse_lstm_input(header.at("lstm_input").get<std::string>());
            m.feature_subwindows = header.at("feature_subwindows").get<std::size_t>();
            auto& lm = m.lstm;
            lm.input_dim = header.at("input_dim").get<std::size_t>();
            const auto& c = header.at("config");
            lm.config.units_per_layer = c.at("units_per_layer").get<std::size_t>();
            lm.config.layers = c.at("layers").get<std::size_t>();
            lm.config.dropout = c.at("dropout").get<double>();
            lm.config.learning_rate = c.at("learning_rate").get<double>();
            lm.config.max_epochs = c.at("max_epochs").get<std::size_t>();
            lm.config.early_stop_patience = c.at("early_stop_patience").get<std::size_t>();
            lm.config.lr_reduce_factor = c.at("lr_reduce_factor").get<double>();
            lm.config.lr_reduce_patience = c.at("lr_reduce_patience").get<std::size_t>();
            lm.config.batch_size = c.at("batch_size").get<std::size_t>();
            lm.config.seed = c.at("seed").get<std::uint64_t>();
            lm.config.class_weighting = c.at("class_weighting").get<bool>();
            lm.config.validation_fraction = c.at("validation_fraction").get<double>();
            const auto& h = header.at("history");
            lm.history = {h.at("epochs_run").get<std::size_t>(), h.at("best_epoch").get<std::size_t>(),
                          h.at("best_monitor").get<double>(), h.at("final_learning_rate").get<double>()};
            const auto layers = header.at("layer_count").get<std::size_t>();
            for (std::size_t l = 0; l < layers; ++l) {
                const auto p = "lstm." + std::to_string(l) + ".";
                lm.params.layers.push_back({blobs.matrix(p + "w"), blobs.matrix(p + "u"), blobs.vector(p + "b")});
            }
            lm.params.head_w = blobs.vector("lstm.head_w");
            lm.params.head_b = blobs.vector("lstm.head_b")(0);
            lm.normalizer = {blobs.vector("lstm.norm.mean"), blobs.vector("lstm.norm.stddev")};
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::CorruptModelFile, std::string("bad header: ") + e.what());
    }
}

inline void save_model(const VerifierModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline VerifierModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingFile, path.string());
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return deserialize_model(bytes);
}

/// `<dir>/<user>__<classifier>__<plan>__<activity>.jwpr`
inline std::filesystem::path model_path(const std::filesystem::path& dir, const std::string& user, ClassifierKind kind,
                                        const LocationPlan& plan, Activity activity) {
    return dir / (user + "__" + std::string(to_string(kind)) + "__" + plan.label() + "__" +
                  std::string(to_string(activity)) + ".jwpr");
}

} // namespace jawprint
