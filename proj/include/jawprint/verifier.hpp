#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "jawprint/dataset.hpp"
#include "jawprint/error.hpp"
#include "jawprint/features.hpp"
#include "jawprint/lstm.hpp"
#include "jawprint/relieff.hpp"
#include "jawprint/score.hpp"
#include "jawprint/svm.hpp"

namespace jawprint {

enum class ClassifierKind { Svm, Lstm };

inline std::string_view to_string(ClassifierKind k) { return k == ClassifierKind::Svm ? "svm" : "lstm"; }

inline ClassifierKind parse_classifier(std::string_view text) {
    if (text == "svm" || text == "SVM") return ClassifierKind::Svm;
    if (text == "lstm" || text == "LSTM") return ClassifierKind::Lstm;
    throw Error(ErrorKind::InvalidArgument, "classifier must be svm or lstm, got '" + std::string(text) + "'");
}

/// How an LSTM sees a window: the raw 250×3L samples, or a short sequence of
/// per-sub-window feature vectors.
enum class LstmInput { RawWindow, FeatureSequence };

inline std::string_view to_string(LstmInput m) { return m == LstmInput::RawWindow ? "raw" : "features"; }

inline LstmInput parse_lstm_input(std::string_view text) {
    if (text == "raw") return LstmInput::RawWindow;
    if (text == "features") return LstmInput::FeatureSequence;
    throw Error(ErrorKind::InvalidArgument, "lstm input must be raw or features, got '" + std::string(text) + "'");
}

/// Which sensor locations feed a verifier, always in canonical order.
struct LocationPlan {
    std::vector<SensorLocation> locations;

    static LocationPlan fused() { return {{kAllLocations.begin(), kAllLocations.end()}}; }
    static LocationPlan single(SensorLocation loc) { return {{loc}}; }
    static LocationPlan parse(std::string_view text) {
        if (text == "fused") return fused();
        return single(parse_location(text));
    }
    bool is_fused() const { return locations.size() == kAllLocations.size(); }
    std::string label() const {
        if (is_fused()) return "fused";
        std::string out;
        for (auto loc : locations) out += (out.empty() ? "" : "+") + std::string(file_stem(loc));
        return out;
    }
    std::vector<FeatureDescriptor> columns() const { return fused_columns(locations); }
    bool operator==(const LocationPlan&) const = default;
};

/// All plans an evaluation reports: each location on its own, then fused.
inline std::vector<LocationPlan> all_plans() {
    std::vector<LocationPlan> plans;
    for (auto loc : kAllLocations) plans.push_back(LocationPlan::single(loc));
    plans.push_back(LocationPlan::fused());
    return plans;
}

struct VerifierConfig {
    SvmConfig svm;
    LstmConfig lstm;
    SelectionConfig selection;
    LstmInput lstm_input = LstmInput::RawWindow;
    std::size_t feature_subwindows = 5;
};

struct UserThreshold {
    std::string user_id;
    double threshold = 0.5;
    double eer = 0.0;
};

struct VerifierModel {
    ClassifierKind kind = ClassifierKind::Svm;
    std::string user_id;
    Activity activity = Activity::Seated;
    LocationPlan plan = LocationPlan::fused();
    LstmInput lstm_input = LstmInput::RawWindow;
    std::size_t feature_subwindows = 5;
    std::vector<FeatureDescriptor> selected;   // SVM only
    std::vector<std::size_t> selected_columns;  // indices into plan.columns()
    SvmModel svm;
    LstmModel lstm;
    UserThreshold threshold;
};

/// Concatenated per-location feature values in plan order.
inline Eigen::VectorXd plan_features(const WindowGroup& group, const LocationPlan& plan) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(plan.locations.size() * kFeaturesPerWindow));
    Eigen::Index at = 0;
    for (auto loc : plan.locations) {
        const auto& f = group.feature(loc);
        for (double x : f.values) v(at++) = x;
    }
    return v;
}

inline Eigen::VectorXd select_columns(const Eigen::VectorXd& full, const std::vector<std::size_t>& columns) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(static_cast<Eigen::Index>(columns[i]));
    return out;
}

/// LSTM input for one group: raw samples side by side (location-major, X Y Z),
/// or features of equal sub-windows stacked in time.
inline Sequence plan_sequence(const WindowGroup& group, const LocationPlan& plan, LstmInput mode,
                              std::size_t subwindows = 5) {
    const auto width = static_cast<Eigen::Index>(plan.locations.size());
    if (mode == LstmInput::RawWindow) {
        const Eigen::Index steps = group.window(plan.locations.front()).data.rows();
        Sequence s(steps, 3 * width);
        for (Eigen::Index l = 0; l < width; ++l) {
            const auto& w = group.window(plan.locations[static_cast<std::size_t>(l)]);
            if (w.data.rows() != steps) throw Error(ErrorKind::ShapeMismatch, "unequal window lengths in group");
            s.middleCols(3 * l, 3) = w.data;
        }
        return s;
    }
    if (subwindows == 0) throw Error(ErrorKind::InvalidArgument, "need at least one sub-window");
    Sequence s(static_cast<Eigen::Index>(subwindows), static_cast<Eigen::Index>(kFeaturesPerWindow) * width);
    for (Eigen::Index l = 0; l < width; ++l) {
        const auto& w = group.window(plan.locations[static_cast<std::size_t>(l)]);
        const Eigen::Index span = w.data.rows() / static_cast<Eigen::Index>(subwindows);
        if (span < 2) throw Error(ErrorKind::SeriesTooShort, "sub-windows shorter than 2 samples");
        for (std::size_t k = 0; k < subwindows; ++k) {
            Window sub{w.location, w.origin, w.rate, w.data.middleRows(static_cast<Eigen::Index>(k) * span, span)};
            const auto fv = compute_window_features(sub);
            for (std::size_t c = 0; c < fv.values.size(); ++c)
                s(static_cast<Eigen::Index>(k), l * static_cast<Eigen::Index>(kFeaturesPerWindow) + static_cast<Eigen::Index>(c)) =
                    fv.values[c];
        }
    }
    return s;
}

/// Trains one per-user verifier on labeled window groups (1 = genuine).
inline VerifierModel train_verifier(const std::vector<const WindowGroup*>& train, const std::vector<int>& labels,
                                    ClassifierKind kind, const LocationPlan& plan, const VerifierConfig& cfg,
                                    const std::string& user_id, Activity activity) {
    if (train.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "labels vs training windows");
    VerifierModel model;
    model.kind = kind;
    model.user_id = user_id;
    model.activity = activity;
    model.plan = plan;
    model.lstm_input = cfg.lstm_input;
    model.feature_subwindows = cfg.feature_subwindows;
    model.threshold.user_id = user_id;
    if (kind == ClassifierKind::Svm) {
        const auto columns = plan.columns();
        Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t r = 0; r < train.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = plan_features(*train[r], plan).transpose();
        const auto ranked = relieff_rank(x, labels, columns, cfg.selection);
        const auto top = select_top(ranked, std::min(cfg.selection.k_top, columns.size()));
        for (const auto& r : top) {
            model.selected.push_back(r.descriptor);
            model.selected_columns.push_back(r.column);
        }
        Eigen::MatrixXd xs(x.rows(), static_cast<Eigen::Index>(top.size()));
        for (std::size_t c = 0; c < top.size(); ++c) xs.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(top[c].column));
        const auto norm = fit_normalizer(xs);
        model.svm = train_svm(apply_normalizer(norm, xs), labels, cfg.svm);
        model.svm.normalizer = norm;
    } else {
        std::vector<Sequence> seqs;
        seqs.reserve(train.size());
        for (const auto* g : train) seqs.push_back(plan_sequence(*g, plan, cfg.lstm_input, cfg.feature_subwindows));
        model.lstm = train_lstm(seqs, labels, cfg.lstm);
    }
    return model;
}

/// The single scoring path used by batch evaluation, attacks and the live service.
/// SVM models read the group's cached features; LSTM models read raw windows.
inline Score score_group(const VerifierModel& model, const WindowGroup& group) {
    Score s;
    if (model.kind == ClassifierKind::Svm) {
        const Eigen::VectorXd x = select_columns(plan_features(group, model.plan), model.selected_columns);
        s = svm_score(model.svm, normalize_row(model.svm.normalizer, x));
    } else {
        s = lstm_score(model.lstm, plan_sequence(group, model.plan, model.lstm_input, model.feature_subwindows));
    }
    s.origin = group.origin.tag();
    return s;
}

inline std::vector<Score> score_groups(const VerifierModel& model, const std::vector<const WindowGroup*>& groups,
                                       unsigned workers = default_workers()) {
    std::vector<Score> out(groups.size());
    parallel_for(groups.size(), [&](std::size_t i) { out[i] = score_group(model, *groups[i]); }, workers);
    return out;
}

} // namespace jawprint
