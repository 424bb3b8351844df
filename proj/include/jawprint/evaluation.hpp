#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "jawprint/csv.hpp"
#include "jawprint/dataset.hpp"
#include "jawprint/error.hpp"
#include "jawprint/parallel.hpp"
#include "jawprint/verifier.hpp"

namespace jawprint {

struct SplitConfig {
    double impostor_ratio = 1.5;
    std::uint64_t seed = 42;
};

struct LabeledWindows {
    std::vector<const WindowGroup*> windows;
    std::vector<int> labels;  // 1 = genuine

    std::size_t genuine() const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1)); }
    std::size_t impostors() const { return labels.size() - genuine(); }
};

struct EvalSplit {
    std::string target_user;
    Activity activity = Activity::Seated;
    LabeledWindows train;  // session 1
    LabeledWindows test;   // session 2
    bool exact_ratio_train = true;
    bool exact_ratio_test = true;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline LabeledWindows draw_side(const WindowBank& bank, const std::string& target, Activity activity, int session,
                                const SplitConfig& cfg, bool& exact) {
    LabeledWindows out;
    for (const auto& g : bank.at(target, activity, session)) {
        out.windows.push_back(&g);
        out.labels.push_back(1);
    }
    std::vector<const WindowGroup*> pool;
    for (const auto& user : bank.users()) {
        if (user == target || !bank.has(user, activity, session)) continue;
        for (const auto& g : bank.at(user, activity, session)) pool.push_back(&g);
    }
    const double wanted = cfg.impostor_ratio * static_cast<double>(out.windows.size());
    const auto count = static_cast<std::size_t>(std::floor(wanted + 1e-9));
    exact = std::abs(wanted - static_cast<double>(count)) < 1e-9;
    if (pool.size() < count)
        throw Error(ErrorKind::NotEnoughImpostors, target + " session " + std::to_string(session) + ": need " +
                                                      std::to_string(count) + " impostor windows, pool has " +
                                                      std::to_string(pool.size()));
    std::mt19937_64 rng(cfg.seed ^ fnv1a(target) ^ (static_cast<std::uint64_t>(session) * 0x9E3779B97F4A7C15ull));
    // partial Fisher-Yates: the first `count` entries are a uniform draw without replacement
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        out.windows.push_back(pool[i]);
        out.labels.push_back(0);
    }
    return out;
}

} // namespace detail

/// Session 1 trains, session 2 tests. Genuine = every target window of the
/// session; impostors = floor(ratio · genuine) windows drawn without
/// replacement from all other users' windows of the same session and activity.
inline EvalSplit build_split(const WindowBank& bank, const std::string& target_user, Activity activity,
                             const SplitConfig& cfg = {}) {
    if (!(cfg.impostor_ratio > 0.0)) throw Error(ErrorKind::InvalidArgument, "impostor ratio must be positive");
    if (!bank.languages.count(target_user)) throw Error(ErrorKind::UnknownUser, target_user);
    EvalSplit split;
    split.target_user = target_user;
    split.activity = activity;
    split.train = detail::draw_side(bank, target_user, activity, 1, cfg, split.exact_ratio_train);
    split.test = detail::draw_side(bank, target_user, activity, 2, cfg, split.exact_ratio_test);
    return split;
}

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

/// FAR(θ) = #impostor ≥ θ / n_i, FRR(θ) = #genuine < θ / n_g. Thresholds
/// sweep every distinct score plus one just above the maximum; the crossing
/// of FAR − FRR is linearly interpolated between adjacent thresholds.
inline EerResult compute_eer(std::vector<double> genuine, std::vector<double> impostor) {
    if (genuine.empty() || impostor.empty()) throw Error(ErrorKind::EmptyScores, "EER needs both score lists");
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());
    std::vector<double> thresholds;
    thresholds.reserve(genuine.size() + impostor.size() + 1);
    std::merge(genuine.begin(), genuine.end(), impostor.begin(), impostor.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

    const double ng = static_cast<double>(genuine.size()), ni = static_cast<double>(impostor.size());
    auto far = [&](double t) {
        return static_cast<double>(impostor.end() - std::lower_bound(impostor.begin(), impostor.end(), t)) / ni;
    };
    auto frr = [&](double t) {
        return static_cast<double>(std::lower_bound(genuine.begin(), genuine.end(), t) - genuine.begin()) / ng;
    };
    double prev_t = thresholds.front(), prev_far = far(prev_t), prev_frr = frr(prev_t);
    if (prev_far - prev_frr <= 0.0) return {prev_far, prev_t};
    for (std::size_t k = 1; k < thresholds.size(); ++k) {
        const double t = thresholds[k], fa = far(t), fr = frr(t);
        const double d = fa - fr;
        if (d == 0.0) return {fa, t};
        if (d < 0.0) {
            const double dp = prev_far - prev_frr;
            const double lambda = dp / (dp - d);
            return {prev_far + lambda * (fa - prev_far), prev_t + lambda * (t - prev_t)};
        }
        prev_t = t;
        prev_far = fa;
        prev_frr = fr;
    }
    return {prev_far, prev_t};  // unreachable: the sentinel has FAR 0, FRR 1
}

enum class Decision { Accept, Reject };

inline Decision threshold_decision(const Score& score, const UserThreshold& theta) {
    return score.probability >= theta.threshold ? Decision::Accept : Decision::Reject;
}

struct UserResult {
    std::string user_id;
    Language language = Language::Native;
    ClassifierKind kind = ClassifierKind::Svm;
    std::string plan;
    Activity activity = Activity::Seated;
    double eer = 0.0;
    double threshold = 0.0;
    std::size_t train_windows = 0;
    std::size_t test_genuine = 0;
    std::size_t test_impostors = 0;
};

/// EER buckets: [0, 0.05), [0.05, 0.10), [0.10, 0.30], (0.30, 1].
inline std::size_t eer_bucket(double eer) {
    if (eer < 0.05) return 0;
    if (eer < 0.10) return 1;
    if (eer <= 0.30) return 2;
    return 3;
}

inline constexpr std::array<std::string_view, 4> kBucketLabels{"<0.05", "0.05-0.10", "0.10-0.30", ">0.30"};

inline double median(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorKind::EmptyScores, "median of empty list");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ReportRow {
    ClassifierKind kind = ClassifierKind::Svm;
    std::string plan;
    Activity activity = Activity::Seated;
    std::string group;  // all | native | non-native
    std::size_t users = 0;
    double median_eer = 0.0;
    std::array<std::size_t, 4> buckets{};

    double bucket_percent(std::size_t b) const {
        return users == 0 ? 0.0 : 100.0 * static_cast<double>(buckets[b]) / static_cast<double>(users);
    }
};

struct EvalReport {
    std::vector<UserResult> users;
    std::vector<ReportRow> rows;
};

/// Aggregates per-user results into one row per (classifier, plan, activity,
/// language group); rows with no users are omitted.
inline std::vector<ReportRow> summarize(const std::vector<UserResult>& results) {
    std::vector<ReportRow> rows;
    std::vector<std::tuple<ClassifierKind, std::string, Activity>> keys;
    for (const auto& r : results) {
        auto key = std::make_tuple(r.kind, r.plan, r.activity);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [kind, plan, activity] : keys) {
        for (std::string_view group : {"all", "native", "non-native"}) {
            ReportRow row{kind, plan, activity, std::string(group), 0, 0.0, {}};
            std::vector<double> eers;
            for (const auto& r : results) {
                if (r.kind != kind || r.plan != plan || r.activity != activity) continue;
                if (group != "all" && to_string(r.language) != group) continue;
                eers.push_back(r.eer);
                ++row.buckets[eer_bucket(r.eer)];
            }
            if (eers.empty()) continue;
            row.users = eers.size();
            row.median_eer = median(eers);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

struct EvaluationConfig {
    SplitConfig split;
    VerifierConfig verifier;
    unsigned workers = default_workers();
};

struct UserEvaluation {
    UserResult result;
    VerifierModel model;
    std::vector<double> genuine_scores;
    std::vector<double> impostor_scores;
};

/// Train on session 1, score session 2, EER and threshold from the test scores.
inline UserEvaluation evaluate_user(const WindowBank& bank, const std::string& user, Activity activity,
                                    ClassifierKind kind, const LocationPlan& plan, const EvaluationConfig& cfg) {
    const auto split = build_split(bank, user, activity, cfg.split);
    UserEvaluation ev;
    ev.model = train_verifier(split.train.windows, split.train.labels, kind, plan, cfg.verifier, user, activity);
    for (std::size_t i = 0; i < split.test.windows.size(); ++i) {
        const double p = score_group(ev.model, *split.test.windows[i]).probability;
        (split.test.labels[i] == 1 ? ev.genuine_scores : ev.impostor_scores).push_back(p);
    }
    const auto eer = compute_eer(ev.genuine_scores, ev.impostor_scores);
    ev.model.threshold = {user, eer.threshold, eer.eer};
    ev.result = {user,
                 bank.languages.at(user),
                 kind,
                 plan.label(),
                 activity,
                 eer.eer,
                 eer.threshold,
                 split.train.windows.size(),
                 split.test.genuine(),
                 split.test.impostors()};
    return ev;
}

/// Every (user, plan) pair is trained and scored independently in parallel;
/// the report is reduced afterwards in a fixed order.
inline EvalReport evaluate_population(const WindowBank& bank, ClassifierKind kind,
                                      const std::vector<LocationPlan>& plans, Activity activity,
                                      const EvaluationConfig& cfg = {}) {
    std::vector<std::string> users;
    for (const auto& u : bank.users())
        if (bank.has(u, activity, 1) && bank.has(u, activity, 2)) users.push_back(u);
    if (users.size() < 2) throw Error(ErrorKind::NotEnoughImpostors, "evaluation needs at least 2 users with both sessions");
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t p = 0; p < plans.size(); ++p)
        for (std::size_t u = 0; u < users.size(); ++u) jobs.emplace_back(p, u);
    std::vector<UserResult> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        auto [p, u] = jobs[j];
        results[j] = evaluate_user(bank, users[u], activity, kind, plans[p], cfg).result;
    }, cfg.workers);
    return {results, summarize(results)};
}

inline void write_user_csv(std::ostream& out, const std::vector<UserResult>& results) {
    out << "classifier,mode,activity,user,language,eer,threshold,train_windows,test_genuine,test_impostors\n";
    for (const auto& r : results)
        out << to_string(r.kind) << ',' << r.plan << ',' << to_string(r.activity) << ',' << r.user_id << ','
            << to_string(r.language) << ',' << csv::format_fixed(r.eer, 6) << ',' << csv::format_fixed(r.threshold, 6)
            << ',' << r.train_windows << ',' << r.test_genuine << ',' << r.test_impostors << '\n';
}

inline void write_summary_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "classifier,mode,activity,group,users,median_eer";
    for (auto label : kBucketLabels) out << ",pct_" << label;
    out << '\n';
    for (const auto& r : rows) {
        out << to_string(r.kind) << ',' << r.plan << ',' << to_string(r.activity) << ',' << r.group << ',' << r.users
            << ',' << csv::format_fixed(r.median_eer, 4);
        for (std::size_t b = 0; b < 4; ++b) out << ',' << csv::format_fixed(r.bucket_percent(b), 1);
        out << '\n';
    }
}

/// Fixed-width text rendering of the summary rows.
inline void write_summary_table(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << std::left << std::setw(6) << "model" << std::setw(20) << "mode" << std::setw(12) << "activity"
        << std::setw(12) << "group" << std::right << std::setw(6) << "users" << std::setw(12) << "median EER";
    for (auto label : kBucketLabels) out << std::setw(11) << label;
    out << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(6) << to_string(r.kind) << std::setw(20) << r.plan << std::setw(12)
            << to_string(r.activity) << std::setw(12) << r.group << std::right << std::setw(6) << r.users
            << std::setw(12) << csv::format_fixed(r.median_eer, 4);
        for (std::size_t b = 0; b < 4; ++b) out << std::setw(10) << csv::format_fixed(r.bucket_percent(b), 1) << '%';
        out << '\n';
    }
}

} // namespace jawprint
