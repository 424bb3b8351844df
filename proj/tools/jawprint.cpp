#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jawprint/attack.hpp"
#include "jawprint/dataset.hpp"
#include "jawprint/evaluation.hpp"
#include "jawprint/http_service.hpp"
#include "jawprint/landmarks.hpp"
#include "jawprint/model_io.hpp"
#include "jawprint/relieff.hpp"
#include "jawprint/synthgen.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace jawprint;

namespace {

struct Globals {
    std::uint64_t seed = 42;
    std::string data_root = "data";
    std::string out = "out";
    std::string format = "csv";
};

struct Options {
    std::size_t users = 10;
    std::size_t sessions = 2;
    std::vector<std::string> activities{"Seated"};
    double duration = 900.0;
    double landmark_duration = 120.0;
    std::size_t window = 250;
    std::size_t top = 50;
    std::string select_mode = "fused";
    std::string model = "lstm";
    std::string mode = "fused";
    std::string activity = "Seated";
    std::optional<std::string> user;
    std::string landmarks;
    std::optional<int> fps;
    std::optional<std::string> resolution;
    std::optional<std::string> model_dir;
    double span = 0.5;
    int session = 1;
    std::string location = "chin";
    std::optional<int> port;
    std::optional<std::string> host;
    std::optional<std::string> config;
};

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

fs::path models_dir(const Globals& g, const Options& o) { return o.model_dir ? fs::path(*o.model_dir) : fs::path(g.out) / "models"; }

std::vector<LocationPlan> plans_for(const std::string& mode) {
    if (mode == "all") return all_plans();
    return {LocationPlan::parse(mode)};
}

WindowBank load_bank(const Globals& g, Activity activity, std::size_t window) {
    return build_window_bank(load_dataset(g.data_root), activity, window);
}

void print_config(const std::string& command, const Globals& g, const Options& o) {
    nlohmann::json j{{"command", command}, {"seed", g.seed}, {"data_root", g.data_root}, {"out", g.out}, {"format", g.format}};
    if (command == "simulate")
        j.update({{"users", o.users}, {"sessions", o.sessions}, {"activities", o.activities}, {"duration", o.duration},
                  {"landmark_duration", o.landmark_duration}});
    else if (command == "extract")
        j.update({{"window", o.window}});
    else if (command == "select")
        j.update({{"top", o.top}, {"mode", o.select_mode}, {"activity", o.activity}, {"window", o.window}});
    else if (command == "train" || command == "evaluate")
        j.update({{"model", o.model}, {"mode", o.mode}, {"activity", o.activity}, {"user", o.user.value_or("*")},
                  {"window", o.window}, {"model_dir", models_dir(g, o).string()}});
    else if (command == "attack")
        j.update({{"landmarks", o.landmarks}, {"model", o.model}, {"mode", o.mode}, {"activity", o.activity},
                  {"fps", o.fps ? nlohmann::json(*o.fps) : nlohmann::json("all")},
                  {"resolution", o.resolution.value_or("all")}, {"model_dir", models_dir(g, o).string()}});
    else if (command == "inspect")
        j.update({{"span", o.span}, {"user", o.user.value_or("*")}, {"activity", o.activity}, {"session", o.session},
                  {"location", o.location}});
    std::cerr << "config " << j.dump() << '\n';
}

void simulate(const Globals& g, const Options& o) {
    CohortSpec spec;
    spec.users = o.users;
    spec.sessions = o.sessions;
    spec.duration = o.duration;
    spec.seed = g.seed;
    spec.activities.clear();
    for (const auto& a : o.activities) spec.activities.push_back(parse_activity(a));
    std::vector<UserProfile> profiles;
    const auto ds = simulate_dataset(spec, {}, &profiles);
    write_dataset(g.data_root, ds);
    const fs::path landmarks = fs::path(g.data_root) / "_landmarks";
    const int master_session = static_cast<int>(spec.sessions) + 1;
    for (const auto& p : profiles) {
        const SessionSpec video{o.landmark_duration, spec.activities.front(), master_session,
                                detail::mix_seed(g.seed, static_cast<std::uint64_t>(master_session))};
        fs::create_directories(landmarks / p.user_id);
        for (const auto& trace : render_landmark_trace(p, video))
            write_landmark_trace((landmarks / p.user_id / (std::string(file_stem(trace.location)) + ".csv")).string(), trace);
    }
    std::cout << "wrote " << profiles.size() << " users to " << g.data_root << '\n';
}

void write_feature_rows(std::ostream& out, const std::vector<WindowGroup>& groups, SensorLocation loc) {
    out << "window";
    for (const auto& c : window_columns(loc)) out << ',' << c.column_name();
    out << '\n';
    for (const auto& group : groups) {
        const auto& fv = group.feature(loc);
        out << group.origin.tag();
        for (double v : fv.values) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

void extract(const Globals& g, const Options& o) {
    const auto bank = build_window_bank(load_dataset(g.data_root), std::nullopt, o.window);
    std::size_t files = 0;
    for (const auto& [key, groups] : bank.sessions) {
        const auto& [user, activity, session] = key;
        for (auto loc : kAllLocations) {
            if (!groups.front().features[location_index(loc)]) continue;
            auto out = open_output(session_dir(fs::path(g.out) / "features", user, activity, session) /
                                   (std::string(file_stem(loc)) + ".csv"));
            write_feature_rows(out, groups, loc);
            ++files;
        }
    }
    std::cout << "wrote " << files << " feature files under " << (fs::path(g.out) / "features").string() << '\n';
}

/// ReliefF weights averaged over every user's one-vs-rest session-1 split.
std::vector<RankedFeature> population_ranking(const WindowBank& bank, Activity activity, const LocationPlan& plan,
                                              const SelectionConfig& cfg) {
    const auto columns = plan.columns();
    std::vector<double> total(columns.size(), 0.0);
    std::size_t ranked_users = 0;
    for (const auto& user : bank.users()) {
        if (!bank.has(user, activity, 1)) continue;
        const auto split = build_split(bank, user, activity, {1.5, cfg.seed});
        Eigen::MatrixXd x(static_cast<Eigen::Index>(split.train.windows.size()), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t r = 0; r < split.train.windows.size(); ++r)
            x.row(static_cast<Eigen::Index>(r)) = plan_features(*split.train.windows[r], plan).transpose();
        for (const auto& r : relieff_rank(x, split.train.labels, columns, cfg)) total[r.column] += r.score;
        ++ranked_users;
    }
    RankedFeatures ranked(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c)
        ranked[c] = {columns[c], c, total[c] / static_cast<double>(ranked_users)};
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    return select_top(ranked, cfg.k_top);
}

void select(const Globals& g, const Options& o) {
    const auto activity = parse_activity(o.activity);
    const auto bank = load_bank(g, activity, o.window);
    SelectionConfig cfg;
    cfg.k_top = o.top;
    cfg.seed = g.seed;
    std::vector<LocationPlan> plans;
    if (o.select_mode == "fused") plans.push_back(LocationPlan::fused());
    else
        for (auto loc : kAllLocations) plans.push_back(LocationPlan::single(loc));
    for (const auto& plan : plans) {
        const auto top = population_ranking(bank, activity, plan, cfg);
        const auto path = fs::path(g.out) / ("ranking_" + plan.label() + "_" + std::string(to_string(activity)) + ".csv");
        auto out = open_output(path);
        write_ranking(out, top);
        std::cout << "wrote " << path.string() << '\n';
    }
}

EvaluationConfig evaluation_config(const Globals& g) {
    EvaluationConfig cfg;
    cfg.split.seed = g.seed;
    cfg.verifier.selection.seed = g.seed;
    cfg.verifier.lstm.seed = g.seed;
    cfg.verifier.svm.seed = g.seed;
    return cfg;
}

std::vector<std::string> target_users(const WindowBank& bank, Activity activity, const std::optional<std::string>& user) {
    if (user) {
        if (!bank.languages.count(*user)) throw Error(ErrorKind::UnknownUser, *user);
        return {*user};
    }
    std::vector<std::string> out;
    for (const auto& u : bank.users())
        if (bank.has(u, activity, 1) && bank.has(u, activity, 2)) out.push_back(u);
    return out;
}

void train(const Globals& g, const Options& o) {
    const auto activity = parse_activity(o.activity);
    const auto kind = parse_classifier(o.model);
    const auto bank = load_bank(g, activity, o.window);
    const auto cfg = evaluation_config(g);
    const auto dir = models_dir(g, o);
    fs::create_directories(dir);
    for (const auto& plan : plans_for(o.mode))
        for (const auto& user : target_users(bank, activity, o.user)) {
            const auto ev = evaluate_user(bank, user, activity, kind, plan, cfg);
            const auto path = model_path(dir, user, kind, plan, activity);
            save_model(ev.model, path);
            std::cout << path.string() << " eer=" << csv::format_fixed(ev.result.eer, 4)
                      << " threshold=" << csv::format_fixed(ev.model.threshold.threshold, 6) << '\n';
        }
}

void evaluate(const Globals& g, const Options& o) {
    const auto activity = parse_activity(o.activity);
    const auto kind = parse_classifier(o.model);
    const auto bank = load_bank(g, activity, o.window);
    const auto report = evaluate_population(bank, kind, plans_for(o.mode), activity, evaluation_config(g));
    const std::string stem = "eer_" + std::string(to_string(kind)) + "_" + o.mode + "_" + std::string(to_string(activity));
    const auto users_path = fs::path(g.out) / (stem + "_users.csv");
    auto users = open_output(users_path);
    write_user_csv(users, report.users);
    const auto summary_path = fs::path(g.out) / (stem + (g.format == "csv" ? "_summary.csv" : "_summary.txt"));
    auto summary = open_output(summary_path);
    if (g.format == "csv") {
        write_summary_csv(summary, report.rows);
        write_summary_csv(std::cout, report.rows);
    } else {
        write_summary_table(summary, report.rows);
        write_summary_table(std::cout, report.rows);
    }
    std::cerr << "wrote " << users_path.string() << " and " << summary_path.string() << '\n';
}

void attack(const Globals& g, const Options& o) {
    const auto activity = parse_activity(o.activity);
    const auto kind = parse_classifier(o.model);
    const auto plan = LocationPlan::parse(o.mode);
    if (!fs::is_directory(o.landmarks)) throw Error(ErrorKind::MissingFile, "landmark directory " + o.landmarks);

    std::vector<std::string> victims;
    for (const auto& e : fs::directory_iterator(o.landmarks))
        if (e.is_directory()) victims.push_back(e.path().filename().string());
    std::sort(victims.begin(), victims.end());
    if (o.user) victims = {*o.user};
    if (victims.empty()) throw Error(ErrorKind::MissingFile, "no victim directories under " + o.landmarks);

    std::vector<std::map<SensorLocation, LandmarkTrace>> masters(victims.size());
    std::vector<VerifierModel> models(victims.size());
    std::optional<WindowBank> bank;
    for (std::size_t v = 0; v < victims.size(); ++v) {
        for (auto loc : plan.locations) {
            const auto file = fs::path(o.landmarks) / victims[v] / (std::string(file_stem(loc)) + ".csv");
            masters[v].emplace(loc, load_landmark_trace(file.string(), loc));
        }
        const auto saved = model_path(models_dir(g, o), victims[v], kind, plan, activity);
        if (fs::exists(saved)) {
            models[v] = load_model(saved);
            continue;
        }
        if (!bank) bank = load_bank(g, activity, o.window);
        std::cerr << "no saved model for " << victims[v] << ", training\n";
        models[v] = evaluate_user(*bank, victims[v], activity, kind, plan, evaluation_config(g)).model;
    }

    std::vector<QualityLevel> qualities;
    for (const auto& q : all_quality_levels())
        if ((!o.fps || q.fps == *o.fps) && (!o.resolution || q.resolution.label() == *o.resolution)) qualities.push_back(q);
    std::vector<AttackTarget> targets;
    for (std::size_t v = 0; v < victims.size(); ++v) targets.push_back({&models[v], &masters[v]});
    const auto report = run_attack_suite(targets, qualities);

    const auto path = fs::path(g.out) / ("attack_" + std::string(to_string(kind)) + "_" + plan.label() + ".csv");
    auto out = open_output(path);
    write_attack_csv(out, report);
    write_attack_csv(std::cout, report);
    std::cerr << "wrote " << path.string() << '\n';
}

void inspect(const Globals& g, const Options& o) {
    const auto activity = parse_activity(o.activity);
    const auto loc = parse_location(o.location);
    const auto ds = load_dataset(g.data_root);
    const auto path = fs::path(g.out) / ("inspect_" + std::string(file_stem(loc)) + "_" + std::string(to_string(activity)) +
                                         "_session" + std::to_string(o.session) + ".csv");
    auto out = open_output(path);
    out << "user,block,t,ax,ay,az\n";
    for (const auto& user : o.user ? std::vector<std::string>{*o.user} : ds.user_ids()) {
        const auto& stream = ds.user(user).session(activity, o.session).stream(loc);
        const auto means = window_means(stream, o.span);
        for (std::size_t b = 0; b < means.size(); ++b)
            out << user << ',' << b << ',' << csv::format_fixed(static_cast<double>(b) * o.span, 3) << ','
                << csv::format_double(means[b].ax) << ',' << csv::format_double(means[b].ay) << ','
                << csv::format_double(means[b].az) << '\n';
    }
    std::cout << "wrote " << path.string() << '\n';
}

HttpService* running_service = nullptr;

void serve(const Options& o) {
    auto cfg = load_service_config(o.config ? std::optional<fs::path>(*o.config) : std::nullopt);
    if (o.port) cfg.port = *o.port;
    if (o.host) cfg.host = *o.host;
    if (o.model_dir) cfg.model_dir = *o.model_dir;
    std::cerr << "config " << nlohmann::json{{"command", "serve"}, {"host", cfg.host}, {"port", cfg.port},
                                             {"model_dir", cfg.model_dir.string()},
                                             {"consecutive_window_failures", cfg.policy.consecutive_window_failures},
                                             {"rolling_failure_rate", cfg.policy.rolling_failure_rate},
                                             {"rolling_window", cfg.policy.rolling_window}}
                                  .dump()
              << '\n';
    SessionManager manager(cfg);
    const auto loaded = manager.load_models(cfg.model_dir);
    HttpService http(manager);
    const int port = http.bind(cfg.host, cfg.port);
    std::cerr << "serving " << loaded << " user models on " << cfg.host << ':' << port << '\n';
    running_service = &http;
    std::signal(SIGINT, [](int) { running_service->stop(); });
    std::signal(SIGTERM, [](int) { running_service->stop(); });
    http.run();
}

bool usage_error(ErrorKind kind) {
    return kind == ErrorKind::InvalidArgument || kind == ErrorKind::KTooLarge || kind == ErrorKind::UnknownLocation;
}

} // namespace

int main(int argc, char** argv) {
    Globals g;
    Options o;
    CLI::App app{"Jaw-motion continuous authentication pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--data-root", g.data_root, "dataset directory")->envname("JAWPRINT_DATA_ROOT");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"csv", "table"}));

    const auto activity_check = CLI::IsMember({"Seated", "WalkFlat", "WalkStairs"});
    const auto mode_check = CLI::IsMember({"fused", "chin", "upper_left_cheek", "lower_right_cheek", "all"});

    auto* sim = app.add_subcommand("simulate", "generate a synthetic cohort and master landmark traces");
    sim->add_option("--users", o.users)->check(CLI::Range(2, 1000));
    sim->add_option("--sessions", o.sessions)->check(CLI::Range(1, 10));
    sim->add_option("--activity", o.activities)->check(activity_check);
    sim->add_option("--duration", o.duration, "seconds per session")->check(CLI::PositiveNumber);
    sim->add_option("--landmark-duration", o.landmark_duration, "seconds of master video")->check(CLI::PositiveNumber);

    auto* ext = app.add_subcommand("extract", "window every session and write feature rows");
    ext->add_option("--window", o.window)->check(CLI::Range(8, 100000));

    auto* sel = app.add_subcommand("select", "rank features with ReliefF");
    sel->add_option("--top", o.top)->check(CLI::PositiveNumber);
    sel->add_option("--mode", o.select_mode)->check(CLI::IsMember({"fused", "per-location"}));
    sel->add_option("--activity", o.activity)->check(activity_check);
    sel->add_option("--window", o.window)->check(CLI::Range(8, 100000));

    auto* trn = app.add_subcommand("train", "train per-user verifiers and save them");
    auto* evl = app.add_subcommand("evaluate", "session-1 train / session-2 test EER report");
    for (auto* sub : {trn, evl}) {
        sub->add_option("--model", o.model)->check(CLI::IsMember({"svm", "lstm"}));
        sub->add_option("--mode", o.mode)->check(mode_check);
        sub->add_option("--activity", o.activity)->check(activity_check);
        sub->add_option("--window", o.window)->check(CLI::Range(8, 100000));
    }
    trn->add_option("--user", o.user);
    trn->add_option("--model-dir", o.model_dir);

    auto* atk = app.add_subcommand("attack", "replay landmark-derived acceleration against saved verifiers");
    atk->add_option("--landmarks", o.landmarks, "directory of <user>/<location>.csv traces")->required();
    atk->add_option("--fps", o.fps)->check(CLI::IsMember({60, 30, 15}));
    atk->add_option("--resolution", o.resolution)->check(CLI::IsMember({"1080p", "720p"}));
    atk->add_option("--model", o.model)->check(CLI::IsMember({"svm", "lstm"}));
    atk->add_option("--mode", o.mode)->check(CLI::IsMember({"fused", "chin", "upper_left_cheek", "lower_right_cheek"}));
    atk->add_option("--activity", o.activity)->check(activity_check);
    atk->add_option("--user", o.user);
    atk->add_option("--model-dir", o.model_dir);
    atk->add_option("--window", o.window)->check(CLI::Range(8, 100000));

    auto* ins = app.add_subcommand("inspect", "per-span axis means of one location");
    ins->add_option("--span", o.span, "seconds per block")->check(CLI::PositiveNumber);
    ins->add_option("--user", o.user);
    ins->add_option("--activity", o.activity)->check(activity_check);
    ins->add_option("--session", o.session)->check(CLI::PositiveNumber);
    ins->add_option("--location", o.location)->check(CLI::IsMember({"chin", "upper_left_cheek", "lower_right_cheek"}));

    auto* srv = app.add_subcommand("serve", "run the live verification service");
    srv->add_option("--port", o.port)->check(CLI::Range(0, 65535));
    srv->add_option("--host", o.host);
    srv->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    srv->add_option("--model-dir", o.model_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        if (command != "serve") print_config(command, g, o);
        if (command == "simulate") simulate(g, o);
        else if (command == "extract") extract(g, o);
        else if (command == "select") select(g, o);
        else if (command == "train") train(g, o);
        else if (command == "evaluate") evaluate(g, o);
        else if (command == "attack") attack(g, o);
        else if (command == "inspect") inspect(g, o);
        else serve(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage_error(e.kind()) ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
