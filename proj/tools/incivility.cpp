// incivility: command-line driver over the pipeline stages.
//
// Exit status: 0 success, 1 domain error, 2 usage error. Every flag can also
// be set through the environment as INCIVILITY_<FLAG>, e.g. INCIVILITY_JOBS.

#include "incivility/incivility.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace incivility;

namespace {

struct Common {
    std::string posts;
    std::string triples;
    std::string profiles;
    std::string out;
    std::string out_dir = ".";
    std::uint64_t seed = 13;
    unsigned jobs = default_jobs();
};

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-") {
        std::cout << content;
    } else {
        write_file(out, content);
    }
}

std::vector<Triple> load_triples(const Common& c, const ConversationForest& forest) {
    if (!c.triples.empty()) return parse_triples(read_file(c.triples));
    return extract_triples(forest);
}

ProfileIndex load_profiles(const std::string& path) {
    if (path.empty()) throw Error(Errc::Config, "--profiles is required");
    return index_profiles(parse_profiles(read_file(path)));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

SplitRatios parse_ratios(const std::string& text) {
    auto parts = split_list(text);
    if (parts.size() != 3) throw Error(Errc::Config, "--ratios takes train,validation,test");
    try {
        return SplitRatios{std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
    } catch (const std::logic_error&) {
        throw Error(Errc::Config, "--ratios must be numbers");
    }
}

NeutralMode parse_neutral(const std::string& text) {
    if (text == "selected") return NeutralMode::Selected;
    if (text == "all") return NeutralMode::All;
    throw Error(Errc::Config, "--neutral must be selected or all");
}

// Every long option gets an INCIVILITY_ environment fallback.
void attach_env(CLI::App& app) {
    for (auto* opt : app.get_options()) {
        const auto& names = opt->get_lnames();
        if (names.empty() || names.front() == "help") continue;
        std::string env = "INCIVILITY_";
        for (char ch : names.front()) env += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        opt->envname(env);
    }
    for (auto* sub : app.get_subcommands({})) attach_env(*sub);
}

AnnotationServer* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Incivility scoring for conversations that follow replies to hateful posts"};
    app.require_subcommand(1);
    Common c;

    auto add_posts = [&](CLI::App* sub, bool required = true) {
        auto* o = sub->add_option("--posts", c.posts, "posts JSON Lines");
        if (required) o->required();
        sub->add_option("--triples", c.triples, "precomputed triples (default: extracted from --posts)");
    };
    auto add_jobs = [&](CLI::App* sub) { sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber); };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "extract (hateful post, reply, follow-up) triples");
    std::string markers = "deleted,removed";
    ingest->add_option("--posts", c.posts, "posts JSON Lines")->required();
    ingest->add_option("--markers", markers, "comma-separated moderation markers");
    ingest->add_option("--out", c.out, "triples output (default stdout)");

    // profile
    auto* profile = app.add_subcommand("profile", "threshold classifier scores into behavior profiles");
    std::string scores_path, lexicon_path;
    std::vector<std::string> threshold_overrides;
    bool no_body_norm = false;
    profile->add_option("--posts", c.posts, "posts JSON Lines (needed for --lexicon and for a4 from bodies)");
    auto* src = profile->add_option("--scores", scores_path, "score records JSON Lines");
    profile->add_option("--lexicon", lexicon_path, "lexicon JSON (term -> dimension keys)")->excludes(src);
    profile->add_option("--threshold", threshold_overrides, "per-dimension threshold, e.g. a1=0.6");
    profile->add_flag("--a4-from-scores", no_body_norm, "take a4 from the score file instead of moderation markers");
    profile->add_option("--out", c.out, "profiles output (default stdout)");

    // score
    auto* score = app.add_subcommand("score", "incivility score of every triple's follow-up conversation");
    std::string metric_path, neutral_mode;
    add_posts(score);
    score->add_option("--profiles", c.profiles, "behavior profiles JSON Lines")->required();
    score->add_option("--metric", metric_path, "metric configuration JSON (default: reference configuration)");
    score->add_option("--neutral", neutral_mode, "neutral posts relative to 'selected' dimensions or 'all'");
    score->add_option("--out", c.out, "scores output (default stdout)");
    add_jobs(score);

    // tune
    auto* tune = app.add_subcommand("tune", "grid search of metric configurations against gold pairs");
    std::string gold_path, judgments_path, pairs_path, f_choices = "sqrt", tune_neutral = "selected";
    double alpha_step = 0.05;
    std::size_t top = 0;
    add_posts(tune);
    tune->add_option("--profiles", c.profiles, "behavior profiles JSON Lines")->required();
    tune->add_option("--pairs", pairs_path, "annotation pairs JSON Lines");
    auto* gold_opt = tune->add_option("--gold", gold_path, "gold JSON Lines");
    tune->add_option("--judgments", judgments_path, "raw judgments (adjudicated on the fly)")->excludes(gold_opt);
    tune->add_option("--alpha-step", alpha_step, "weight lattice step");
    tune->add_option("--f", f_choices, "comma-separated aggregations: sqrt, identity, log1p");
    tune->add_option("--neutral", tune_neutral, "selected or all");
    tune->add_option("--top", top, "rows to keep in tune.csv (0 = all)");
    tune->add_option("--out-dir", c.out_dir, "output directory");
    add_jobs(tune);

    // label
    auto* label = app.add_subcommand("label", "Low / Medium / High labels from score quantiles");
    std::string scores_in, thresholds_file;
    double q_low = 0.25, q_high = 0.75;
    bool reference = false;
    add_posts(label, false);
    label->add_option("--scores", scores_in, "scores JSON Lines")->required();
    label->add_option("--q-low", q_low, "lower quantile");
    label->add_option("--q-high", q_high, "upper quantile");
    auto* tf = label->add_option("--thresholds-file", thresholds_file, "fixed thresholds JSON {low_upper, medium_upper}");
    label->add_flag("--reference-thresholds", reference, "use the published Reddit boundaries (-0.10, 0)")->excludes(tf);
    label->add_option("--seed", c.seed, "unused; accepted for uniformity");
    label->add_option("--out", c.out, "labeled output (default stdout)");
    std::string thresholds_out;
    label->add_option("--thresholds-out", thresholds_out, "write the thresholds used");

    // export
    auto* exp = app.add_subcommand("export", "train / validation / test forecasting records and the majority baseline");
    std::string labeled_path, ratios = "0.70,0.15,0.15";
    exp->add_option("--posts", c.posts, "posts JSON Lines")->required();
    exp->add_option("--labeled", labeled_path, "labeled JSON Lines")->required();
    exp->add_option("--ratios", ratios, "train,validation,test");
    exp->add_option("--seed", c.seed, "shuffle seed");
    exp->add_option("--out-dir", c.out_dir, "output directory");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "linguistic and user-interaction analyses");
    std::string resources_dir = "data", labeled_in, diff_mode = "signed";
    double family_alpha = 0.05;
    bool student = false;
    add_posts(analyze);
    analyze->add_option("--profiles", c.profiles, "behavior profiles JSON Lines")->required();
    analyze->add_option("--labeled", labeled_in, "labeled JSON Lines (enables the outcome comparisons)");
    analyze->add_option("--resources", resources_dir, "directory with pronouns.json, negation_cues.txt, sentiment_lexicon.json");
    analyze->add_option("--family-alpha", family_alpha, "family-wise alpha for Bonferroni");
    analyze->add_flag("--student", student, "pooled-variance t-tests instead of Welch");
    analyze->add_option("--diff-mode", diff_mode, "signed or absolute final_diff");
    analyze->add_option("--out-dir", c.out_dir, "output directory");
    add_jobs(analyze);

    // correlate
    auto* correlate = app.add_subcommand("correlate", "Spearman correlation between behavior dimensions");
    correlate->add_option("--profiles", c.profiles, "behavior profiles JSON Lines")->required();
    correlate->add_option("--out", c.out, "CSV output (default stdout)");

    // sample
    auto* sample = app.add_subcommand("sample", "stratified annotation pairs by follow-up length");
    std::size_t per_combo = 40;
    add_posts(sample);
    sample->add_option("--per-combo", per_combo, "pairs per bucket combination");
    sample->add_option("--seed", c.seed, "sampling seed");
    sample->add_option("--out", c.out, "pairs output (default stdout)");

    // serve
    auto* serve = app.add_subcommand("serve", "annotation service");
    std::string session_id = "default", log_path, bind = "127.0.0.1", static_dir;
    int port = 8080;
    add_posts(serve);
    serve->add_option("--pairs", pairs_path, "annotation pairs JSON Lines")->required();
    serve->add_option("--session", session_id, "session id");
    serve->add_option("--log", log_path, "append-only judgment log")->required();
    serve->add_option("--bind", bind, "bind address");
    serve->add_option("--port", port, "port (0 = any free port)");
    serve->add_option("--static", static_dir, "UI bundle directory");

    // report
    auto* report = app.add_subcommand("report", "regenerate agreement, gold and tuning artifacts from a session log");
    report->add_option("--pairs", pairs_path, "annotation pairs JSON Lines")->required();
    report->add_option("--log", log_path, "judgment log")->required();
    report->add_option("--posts", c.posts, "posts JSON Lines (with --profiles, also reruns the grid search)");
    report->add_option("--profiles", c.profiles, "behavior profiles JSON Lines");
    report->add_option("--out-dir", c.out_dir, "output directory");
    add_jobs(report);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write synthetic data sets");
    std::string kind = "corpus";
    std::size_t n_posts = 5000, n_pairs = 60;
    synth_cmd->add_option("kind", kind, "corpus or planted")->check(CLI::IsMember({"corpus", "planted"}));
    synth_cmd->add_option("--posts", n_posts, "corpus size");
    synth_cmd->add_option("--pairs", n_pairs, "planted pairs");
    synth_cmd->add_option("--seed", c.seed, "generator seed");
    synth_cmd->add_option("--out-dir", c.out_dir, "output directory");

    attach_env(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (app.get_subcommands().empty() && argc > 1 && argv[1][0] != '-') {
            std::cerr << "unknown subcommand '" << argv[1] << "'\n\n" << app.help();
        } else {
            app.exit(e);
        }
        return 2;
    }

    try {
        if (*ingest) {
            std::set<std::string> m;
            for (const auto& s : split_list(markers)) m.insert(to_lower_ascii(s));
            emit(c.out, ingest_stage(load_forest(read_file(c.posts)), m));
        } else if (*profile) {
            ProfileOptions opts;
            opts.norm_violation_from_body = !no_body_norm;
            for (const auto& spec : threshold_overrides) {
                auto eq = spec.find('=');
                auto dim = eq == std::string::npos ? std::nullopt : parse_dimension(spec.substr(0, eq));
                if (!dim) throw Error(Errc::Config, "--threshold expects <dim>=<value>, got '" + spec + "'");
                opts.thresholds[index_of(*dim)] = std::stod(spec.substr(eq + 1));
            }
            std::optional<ConversationForest> forest;
            if (!c.posts.empty()) forest = load_forest(read_file(c.posts));
            std::vector<BehaviorProfile> profiles;
            if (!lexicon_path.empty()) {
                if (!forest) throw Error(Errc::Config, "--lexicon needs --posts");
                profiles = profile_from_lexicon(*forest, parse_lexicon(read_file(lexicon_path)), opts);
            } else if (!scores_path.empty()) {
                profiles = profile_from_scores(read_file(scores_path), forest ? &*forest : nullptr, opts);
            } else {
                throw Error(Errc::Config, "profile needs --scores or --lexicon");
            }
            emit(c.out, profiles_to_jsonl(profiles));
        } else if (*score) {
            const auto forest = load_forest(read_file(c.posts));
            const auto triples = load_triples(c, forest);
            MetricConfig config = metric_path.empty() ? reference_config() : metric_config_from_json(json::parse(read_file(metric_path)));
            if (!neutral_mode.empty()) config.neutral = parse_neutral(neutral_mode);
            emit(c.out, scores_to_jsonl(score_stage(triples, forest, load_profiles(c.profiles), config, c.jobs)));
        } else if (*tune) {
            const auto forest = load_forest(read_file(c.posts));
            const auto triples = load_triples(c, forest);
            const auto profiles = load_profiles(c.profiles);
            const auto pairs = pairs_path.empty() ? std::vector<AnnotationPair>{} : parse_pairs(read_file(pairs_path));
            std::vector<GoldRecord> gold;
            if (!gold_path.empty()) {
                gold = parse_gold(read_file(gold_path));
            } else if (!judgments_path.empty()) {
                const auto adj = adjudicate(parse_judgments(read_file(judgments_path)));
                if (!adj.unresolved.empty()) {
                    std::cerr << "note: " << adj.unresolved.size() << " pairs without agreement are left out\n";
                }
                gold = parse_gold(gold_to_jsonl(adj.gold, pairs));
            } else {
                throw Error(Errc::Config, "tune needs --gold or --judgments");
            }
            GridOptions grid;
            grid.alpha_step = alpha_step;
            grid.f_choices.clear();
            for (const auto& f : split_list(f_choices)) grid.f_choices.push_back(parse_aggregation(f));
            grid.neutral = parse_neutral(tune_neutral);
            grid.jobs = c.jobs;
            write_artifacts(tune_stage(build_tuning_items(gold, pairs, triples, forest, profiles), grid, top), c.out_dir);
        } else if (*label) {
            LabelOptions opts{std::nullopt, q_low, q_high};
            if (!thresholds_file.empty()) opts.thresholds = thresholds_from_json(json::parse(read_file(thresholds_file)));
            if (reference) opts.thresholds = reference_thresholds();
            const auto scores = parse_scores(read_file(scores_in));
            std::vector<Triple> triples;
            if (!c.posts.empty() || !c.triples.empty()) {
                std::optional<ConversationForest> forest;
                if (c.triples.empty()) forest = load_forest(read_file(c.posts));
                triples = c.triples.empty() ? extract_triples(*forest) : parse_triples(read_file(c.triples));
            } else {
                for (const auto& [reply, s] : scores) triples.push_back(Triple{"", reply, {}});
            }
            const auto outcome = label_stage(triples, scores, opts);
            emit(c.out, labeled_to_jsonl(outcome.labeled));
            if (!thresholds_out.empty()) write_file(thresholds_out, to_json(outcome.thresholds).dump(2) + "\n");
        } else if (*exp) {
            const auto forest = load_forest(read_file(c.posts));
            write_artifacts(export_stage(parse_labeled(read_file(labeled_path)), forest, parse_ratios(ratios), c.seed), c.out_dir);
        } else if (*analyze) {
            const auto forest = load_forest(read_file(c.posts));
            const auto triples = load_triples(c, forest);
            AnalyzeOptions opts;
            opts.family_alpha = family_alpha;
            opts.equal_variance = student;
            if (diff_mode == "absolute") opts.diff_mode = DiffMode::Absolute;
            else if (diff_mode != "signed") throw Error(Errc::Config, "--diff-mode must be signed or absolute");
            std::optional<std::vector<LabeledTriple>> labeled;
            if (!labeled_in.empty()) labeled = parse_labeled(read_file(labeled_in));
            write_artifacts(analyze_stage(forest, triples, load_profiles(c.profiles), labeled ? &*labeled : nullptr,
                                          load_resources(resources_dir), opts),
                            c.out_dir);
        } else if (*correlate) {
            emit(c.out, correlate_stage(parse_profiles(read_file(c.profiles))));
        } else if (*sample) {
            const auto forest = load_forest(read_file(c.posts));
            emit(c.out, pairs_to_jsonl(sample_pairs(load_triples(c, forest), per_combo, c.seed)));
        } else if (*serve) {
            const auto forest = load_forest(read_file(c.posts));
            const auto triples = load_triples(c, forest);
            auto tasks = AnnotationSession::build_tasks(parse_pairs(read_file(pairs_path)), triples, forest);
            auto session = std::make_shared<AnnotationSession>(session_id, std::move(tasks), fs::path(log_path));
            AnnotationServer server;
            server.add_session(session);
            if (!static_dir.empty() && !server.mount_static(static_dir)) throw Error(Errc::Io, "cannot serve " + static_dir);
            if (!server.bind(bind, port)) throw Error(Errc::Io, "cannot bind " + bind + ":" + std::to_string(port));
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving session '" << session_id << "' on http://" << bind << ":" << server.bound_port() << "\n";
            server.listen_after_bind();
            g_server = nullptr;
        } else if (*report) {
            const auto pairs = parse_pairs(read_file(pairs_path));
            auto artifacts = report_stage(pairs, log_path);
            if (!c.posts.empty() && !c.profiles.empty()) {
                const auto forest = load_forest(read_file(c.posts));
                const auto triples = extract_triples(forest);
                GridOptions grid;
                grid.jobs = c.jobs;
                const auto items = build_tuning_items(parse_gold(artifacts["gold.jsonl"]), pairs, triples, forest, load_profiles(c.profiles));
                for (auto& [name, content] : tune_stage(items, grid)) artifacts[name] = content;
            }
            write_artifacts(artifacts, c.out_dir);
        } else if (*synth_cmd) {
            if (kind == "corpus") {
                synth::CorpusOptions opts;
                opts.posts = n_posts;
                opts.seed = c.seed;
                const auto corpus = synth::generate_corpus(opts);
                write_file(fs::path(c.out_dir) / "posts.jsonl", posts_to_jsonl(corpus.posts));
                write_file(fs::path(c.out_dir) / "scores.jsonl", score_records_to_jsonl(corpus.scores));
            } else {
                const auto planted = synth::planted_corpus(synth::planted_items(reference_config(), n_pairs, c.seed));
                write_file(fs::path(c.out_dir) / "posts.jsonl", posts_to_jsonl(planted.posts));
                write_file(fs::path(c.out_dir) / "profiles.jsonl", profiles_to_jsonl(planted.profiles));
                write_file(fs::path(c.out_dir) / "pairs.jsonl", pairs_to_jsonl(planted.pairs));
                std::string gold;
                for (const auto& g : planted.gold) {
                    gold += json{{"pair_id", g.pair_id}, {"choice", std::string(to_string(g.choice))}, {"left", *g.left}, {"right", *g.right}}
                                .dump() +
                            "\n";
                }
                write_file(fs::path(c.out_dir) / "gold.jsonl", gold);
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
