// Acceptance run: one PASS/FAIL line per criterion. Any failure outside
// kKnownUnattainable makes the exit status nonzero. Tolerances sit next to
// each check.
#include "incivility/incivility.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace incivility;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Criteria that cannot pass under the rules the library commits to. They are
// still run and printed as FAIL, but do not set the exit code.
const std::set<int> kKnownUnattainable{10};

class Checker {
public:
    void run(int n, const std::string& name, const std::function<Outcome()>& body) {
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool known = kKnownUnattainable.count(n) != 0;
        failures_ += !o.pass && !known;
        std::printf("[%s] %d. %s%s%s%s\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.empty() ? "" : " -- ", o.detail.c_str(),
                    !o.pass && known ? " (known unattainable, excluded from exit status)" : "");
        std::fflush(stdout);
    }
    int failures() const { return failures_; }

private:
    int failures_ = 0;
};

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

std::string source(const std::string& rel) { return std::string(INCIVILITY_SOURCE_DIR) + "/" + rel; }

IncivilityScore score_of(const std::vector<AuthoredFlags>& posts, const MetricConfig& c) {
    return incivility_score(dimension_counts(std::span<const AuthoredFlags>(posts), c), c);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
    Checker check;
    constexpr std::uint8_t a1 = 1u << 0;

    check.run(1, "sqrt aggregation: 10 users x 1 post equals 1 user x 100 posts", [] {
        MetricConfig c;
        c.antisocial = {Dimension::Offensive};
        c.alpha = 1.0;
        c.beta = 0.0;
        std::vector<AuthoredFlags> many, one;
        for (int i = 0; i < 10; ++i) many.push_back({"u" + std::to_string(i), a1});
        for (int i = 0; i < 100; ++i) one.push_back({"solo", a1});
        const double x = score_of(many, c).A, y = score_of(one, c).A;
        return Outcome{std::fabs(x - y) <= 1e-12 && near(x, 10.0, 1e-12), fmt("A=%.15g vs %.15g", x, y)};
    });

    check.run(2, "empty follow-up scores exactly 0 and labels Medium", [] {
        const auto s = score_of({}, reference_config());
        const auto t = thresholds_from_json(json::parse(read_file(source("data/reference_thresholds.json"))));
        const auto label = assign_label(s.S, t);
        return Outcome{s.S == 0.0 && label == IncivilityLabel::Medium, fmt("S=%g", s.S) + " label=" + std::string(to_string(label))};
    });

    check.run(3, "subsumption over 1000 synthetic triples", [] {
        SeededRng rng(3);
        std::vector<std::vector<AuthoredFlags>> convs;
        for (int i = 0; i < 1000; ++i) convs.push_back(synth::random_conversation(rng, rng.below(25), 1 + rng.below(6), 0.25));
        std::size_t violations = 0, comparisons = 0;
        for (std::size_t d = 0; d < 4; ++d) {
            MetricConfig c;
            c.antisocial = DimensionSet{static_cast<Dimension>(d)};
            c.alpha = 1.0;
            c.beta = 0.0;
            std::vector<double> S, raw;
            for (const auto& conv : convs) {
                S.push_back(score_of(conv, c).S);
                std::map<std::string, double> per_user;
                for (const auto& p : conv) per_user[p.author_id] += (p.flags >> d) & 1u;
                double sum = 0;
                for (const auto& [u, n] : per_user) sum += std::sqrt(n);
                raw.push_back(sum);
            }
            for (std::size_t i = 0; i < convs.size(); ++i) {
                for (std::size_t j = i + 1; j < convs.size(); ++j) {
                    ++comparisons;
                    const auto by_metric = compare_pair(IncivilityScore{0, 0, 0, S[i]}, IncivilityScore{0, 0, 0, S[j]});
                    const auto by_raw = std::fabs(raw[i] - raw[j]) <= 1e-12 ? PairChoice::Tie : raw[i] > raw[j] ? PairChoice::Left : PairChoice::Right;
                    violations += by_metric != by_raw;
                }
            }
        }
        return Outcome{violations == 0, std::to_string(violations) + " violations in " + std::to_string(comparisons) + " comparisons"};
    });

    check.run(4, "planted configuration recovered by the full grid", [] {
        const auto planted = reference_config();
        const auto items = synth::planted_items(planted, 60, 2024);
        GridOptions opts;
        opts.jobs = default_jobs();
        const auto t0 = std::chrono::steady_clock::now();
        const auto results = grid_search(items, opts);
        const double secs = seconds_since(t0);
        const bool size_ok = results.size() == 255u * 231u;
        const auto& top = results.front();
        const bool same = decide(items, top.config) == decide(items, planted);
        std::ostringstream d;
        d << results.size() << " configs, top kappa=" << top.kappa << ", decisions match=" << (same ? "yes" : "no") << ", " << secs << " s";
        return Outcome{size_ok && top.kappa == 1.0 && same && secs < 120.0, d.str()};
    });

    check.run(5, "statistics against hand-computed values", [] {
        const std::vector<int> ka{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, kb{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
        const double kappa = stats::cohen_kappa(ka, kb).statistic;
        const double rho = stats::spearman_rho({1, 2, 3}, {3, 1, 2}).statistic;
        const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
        const auto one = stats::one_sample_t_test(x, 0.0);
        const auto welch = stats::welch_t_test(x, y);
        const auto mc = stats::mcnemar_from_counts(6, 2);
        const bool ok = near(kappa, 0.8, 1e-12) && near(rho, -0.5, 1e-12) && near(one.statistic, 3.4641, 5e-5) &&
                        near(*one.degrees_of_freedom, 2.0, 1e-12) && near(welch.statistic, -3.6742, 5e-5) && near(welch.p_value, 0.0213, 5e-4) &&
                        near(mc.statistic, 2.0, 1e-12) && near(mc.p_value, 0.1573, 5e-4);
        std::ostringstream d;
        d << "kappa=" << kappa << " rho=" << rho << " t1=" << one.statistic << " welch t=" << welch.statistic << " p=" << welch.p_value
          << " chi2=" << mc.statistic << " p=" << mc.p_value;
        return Outcome{ok, d.str()};
    });

    check.run(6, "majority baseline with Medium share 0.52", [] {
        std::vector<IncivilityLabel> gold;
        gold.insert(gold.end(), 24, IncivilityLabel::Low);
        gold.insert(gold.end(), 52, IncivilityLabel::Medium);
        gold.insert(gold.end(), 24, IncivilityLabel::High);
        const auto r = baseline_report(gold);
        const auto& m = r.at(IncivilityLabel::Medium);
        const bool ok = near(m.precision, 0.52, 0.005) && near(m.recall, 1.0, 0.005) && near(m.f1, 0.68, 0.005) && near(r.weighted.f1, 0.35, 0.01);
        return Outcome{ok, fmt("Medium P/R/F1=%.4f/%.4f/%.4f", m.precision, m.recall, m.f1) + fmt(" weighted F1=%.4f", r.weighted.f1)};
    });

    check.run(7, "metric properties over 500 randomized triples", [] {
        SeededRng rng(7);
        std::size_t counterexamples = 0;
        const auto lattice = weight_lattice(0.05);
        for (int trial = 0; trial < 500; ++trial) {
            MetricConfig c;
            c.antisocial = DimensionSet(static_cast<std::uint8_t>(1 + rng.below(15)));
            c.prosocial = DimensionSet(static_cast<std::uint8_t>(rng.below(16) << 4));
            const auto [ai, bi] = lattice[rng.below(lattice.size())];
            c.alpha = ai / 20.0;
            c.beta = bi / 20.0;
            auto posts = synth::random_conversation(rng, rng.below(25), 1 + rng.below(6), 0.2);
            const double base = score_of(posts, c).S;
            std::uint8_t anti_bit = 1;
            while (!(c.antisocial.bits() & anti_bit)) anti_bit = static_cast<std::uint8_t>(anti_bit << 1);
            if (c.alpha > 0) {
                auto more = posts;
                more.push_back({"newcomer", anti_bit});
                counterexamples += !(score_of(more, c).S > base);
            }
            if (c.alpha + c.beta < 1 - 1e-9) {
                auto more = posts;
                more.push_back({"newcomer", 0});
                counterexamples += !(score_of(more, c).S < base);
            }
            // concave split on a single dimension
            MetricConfig single;
            single.antisocial = DimensionSet(anti_bit);
            single.alpha = 1.0;
            single.beta = 0.0;
            const std::size_t k = 1 + rng.below(15), users = 1 + rng.below(k);
            std::vector<AuthoredFlags> lump(k, AuthoredFlags{"solo", anti_bit}), spread;
            for (std::size_t i = 0; i < k; ++i) spread.push_back({"s" + std::to_string(i % users), anti_bit});
            counterexamples += score_of(spread, single).A + 1e-12 < score_of(lump, single).A;
            // relabel every user
            auto renamed = posts;
            for (auto& p : renamed) p.author_id = "x-" + p.author_id + "-y";
            rng.shuffle(renamed);
            counterexamples += std::fabs(score_of(renamed, c).S - base) > 1e-12;
        }
        return Outcome{counterexamples == 0, std::to_string(counterexamples) + " counterexamples"};
    });

    check.run(8, "triple extraction on the 20-post fixture", [] {
        const auto forest = build_forest(parse_posts(read_file(source("tests/fixtures/forest20.jsonl"))));
        const std::vector<Triple> expected{
            {"H1", "R2", {"C1", "C3", "C2"}},
            {"H1", "R4", {}},
            {"H3", "R7", {"C6", "C7", "C8"}},
        };
        const auto got = extract_triples(forest);
        return Outcome{forest.posts().size() == 20 && got == expected, std::to_string(got.size()) + " triples"};
    });

    check.run(9, "pipeline on the bundled 5000-post corpus is deterministic and fast", [] {
        PipelineConfig config;
        config.posts_jsonl = read_file(source("data/synthetic/posts.jsonl"));
        config.scores_jsonl = read_file(source("data/synthetic/scores.jsonl"));
        config.resources = load_resources(source("data"));
        config.jobs = default_jobs();
        std::size_t posts = 0;
        for (char ch : config.posts_jsonl) posts += ch == '\n';
        auto t0 = std::chrono::steady_clock::now();
        const auto first = run_pipeline(config);
        const double s1 = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        const auto second = run_pipeline(config);
        const double s2 = seconds_since(t0);
        std::size_t differing = 0;
        for (const auto& [name, bytes] : first) {
            auto it = second.find(name);
            differing += it == second.end() || it->second != bytes;
        }
        std::ostringstream d;
        d << posts << " posts, " << first.size() << " artifacts, " << differing << " differ, runs " << s1 << " s / " << s2 << " s";
        return Outcome{posts >= 4500 && first.size() == second.size() && differing == 0 && s1 < 60 && s2 < 60, d.str()};
    });

    // With p <= alpha/m the 13-feature threshold is 0.05/13 = 0.003846, below
    // 0.004, so the first half of this criterion cannot hold. The rest is
    // reported alongside so a regression still shows up in the detail text.
    check.run(10, "Bonferroni over a 13-feature family: 0.004 significant, 0.01 not", [] {
        std::vector<double> p(13, 0.5);
        p[0] = 0.004;
        p[1] = 0.01;
        p[2] = 0.0038;
        const auto flags = stats::bonferroni(p, 0.05);
        std::ostringstream d;
        d << "threshold=" << 0.05 / 13 << "; 0.004 -> " << flags[0] << ", 0.01 -> " << flags[1] << ", 0.0038 -> " << flags[2];
        return Outcome{flags[0] && !flags[1], d.str()};
    });

    return check.failures() == 0 ? 0 : 1;
}
