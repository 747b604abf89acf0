// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "siftgraph/cli.hpp"
#include "siftgraph/corpus.hpp"
#include "siftgraph/evaluation.hpp"
#include "siftgraph/matcher.hpp"
#include "siftgraph/store.hpp"
#include "support.hpp"

using namespace siftgraph;
namespace t = siftgraph::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_seconds;  // 0 = no runtime bound
    std::function<Outcome()> run;
};

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Seeded corpus exactly as gen-corpus writes it: seed 42, 10 subjects x 4
// images, first half G1, image 0 enrolled.
struct SeededCorpus {
    std::vector<ProtocolEntry> entries;
    std::vector<FaceGraph> graphs;
};

const SeededCorpus& seeded_corpus()
{
    static const SeededCorpus corpus = [] {
        SeededCorpus c;
        const CorpusOptions opts;
        const SiftConfig cfg;
        for (int s = 0; s < opts.subjects; ++s)
            for (int k = 0; k < opts.images_per_subject; ++k) {
                auto img = histogram_equalize(render_face(opts.seed, s, random_perturbation(opts.seed, s, k), opts.size));
                FaceGraph g = build_graph(extract_features(img, cfg), subject_name(s), subject_name(s) + "_" + std::to_string(k));
                c.graphs.push_back(g);
                c.entries.push_back({g, s < (opts.subjects + 1) / 2 ? "G1" : "G2", k == 0 ? "train" : "test"});
            }
        return c;
    }();
    return corpus;
}

Outcome identity_zero()
{
    const auto& corpus = seeded_corpus();
    int violations = 0;
    for (const auto& g : corpus.graphs) {
        if (match(g, g, Constraint::RPBMC, MatchConfig{}).combined != 0.0)
            ++violations;
        if (match(g, g, Constraint::GIBMC, MatchConfig{}).vertex_raw != 0.0)
            ++violations;
    }
    return {violations == 0, std::to_string(corpus.graphs.size()) + " images, " + std::to_string(violations) +
                                 " non-zero self scores"};
}

Outcome brute_force_equivalence()
{
    std::mt19937_64 rng(2024);
    double worst_rel = 0.0;
    int pairing_mismatches = 0;
    std::size_t mutual_total = 0;
    for (int k = 0; k < 50; ++k) {
        FaceGraph g = t::random_graph(rng, 5 + rng() % 26);
        FaceGraph p = k % 2 ? t::random_graph(rng, 5 + rng() % 26)
                            : t::related_graph(rng, g, 1 + rng() % g.vertex_count(), rng() % 20, 0.04);
        if (p.vertex_count() < 5)
            p = t::related_graph(rng, g, g.vertex_count(), 5, 0.04);
        const double oracle = t::oracle_min_min_mean(g, p);
        const double got = gibmc_vertex_score(g, p).mean;
        worst_rel = std::max(worst_rel, std::abs(got - oracle) / std::max(oracle, 1e-300));

        auto expected = t::oracle_mutual(g, p, MatchConfig{}.ratio);
        std::set<std::pair<std::size_t, std::size_t>> actual;
        for (const auto& pair : rpbmc_pairs(g, p, MatchConfig{}.ratio).pairs)
            actual.insert({pair.gallery, pair.probe});
        pairing_mismatches += actual != expected;
        mutual_total += expected.size();
    }
    return {worst_rel <= 1e-12 && pairing_mismatches == 0,
            "max relative vertex-score error " + fmt("%.3g", worst_rel) + ", " + std::to_string(pairing_mismatches) +
                " pairing mismatches over " + std::to_string(mutual_total) + " oracle pairs"};
}

Outcome one_to_one()
{
    const auto& graphs = seeded_corpus().graphs;
    std::size_t calls = 0, violations = 0;
    for (const auto& g : graphs)
        for (const auto& p : graphs) {
            auto set = rpbmc_pairs(g, p, MatchConfig{}.ratio);
            std::set<std::size_t> gs, ps;
            for (const auto& pair : set.pairs) {
                gs.insert(pair.gallery);
                ps.insert(pair.probe);
            }
            violations += gs.size() != set.pairs.size() || ps.size() != set.pairs.size();
            ++calls;
        }
    return {violations == 0, std::to_string(calls) + " pairs checked, " + std::to_string(violations) + " violations"};
}

Outcome invariance_suite()
{
    const int n = 20;
    const SiftConfig cfg;
    std::vector<FaceGraph> originals, copies;
    for (int i = 0; i < n; ++i) {
        Perturbation pert;
        pert.rotation = (i % 2 ? 15.0 : -15.0) * std::numbers::pi / 180.0;
        pert.scale = 1.2;
        pert.tx = i % 3 == 0 ? 5.0 : -4.0;
        pert.ty = i % 4 == 0 ? -5.0 : 3.0;
        auto a = histogram_equalize(render_face(777, i, Perturbation{}));
        auto b = histogram_equalize(render_face(777, i, pert));
        originals.push_back(build_graph(extract_features(a, cfg), "t" + std::to_string(i), "orig"));
        copies.push_back(build_graph(extract_features(b, cfg), "t" + std::to_string(i), "copy"));
    }
    int ok = 0, total = 0;
    for (int i = 0; i < n; ++i) {
        const double genuine = match(originals[i], copies[i], Constraint::RPBMC, MatchConfig{}).combined;
        for (int j = 0; j < n; ++j) {
            if (j == i)
                continue;
            ++total;
            ok += genuine < match(originals[i], copies[j], Constraint::RPBMC, MatchConfig{}).combined;
        }
    }
    const double frac = static_cast<double>(ok) / total;
    return {frac >= 0.95, std::to_string(ok) + "/" + std::to_string(total) + " triples (" +
                              fmt("%.1f", 100 * frac) + "%) with genuine below impostor"};
}

Outcome metric_pipeline()
{
    std::mt19937_64 rng(31337);
    int eer_mismatch = 0, monotone_fail = 0, wer_fail = 0;
    double worst_eer = 0.0;
    for (int k = 0; k < 20; ++k) {
        auto recs = t::random_scores(rng, 1000, 2 + static_cast<int>(rng() % 8), t::uniform(rng, 0.0, 0.8));
        auto got = prior_eer(recs);
        auto [eer, threshold] = t::oracle_eer(recs);
        eer_mismatch += got.threshold != threshold;
        worst_eer = std::max(worst_eer, std::abs(got.eer - eer));
        auto curve = roc(recs);
        for (std::size_t i = 1; i < curve.size(); ++i)
            monotone_fail += curve[i].far < curve[i - 1].far || curve[i].frr > curve[i - 1].frr;
    }
    for (int k = 0; k < 100; ++k) {
        const double e = t::uniform(rng), r = std::exp(t::uniform(rng, -4.0, 4.0));
        wer_fail += std::abs(wer(e, e, r) - e) > 1e-15;
    }
    return {eer_mismatch == 0 && worst_eer <= 1e-9 && monotone_fail == 0 && wer_fail == 0,
            std::to_string(eer_mismatch) + " threshold mismatches on 20x1000 scores, max EER error " +
                fmt("%.3g", worst_eer) + ", " + std::to_string(wer_fail) + " WER identity failures, " +
                std::to_string(monotone_fail) + " ROC monotonicity breaks"};
}

Outcome qualitative_ordering()
{
    const auto& entries = seeded_corpus().entries;
    auto gi = run_protocol(entries, Constraint::GIBMC, MatchConfig{});
    auto rp = run_protocol(entries, Constraint::RPBMC, MatchConfig{});
    return {rp.average_eer() <= gi.average_eer(),
            "average prior EER GIBMC " + fmt("%.2f%%", 100 * gi.average_eer()) + ", RPBMC " +
                fmt("%.2f%%", 100 * rp.average_eer()) + " (G1/G2 GIBMC " + fmt("%.2f", 100 * gi.g1.pooled.eer) + "/" +
                fmt("%.2f", 100 * gi.g2.pooled.eer) + ", RPBMC " + fmt("%.2f", 100 * rp.g1.pooled.eer) + "/" +
                fmt("%.2f", 100 * rp.g2.pooled.eer) + ")"};
}

Outcome weighting_bands()
{
    std::mt19937_64 rng(99);
    std::vector<double> values;
    for (int i = 0; i < 10000; ++i)
        values.push_back(t::uniform(rng) < 0.02 ? t::uniform(rng, 0.0, 10.0) : t::uniform(rng));
    const auto got = gaussian_weight(values);
    const auto expected = t::oracle_bands(values);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        mismatches += got.band[i] != expected[i];

    std::vector<double> flat(50, 0.37);
    const auto w = gaussian_weight(flat);
    bool flat_ok = w.params.sigma == 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i)
        flat_ok = flat_ok && w.band[i] == 1 && w.weighted[i] == 0.37 * 0.075;

    std::array<int, 4> hist{};
    for (int b : expected)
        ++hist[b];
    return {mismatches == 0 && flat_ok,
            std::to_string(mismatches) + " band mismatches on 10000 values (bands 1/2/3/out: " +
                std::to_string(hist[1]) + "/" + std::to_string(hist[2]) + "/" + std::to_string(hist[3]) + "/" +
                std::to_string(hist[0]) + "), sigma=0 case " + (flat_ok ? "ok" : "wrong")};
}

Outcome descriptor_contract()
{
    static_assert(std::tuple_size_v<Descriptor> == 128);
    std::size_t keypoints = 0, violations = 0;
    double worst_norm = 0.0;
    for (const auto& g : seeded_corpus().graphs)
        for (const auto& kp : g.vertices()) {
            ++keypoints;
            double sq = 0.0;
            for (float v : kp.descriptor) {
                violations += v < 0.0f || v > 0.2f + 1e-6f;
                sq += static_cast<double>(v) * v;
            }
            worst_norm = std::max(worst_norm, std::abs(std::sqrt(sq) - 1.0));
        }
    violations += worst_norm > 1e-6;
    std::size_t constant_kps = 0;
    for (std::uint8_t level : {0, 17, 128, 255})
        for (auto [w, h] : {std::pair{16, 16}, std::pair{64, 48}, std::pair{128, 128}})
            constant_kps += extract_features(histogram_equalize(GrayImage(w, h, level)), SiftConfig{}).size();
    return {violations == 0 && constant_kps == 0,
            std::to_string(keypoints) + " descriptors, max |norm-1| " + fmt("%.2g", worst_norm) + ", " +
                std::to_string(violations) + " violations; constant images gave " + std::to_string(constant_kps) +
                " keypoints"};
}

Outcome store_round_trip()
{
    t::TempDir dir("acceptance_store");
    std::mt19937_64 rng(4242);
    int unequal = 0, nondeterministic = 0;
    for (int k = 0; k < 100; ++k) {
        const std::uint64_t digest = rng();
        GalleryDb db(digest);
        const std::size_t entries = rng() % 12;
        for (std::size_t e = 0; e < entries; ++e)
            db.add(t::random_graph(rng, 2 + rng() % 40, "s" + std::to_string(rng() % 6), "i" + std::to_string(e)),
                   digest);
        save(db, dir / "a.gsft");
        save(db, dir / "b.gsft");
        unequal += !(load(dir / "a.gsft") == db);
        std::ifstream fa(dir / "a.gsft", std::ios::binary), fb(dir / "b.gsft", std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
        nondeterministic += sa != sb;
    }
    return {unequal == 0 && nondeterministic == 0, "100 galleries, " + std::to_string(unequal) +
                                                       " unequal after reload, " + std::to_string(nondeterministic) +
                                                       " non-identical rewrites"};
}

Outcome cli_smoke()
{
    t::TempDir dir("acceptance_cli");
    auto run = [](std::vector<std::string> args, std::string* captured = nullptr) {
        std::ostringstream out, err;
        int code = run_cli(args, out, err);
        if (captured)
            *captured = out.str();
        return code;
    };
    const std::string corpus = (dir / "corpus").string();
    const std::string db = (dir / "gallery.gsft").string();
    if (int c = run({"gen-corpus", "--seed", "42", "--subjects", "10", "--images-per-subject", "4", "--out", corpus}))
        return {false, "gen-corpus exited " + std::to_string(c)};
    if (int c = run({"enroll", corpus + "/manifest.csv", "--db", db}))
        return {false, "enroll exited " + std::to_string(c)};

    int probes = 0, correct = 0;
    for (const auto& row : read_manifest(fs::path(corpus) / "manifest.csv")) {
        if (row.role != "test")
            continue;
        std::string out;
        if (int c = run({"identify", row.image_path, "--db", db, "--top", "1"}, &out))
            return {false, "identify exited " + std::to_string(c) + " on " + row.image_id};
        std::istringstream line(out);
        std::string rank, subject;
        line >> rank >> subject;
        ++probes;
        correct += subject == row.subject_id;
    }
    if (int c = run({"evaluate", corpus + "/manifest.csv", "--out", (dir / "eval").string(), "--constraint", "both"}))
        return {false, "evaluate exited " + std::to_string(c)};
    const double acc = probes ? static_cast<double>(correct) / probes : 0.0;
    return {acc >= 0.9, "all commands exited 0; rank-1 " + std::to_string(correct) + "/" + std::to_string(probes) +
                            " (" + fmt("%.1f", 100 * acc) + "%)"};
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {"identity-zero", 30, identity_zero},
        {"brute-force-equivalence", 60, brute_force_equivalence},
        {"one-to-one-invariant", 0, one_to_one},
        {"invariance-suite", 180, invariance_suite},
        {"metric-pipeline", 0, metric_pipeline},
        {"qualitative-ordering", 300, qualitative_ordering},
        {"weighting-bands", 0, weighting_bands},
        {"descriptor-contract", 0, descriptor_contract},
        {"store-round-trip", 0, store_round_trip},
        {"cli-smoke", 0, cli_smoke},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0 && secs > c.budget_seconds) {
            o.pass = false;
            o.detail += "; over the " + fmt("%g", c.budget_seconds) + " s budget";
        }
        failures += !o.pass;
        std::printf("%s  %-26s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
