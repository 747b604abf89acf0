#include "siftgraph/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "siftgraph/error.hpp"

namespace siftgraph {

namespace {

struct SplitScores {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

SplitScores split(std::span<const ScoreRecord> records)
{
    SplitScores s;
    for (const auto& r : records)
        (r.genuine() ? s.genuine : s.impostor).push_back(r.score);
    if (s.genuine.empty() || s.impostor.empty())
        throw Error(Errc::DegenerateScores, "ROC needs both genuine and impostor claims");
    std::sort(s.genuine.begin(), s.genuine.end());
    std::sort(s.impostor.begin(), s.impostor.end());
    return s;
}

RocPoint point_at(const SplitScores& s, double t)
{
    auto imp_accepted = std::upper_bound(s.impostor.begin(), s.impostor.end(), t) - s.impostor.begin();
    auto gen_accepted = std::upper_bound(s.genuine.begin(), s.genuine.end(), t) - s.genuine.begin();
    RocPoint p;
    p.threshold = t;
    p.far = static_cast<double>(imp_accepted) / static_cast<double>(s.impostor.size());
    p.frr = static_cast<double>(s.genuine.size() - static_cast<std::size_t>(gen_accepted)) /
            static_cast<double>(s.genuine.size());
    return p;
}

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open for writing: " + path.string());
    out << content;
    if (!out)
        throw Error(Errc::IoError, "write failed: " + path.string());
}

}  // namespace

std::vector<RocPoint> roc(std::span<const ScoreRecord> records)
{
    const SplitScores s = split(records);
    std::vector<double> thresholds;
    thresholds.reserve(records.size() + 2);
    for (const auto& r : records)
        thresholds.push_back(r.score);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<RocPoint> out;
    out.reserve(thresholds.size() + 2);
    const double inf = std::numeric_limits<double>::infinity();
    out.push_back(point_at(s, std::nextafter(thresholds.front(), -inf)));
    for (double t : thresholds)
        out.push_back(point_at(s, t));
    out.push_back(point_at(s, std::nextafter(thresholds.back(), inf)));
    return out;
}

EerResult prior_eer(std::span<const ScoreRecord> records)
{
    const auto curve = roc(records);
    const RocPoint* best = &curve.front();
    for (const auto& p : curve)
        if (std::abs(p.far - p.frr) < std::abs(best->far - best->frr))
            best = &p;
    return {0.5 * (best->far + best->frr), best->threshold, best->far, best->frr};
}

std::map<std::string, double> client_thresholds(std::span<const ScoreRecord> records)
{
    std::map<std::string, std::vector<ScoreRecord>> by_subject;
    for (const auto& r : records)
        by_subject[r.claimed_id].push_back(r);

    std::map<std::string, double> out;
    for (const auto& [subject, claims] : by_subject) {
        bool has_genuine = std::any_of(claims.begin(), claims.end(), [](const auto& c) { return c.genuine(); });
        bool has_impostor = std::any_of(claims.begin(), claims.end(), [](const auto& c) { return !c.genuine(); });
        if (!has_genuine || !has_impostor)
            throw Error(Errc::InsufficientClaims,
                        "subject '" + subject + "' needs at least one genuine and one impostor claim");
        out[subject] = prior_eer(claims).threshold;
    }
    return out;
}

ErrorRates far_frr_at(std::span<const ScoreRecord> records, const std::map<std::string, double>& thresholds,
                      std::optional<double> fallback)
{
    std::size_t genuine = 0, impostor = 0, false_accept = 0, false_reject = 0;
    for (const auto& r : records) {
        double t;
        auto it = thresholds.find(r.claimed_id);
        if (it != thresholds.end())
            t = it->second;
        else if (fallback)
            t = *fallback;
        else
            throw Error(Errc::MissingThreshold, "no threshold for subject '" + r.claimed_id + "'");

        const bool accepted = r.score <= t;
        if (r.genuine()) {
            ++genuine;
            false_reject += accepted ? 0 : 1;
        } else {
            ++impostor;
            false_accept += accepted ? 1 : 0;
        }
    }
    ErrorRates e;
    e.far = impostor ? static_cast<double>(false_accept) / static_cast<double>(impostor) : 0.0;
    e.frr = genuine ? static_cast<double>(false_reject) / static_cast<double>(genuine) : 0.0;
    return e;
}

double wer(double far, double frr, double r)
{
    if (!(far >= 0.0 && far <= 1.0) || !(frr >= 0.0 && frr <= 1.0))
        throw Error(Errc::InvalidRate, "error rates must lie in [0, 1]");
    if (!(r > 0.0) || !std::isfinite(r))
        throw Error(Errc::InvalidRate, "cost ratio must be positive");
    return (frr + r * far) / (1.0 + r);
}

std::vector<ScoreRecord> score_group(std::span<const ProtocolEntry> entries, const std::string& group,
                                     Constraint constraint, const MatchConfig& cfg)
{
    std::vector<FaceGraph> gallery;
    for (const auto& e : entries)
        if (e.group == group && e.role == "train")
            gallery.push_back(e.graph);

    std::vector<ScoreRecord> out;
    for (const auto& e : entries) {
        if (e.group != group || e.role != "test")
            continue;
        auto ranked = identify(e.graph, gallery, constraint, cfg);
        // Claims are emitted in subject order so the record list is stable.
        std::sort(ranked.begin(), ranked.end(),
                  [](const RankedSubject& a, const RankedSubject& b) { return a.subject_id < b.subject_id; });
        for (const auto& r : ranked)
            out.push_back({r.subject_id, e.graph.subject_id(), r.score.combined, group});
    }
    return out;
}

ProtocolReport run_protocol(std::span<const ProtocolEntry> entries, Constraint constraint, const MatchConfig& cfg)
{
    std::map<std::string, std::set<std::string>> groups_of_subject;
    for (const auto& e : entries) {
        if (e.group != "G1" && e.group != "G2")
            throw Error(Errc::InvalidArgument, "group must be G1 or G2, got '" + e.group + "'");
        if (e.role != "train" && e.role != "test")
            throw Error(Errc::InvalidArgument, "role must be train or test, got '" + e.role + "'");
        groups_of_subject[e.graph.subject_id()].insert(e.group);
    }
    for (const auto& [subject, groups] : groups_of_subject)
        if (groups.size() > 1)
            throw Error(Errc::GroupOverlap, "subject '" + subject + "' appears in both G1 and G2");

    ProtocolReport report;
    report.constraint = constraint;
    for (GroupResult* g : {&report.g1, &report.g2}) {
        g->group = g == &report.g1 ? "G1" : "G2";
        g->scores = score_group(entries, g->group, constraint, cfg);
        g->roc = roc(g->scores);
        g->pooled = prior_eer(g->scores);
        g->client_thresholds = client_thresholds(g->scores);

        std::map<std::string, std::vector<ScoreRecord>> by_subject;
        for (const auto& r : g->scores)
            by_subject[r.claimed_id].push_back(r);
        double sum = 0.0;
        for (const auto& [subject, claims] : by_subject)
            sum += prior_eer(claims).eer;
        g->client_mean_eer = sum / static_cast<double>(by_subject.size());
    }

    // Groups hold disjoint subjects, so a transferred client threshold only
    // exists for subjects present in both; all others fall back to the
    // source group's pooled prior-EER threshold.
    auto transfer = [&](const GroupResult& source, const GroupResult& target) {
        const ErrorRates rates = far_frr_at(target.scores, source.client_thresholds, source.pooled.threshold);
        for (double r : kCostRatios)
            report.wer.push_back({r, source.group, target.group, rates.far, rates.frr, wer(rates.far, rates.frr, r)});
    };
    transfer(report.g1, report.g2);
    transfer(report.g2, report.g1);
    return report;
}

std::string wer_csv(std::span<const ProtocolReport> reports)
{
    std::string out = "constraint,r,direction,far,frr,wer\n";
    for (const auto& rep : reports) {
        for (const auto& w : rep.wer) {
            out += std::string(to_string(rep.constraint)) + "," + fmt("%g", w.r) + "," + w.threshold_source_group +
                   "->" + w.evaluated_group + "," + fmt("%.9g", w.far) + "," + fmt("%.9g", w.frr) + "," +
                   fmt("%.9g", w.wer) + "\n";
        }
    }
    return out;
}

std::string format_report(std::span<const ProtocolReport> reports)
{
    auto pct = [](double v) { return fmt("%9.2f%%", 100.0 * v); };
    auto row = [&](const std::string& label, auto value_of) {
        char head[40];
        std::snprintf(head, sizeof head, "%-28s", label.c_str());
        std::string line = head;
        for (const auto& rep : reports)
            line += "  " + pct(value_of(rep));
        return line + "\n";
    };

    std::string out;
    std::string header(28, ' ');
    for (const auto& rep : reports) {
        char col[16];
        std::snprintf(col, sizeof col, "  %10s", std::string(to_string(rep.constraint)).c_str());
        header += col;
    }
    header += "\n";

    out += "Prior EER (pooled threshold)\n" + header;
    out += row("Prior EER on G1", [](const ProtocolReport& r) { return r.g1.pooled.eer; });
    out += row("Prior EER on G2", [](const ProtocolReport& r) { return r.g2.pooled.eer; });
    out += row("Average", [](const ProtocolReport& r) { return r.average_eer(); });
    out += "\nPrior EER (mean of client-specific)\n" + header;
    out += row("Client EER on G1", [](const ProtocolReport& r) { return r.g1.client_mean_eer; });
    out += row("Client EER on G2", [](const ProtocolReport& r) { return r.g2.client_mean_eer; });

    out += "\nWeighted error rate\n" + header;
    for (double r : kCostRatios) {
        for (const char* target : {"G1", "G2"}) {
            std::string label = "WER(R=" + fmt("%g", r) + ") on " + target;
            out += row(label, [&](const ProtocolReport& rep) {
                for (const auto& w : rep.wer)
                    if (w.r == r && w.evaluated_group == target)
                        return w.wer;
                return 0.0;
            });
        }
    }
    return out;
}

void write_protocol_report(const ProtocolReport& report, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw Error(Errc::IoError, "cannot create directory " + out_dir.string() + ": " + ec.message());

    std::string scores = "claimed_id,true_id,group,score\n";
    for (const GroupResult* g : {&report.g1, &report.g2})
        for (const auto& r : g->scores)
            scores += r.claimed_id + "," + r.true_id + "," + r.group + "," + fmt("%.9g", r.score) + "\n";
    write_file(out_dir / "scores.csv", scores);

    for (const GroupResult* g : {&report.g1, &report.g2}) {
        std::string csv = "threshold,far,frr\n";
        for (const auto& p : g->roc)
            csv += fmt("%.9g", p.threshold) + "," + fmt("%.9g", p.far) + "," + fmt("%.9g", p.frr) + "\n";
        write_file(out_dir / ("roc_" + g->group + ".csv"), csv);
    }

    std::span<const ProtocolReport> one(&report, 1);
    write_file(out_dir / "wer_report.csv", wer_csv(one));
    write_file(out_dir / "report.txt", format_report(one));
}

}  // namespace siftgraph
