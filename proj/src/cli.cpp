#include "siftgraph/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "siftgraph/corpus.hpp"
#include "siftgraph/error.hpp"
#include "siftgraph/evaluation.hpp"
#include "siftgraph/image.hpp"
#include "siftgraph/matcher.hpp"
#include "siftgraph/sift.hpp"
#include "siftgraph/store.hpp"

namespace siftgraph {

namespace {

namespace fs = std::filesystem;

struct CliConfig {
    SiftConfig detector;
    std::string detector_file;
    std::vector<std::string> detector_overrides;
    MatchConfig matcher;
    std::string constraint = "RPBMC";
};

// Detector and matcher flags shared by every pipeline subcommand.
void add_pipeline_flags(CLI::App* cmd, CliConfig& c)
{
    auto* det = cmd->add_option_group("detector", "SIFT detector parameters");
    det->add_option("--detector-config", c.detector_file, "key=value detector config file")
        ->check(CLI::ExistingFile);
    det->add_option("--set", c.detector_overrides, "detector override key=value (repeatable)");
    det->add_option("--scales-per-octave", c.detector.scales_per_octave, "DoG scales per octave")
        ->capture_default_str()
        ->check(CLI::Range(1, 16));
    det->add_option("--base-sigma", c.detector.base_sigma, "base blur sigma")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    det->add_option("--contrast-threshold", c.detector.contrast_threshold, "DoG contrast threshold on [0,1] intensities")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    det->add_option("--edge-ratio", c.detector.edge_ratio, "principal curvature ratio limit")
        ->capture_default_str()
        ->check(CLI::Range(1.0001, 1e6));
    det->add_option("--upsample", c.detector.upsample, "double the image before octave 0")->capture_default_str();

    auto* mat = cmd->add_option_group("matcher", "graph matching parameters");
    mat->add_option("--ratio", c.matcher.ratio, "nearest/second-nearest ratio for mutual pairing")
        ->capture_default_str()
        ->check(CLI::Range(1e-9, 1.0));
    mat->add_option("--weights", c.matcher.band_multipliers, "multipliers for the 1/2/3-sigma bands")
        ->expected(3)
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    mat->add_option("--blend", c.matcher.vertex_blend, "vertex share of the combined score")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    mat->add_option("--edge-weights", c.matcher.edge_weights, "edge component weights (length, dtheta, dlogscale)")
        ->expected(3)
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
}

void add_constraint_flag(CLI::App* cmd, CliConfig& c, bool allow_both)
{
    std::vector<std::string> choices{"GIBMC", "RPBMC"};
    if (allow_both)
        choices.emplace_back("both");
    cmd->add_option("--constraint", c.constraint, "matching constraint")
        ->capture_default_str()
        ->transform(CLI::IsMember(choices, CLI::ignore_case));
}

void finalize(CliConfig& c)
{
    if (!c.detector_file.empty()) {
        std::ifstream in(c.detector_file);
        std::stringstream ss;
        ss << in.rdbuf();
        c.detector = SiftConfig::from_text(ss.str());
    }
    for (const auto& kv : c.detector_overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::InvalidArgument, "--set expects key=value, got '" + kv + "'");
        c.detector.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    c.detector.validate();
    c.matcher.validate();
}

FaceGraph extract_graph(const fs::path& image, const SiftConfig& cfg, std::string subject, std::string image_id)
{
    GrayImage img = histogram_equalize(load_image(image));
    return build_graph(extract_features(img, cfg), std::move(subject), std::move(image_id));
}

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"SIFT complete-graph face identification", "siftgraph"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    CliConfig cfg;

    // extract
    std::string x_image, x_db, x_subject, x_image_id;
    auto* extract = app.add_subcommand("extract", "equalize an image, extract SIFT features, append to a gallery");
    extract->add_option("image", x_image, "input PGM")->required();
    extract->add_option("--db", x_db, "gallery file (created if missing)")->required();
    extract->add_option("--subject", x_subject, "subject id (default: file stem)");
    extract->add_option("--image-id", x_image_id, "image id (default: file stem)");
    add_pipeline_flags(extract, cfg);

    // enroll
    std::string e_manifest, e_db;
    bool e_all_roles = false;
    auto* enroll = app.add_subcommand("enroll", "batch extract every train image of a manifest into a gallery");
    enroll->add_option("manifest", e_manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    enroll->add_option("--db", e_db, "output gallery file (overwritten)")->required();
    enroll->add_flag("--all-roles", e_all_roles, "enroll test images too");
    add_pipeline_flags(enroll, cfg);

    // identify
    std::string i_probe, i_db;
    bool i_csv = false;
    std::size_t i_top = 0;
    auto* ident = app.add_subcommand("identify", "rank gallery subjects against a probe image");
    ident->add_option("probe", i_probe, "probe PGM")->required();
    ident->add_option("--db", i_db, "gallery file")->required();
    ident->add_flag("--csv", i_csv, "machine-readable score rows");
    ident->add_option("--top", i_top, "print only the best N subjects (0 = all)")->capture_default_str();
    add_pipeline_flags(ident, cfg);
    add_constraint_flag(ident, cfg, false);

    // match
    std::string m_gallery, m_probe;
    auto* matchcmd = app.add_subcommand("match", "score one gallery/probe image pair");
    matchcmd->add_option("gallery", m_gallery, "gallery PGM")->required();
    matchcmd->add_option("probe", m_probe, "probe PGM")->required();
    add_pipeline_flags(matchcmd, cfg);
    add_constraint_flag(matchcmd, cfg, true);

    // evaluate
    std::string v_manifest, v_out = "eval_out";
    auto* evaluate = app.add_subcommand("evaluate", "run the two-group verification protocol over a manifest");
    evaluate->add_option("manifest", v_manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--out", v_out, "output directory")->capture_default_str();
    add_pipeline_flags(evaluate, cfg);
    add_constraint_flag(evaluate, cfg, true);

    // gen-corpus
    CorpusOptions g_opts;
    std::string g_out;
    auto* gen = app.add_subcommand("gen-corpus", "write a deterministic synthetic face-proxy corpus");
    gen->add_option("--seed", g_opts.seed, "generator seed")->capture_default_str();
    gen->add_option("--subjects", g_opts.subjects, "number of subjects (>= 2)")->capture_default_str();
    gen->add_option("--images-per-subject", g_opts.images_per_subject, "images per subject (>= 2)")
        ->capture_default_str();
    gen->add_option("--size", g_opts.size, "image side in pixels")->capture_default_str();
    gen->add_option("--out", g_out, "output directory")->required();

    // export
    std::string t_db;
    auto* exporter = app.add_subcommand("export", "dump a gallery as text, one keypoint per line");
    exporter->add_option("db", t_db, "gallery file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*gen) {
            auto rows = generate_corpus(g_opts, g_out);
            out << "wrote " << rows.size() << " images and manifest.csv to " << g_out << "\n";
            return 0;
        }
        if (*exporter) {
            export_text(load(t_db), out);
            return 0;
        }

        finalize(cfg);
        const std::uint64_t digest = cfg.detector.digest();

        if (*extract) {
            const fs::path path(x_image);
            const std::string stem = path.stem().string();
            FaceGraph g = extract_graph(path, cfg.detector, x_subject.empty() ? stem : x_subject,
                                        x_image_id.empty() ? stem : x_image_id);
            GalleryDb db(digest);
            if (fs::exists(x_db))
                db = load(x_db);
            const std::size_t n = g.vertex_count();
            db.add(std::move(g), digest);
            save(db, x_db);
            out << n << " keypoints; gallery now holds " << db.size() << " entries\n";
            return 0;
        }

        if (*enroll) {
            GalleryDb db(digest);
            for (const auto& row : read_manifest(e_manifest)) {
                if (!e_all_roles && row.role != "train")
                    continue;
                FaceGraph g = extract_graph(row.image_path, cfg.detector, row.subject_id, row.image_id);
                out << row.image_id << ": " << g.vertex_count() << " keypoints\n";
                db.add(std::move(g), digest);
            }
            save(db, e_db);
            out << "enrolled " << db.size() << " images into " << e_db << "\n";
            return 0;
        }

        if (*ident) {
            GalleryDb db = load(i_db);
            if (db.empty())
                throw Error(Errc::EmptyGallery, "gallery '" + i_db + "' has no entries");
            if (db.cfg_digest() != digest)
                throw Error(Errc::MixedConfig, "gallery was built with a different detector config");
            const fs::path path(i_probe);
            const std::string stem = path.stem().string();
            FaceGraph probe = extract_graph(path, cfg.detector, "", stem);
            const Constraint c = parse_constraint(cfg.constraint);
            auto ranked = identify(probe, db.entries(), c, cfg.matcher);
            if (i_top > 0 && ranked.size() > i_top)
                ranked.resize(i_top);
            if (i_csv) {
                out << score_csv_header() << "\n";
                for (const auto& r : ranked)
                    out << score_csv_row(stem, r.subject_id, r.score) << "\n";
            } else {
                for (std::size_t k = 0; k < ranked.size(); ++k)
                    out << k + 1 << "  " << ranked[k].subject_id << "  " << fmt("%.9g", ranked[k].score.combined)
                        << "  (" << ranked[k].image_id << ")\n";
            }
            return 0;
        }

        if (*matchcmd) {
            const fs::path gp(m_gallery), pp(m_probe);
            FaceGraph g = extract_graph(gp, cfg.detector, gp.stem().string(), gp.stem().string());
            FaceGraph p = extract_graph(pp, cfg.detector, pp.stem().string(), pp.stem().string());
            std::vector<Constraint> which;
            if (cfg.constraint == "both")
                which = {Constraint::GIBMC, Constraint::RPBMC};
            else
                which = {parse_constraint(cfg.constraint)};
            out << score_csv_header() << "\n";
            for (Constraint c : which)
                out << score_csv_row(p.image_id(), g.subject_id(), match(g, p, c, cfg.matcher)) << "\n";
            return 0;
        }

        if (*evaluate) {
            std::vector<ProtocolEntry> entries;
            for (const auto& row : read_manifest(v_manifest))
                entries.push_back(
                    {extract_graph(row.image_path, cfg.detector, row.subject_id, row.image_id), row.group, row.role});

            std::vector<Constraint> which;
            if (cfg.constraint == "both")
                which = {Constraint::GIBMC, Constraint::RPBMC};
            else
                which = {parse_constraint(cfg.constraint)};

            std::vector<ProtocolReport> reports;
            for (Constraint c : which) {
                reports.push_back(run_protocol(entries, c, cfg.matcher));
                write_protocol_report(reports.back(), fs::path(v_out) / std::string(to_string(c)));
            }
            const std::string text = format_report(reports);
            std::ofstream(fs::path(v_out) / "report.txt") << text;
            std::ofstream(fs::path(v_out) / "wer_report.csv") << wer_csv(reports);
            out << text;
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace siftgraph
