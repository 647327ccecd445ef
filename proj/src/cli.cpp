#include "seqreg/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "seqreg/error.hpp"
#include "seqreg/evalstat.hpp"
#include "seqreg/phantom.hpp"
#include "seqreg/pipeline.hpp"
#include "seqreg/transform.hpp"
#include "seqreg/volio.hpp"

namespace seqreg::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Bad flag combination detected after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_json(const fs::path &path, const ordered_json &j) { write_file_atomic(path, j.dump(2) + "\n"); }

ordered_json vec_json(const Vec3 &v) { return ordered_json::array({v.x, v.y, v.z}); }

ordered_json report_json(const opt::OptimizerReport &r) {
    return ordered_json{{"iterations", r.iterations},
                        {"evaluations", r.evaluations},
                        {"initial_objective", r.initial_objective},
                        {"final_objective", r.final_objective},
                        {"stop_reason", std::string(opt::to_string(r.stop_reason))}};
}

std::string fmt(const char *format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

Geometry geometry_of(const MetaObject &obj) {
    return std::visit([](const auto &o) { return o.geometry(); }, obj);
}

OobPolicy parse_policy(const std::string &s) { return s == "clamp" ? OobPolicy::Clamp : OobPolicy::Zero; }

/// Exceptions to exit codes; the message goes to err.
template <class F>
int guarded(std::ostream &err, F &&body) {
    try {
        return body();
    } catch (const UsageError &e) {
        err << "error: " << e.what() << '\n';
        return Usage;
    } catch (const NumericalError &e) {
        err << "numerical failure: " << e.what() << '\n';
        return NumericalFailure;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return DataError;
    }
}

// register ---------------------------------------------------------------------------------------

struct CaseInputs {
    std::string id;
    fs::path fixed, moving, mask;
    std::vector<fs::path> maps;
};

/// Loads, registers and only then writes, so a failing case leaves no outputs behind.
ordered_json register_case(const CaseInputs &c, const RegistrationConfigFile &cfg, const fs::path &out_dir) {
    const auto fixed = read_volume(c.fixed);
    const auto moving = read_volume(c.moving);
    const auto mask = read_mask(c.mask);
    std::vector<Volume3D> maps{moving};
    for (const auto &m : c.maps) maps.push_back(read_volume(m));

    const auto result = register_images(fixed, moving, mask, cfg.config);
    const auto warped = apply_to_maps(result, maps, fixed.geometry(), cfg.config.oob_policy);

    ordered_json metrics;
    metrics["schema_version"] = output_schema_version;
    metrics["case_id"] = c.id;
    metrics["ngf_before"] = result.ngf_before;
    metrics["ngf_after"] = result.ngf_after;
    metrics["folding_percent_in_mask"] = result.folding_percent_in_mask;
    const auto &rigid = result.deformation.rigid;
    metrics["rigid"] = {{"rotation", vec_json(rigid.rotation)},
                        {"translation", vec_json(rigid.translation)},
                        {"center", vec_json(rigid.center)}};
    metrics["level_epsilons"] = result.level_epsilons;
    auto &reports = metrics["reports"];
    reports["rigid"] = ordered_json::array();
    reports["deformable"] = ordered_json::array();
    for (const auto &r : result.rigid_reports) reports["rigid"].push_back(report_json(r));
    for (const auto &r : result.deform_reports) reports["deformable"].push_back(report_json(r));

    fs::create_directories(out_dir);
    write_deformation(result.deformation, out_dir / "deformation");
    write_metaimage(warped[0], out_dir / "warped_moving.mha");
    for (std::size_t m = 0; m < c.maps.size(); ++m)
        write_metaimage(warped[m + 1], out_dir / ("warped_" + c.maps[m].filename().string()));
    write_json(out_dir / "metrics.json", metrics);
    return metrics;
}

std::vector<CaseInputs> read_manifest(const fs::path &path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_text_file(path));
    } catch (const ordered_json::parse_error &e) {
        throw FormatError("manifest '" + path.string() + "': " + e.what());
    }
    const fs::path base = path.parent_path();
    auto resolve = [&](const ordered_json &v, const char *key) {
        if (!v.contains(key) || !v[key].is_string())
            throw FormatError("manifest '" + path.string() + "': case needs string field '" + key + "'");
        const fs::path p = v[key].get<std::string>();
        return p.is_absolute() ? p : base / p;
    };
    if (!j.is_object() || !j.contains("cases") || !j["cases"].is_array())
        throw FormatError("manifest '" + path.string() + "': missing 'cases' array");
    std::vector<CaseInputs> cases;
    std::set<std::string> ids;
    for (const auto &c : j["cases"]) {
        CaseInputs in;
        if (!c.contains("id") || !c["id"].is_string()) throw FormatError("manifest: case without string 'id'");
        in.id = c["id"].get<std::string>();
        if (in.id.empty() || in.id.find('/') != std::string::npos || in.id == "." || in.id == "..")
            throw FormatError("manifest: invalid case id '" + in.id + "'");
        if (!ids.insert(in.id).second) throw FormatError("manifest: duplicate case id '" + in.id + "'");
        in.fixed = resolve(c, "fixed");
        in.moving = resolve(c, "moving");
        in.mask = resolve(c, "mask");
        if (c.contains("maps")) {
            if (!c["maps"].is_array()) throw FormatError("manifest: 'maps' must be an array");
            for (const auto &m : c["maps"]) {
                if (!m.is_string()) throw FormatError("manifest: 'maps' entries must be strings");
                const fs::path p = m.get<std::string>();
                in.maps.push_back(p.is_absolute() ? p : base / p);
            }
        }
        cases.push_back(std::move(in));
    }
    return cases;
}

int batch_jobs(int requested) {
    if (const char *env = std::getenv("SEQREG_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw UsageError("SEQREG_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    if (requested < 1) throw UsageError("--jobs must be >= 1");
    return requested;
}

struct CaseOutcome {
    int code = Ok;
    std::string message;
    ordered_json metrics;
};

int run_batch(const fs::path &manifest, const RegistrationConfigFile &cfg, const fs::path &out_dir, int jobs,
              bool as_json, std::ostream &out, std::ostream &err) {
    const auto cases = read_manifest(manifest);
    std::vector<CaseOutcome> outcomes(cases.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cases.size())));
#ifdef _OPENMP
    const int saved_threads = omp_get_max_threads();
    const int per_job = std::max(1, saved_threads / workers);
#endif
    auto worker = [&] {
#ifdef _OPENMP
        omp_set_num_threads(per_job);
#endif
        for (std::size_t i = next++; i < cases.size(); i = next++) {
            std::ostringstream msg;
            outcomes[i].code = guarded(msg, [&] {
                outcomes[i].metrics = register_case(cases[i], cfg, out_dir / cases[i].id);
                return static_cast<int>(Ok);
            });
            outcomes[i].message = msg.str();
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto &t : pool) t.join();
#ifdef _OPENMP
    omp_set_num_threads(saved_threads);
#endif

    // reported in manifest order regardless of scheduling
    int code = Ok;
    ordered_json summary;
    summary["schema_version"] = output_schema_version;
    summary["cases"] = ordered_json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto &o = outcomes[i];
        code = std::max(code, o.code);
        ordered_json row{{"id", cases[i].id}, {"exit_code", o.code}};
        if (o.code == Ok) {
            row["ngf_before"] = o.metrics["ngf_before"];
            row["ngf_after"] = o.metrics["ngf_after"];
            row["folding_percent_in_mask"] = o.metrics["folding_percent_in_mask"];
        } else {
            err << cases[i].id << ": " << o.message;
            row["error"] = o.message.substr(0, o.message.find_last_not_of('\n') + 1);
        }
        summary["cases"].push_back(row);
    }
    fs::create_directories(out_dir);
    write_json(out_dir / "batch.json", summary);
    if (as_json) {
        out << summary.dump(2) << '\n';
    } else {
        for (const auto &row : summary["cases"])
            out << row["id"].get<std::string>() << (row["exit_code"] == 0 ? "  ok" : "  failed") << '\n';
    }
    return code;
}

// stats ------------------------------------------------------------------------------------------

ordered_json family_json(const FamilyOutcome &f) {
    ordered_json j{{"family", f.name}, {"better", f.better}, {"reference", f.reference}, {"tested", f.tested}};
    if (f.tested) {
        j["auroc_better"] = f.test.auroc_1;
        j["auroc_reference"] = f.test.auroc_2;
        j["z"] = f.test.z;
        j["p"] = f.test.p_one_tailed;
        j["threshold"] = f.threshold;
        j["rejected"] = f.rejected;
        j["degenerate"] = f.test.degenerate;
    }
    return j;
}

void print_stats(const HierarchyOutcome &h, std::ostream &out) {
    out << "variant      AUROC\n";
    for (const auto &[name, a] : h.aurocs) {
        std::string padded = name;
        padded.resize(std::max<std::size_t>(padded.size() + 1, 13), ' ');
        out << padded << fmt("%.4f", a) << '\n';
    }
    out << "\nfamily  hypothesis                 p         threshold  result\n";
    for (const auto *f : {&h.family_1a, &h.family_1b, &h.family_2a, &h.family_2b}) {
        std::string hyp = f->better + " > " + f->reference;
        hyp.resize(std::max<std::size_t>(hyp.size() + 1, 27), ' ');
        out << f->name << "      " << hyp;
        if (f->tested)
            out << fmt("%-10.4g", f->test.p_one_tailed) << fmt("%-11.4g", f->threshold)
                << (f->rejected ? "rejected" : "not rejected") << '\n';
        else
            out << "-         -          not tested\n";
    }
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Two-stage NGF registration of multiparametric MRI, phantoms and diagnostic statistics", "seqreg"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    // register
    auto *reg = app.add_subcommand("register", "Rigid then deformable registration of moving onto fixed");
    std::string fixed, moving, mask, config, out_dir, batch;
    std::vector<std::string> maps;
    int jobs = 1;
    reg->add_option("--fixed", fixed, "Fixed image (.mha)");
    reg->add_option("--moving", moving, "Moving image (.mha)");
    reg->add_option("--mask", mask, "Fixed-space mask restricting the objective (.mha)");
    reg->add_option("--map", maps, "Companion map on the moving lattice to resample (repeatable)");
    reg->add_option("--config", config, "Registration config JSON");
    reg->add_option("--out", out_dir, "Output directory")->required();
    reg->add_option("--batch", batch, "Manifest JSON listing cases; runs them in parallel");
    reg->add_option("--jobs", jobs, "Concurrent cases for --batch (SEQREG_THREADS overrides)");
    reg->add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    // warp
    auto *wrp = app.add_subcommand("warp", "Resample a volume or mask through a stored deformation");
    std::string input, deformation, reference, output, policy = "zero";
    wrp->add_option("--input", input, "Volume or mask on the moving lattice")->required();
    wrp->add_option("--deformation", deformation, "Deformation directory (rigid.json, grid.mha)")->required();
    wrp->add_option("--reference", reference, "Image whose lattice defines the output")->required();
    wrp->add_option("--out", output, "Output .mha")->required();
    wrp->add_option("--oob", policy, "Out-of-bounds policy for volumes")->check(CLI::IsMember({"zero", "clamp"}));
    wrp->add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    // misalign
    auto *mis = app.add_subcommand("misalign", "Apply one seeded synthetic translation to several volumes");
    std::vector<std::string> inputs;
    std::string severity;
    std::uint64_t seed = 0;
    mis->add_option("--input", inputs, "Volume or mask to shift (repeatable)")->required();
    mis->add_option("--severity", severity, "severe or extreme")->required()->check(CLI::IsMember({"severe", "extreme"}));
    mis->add_option("--seed", seed, "Draw seed")->required();
    mis->add_option("--out", out_dir, "Output directory")->required();
    mis->add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    // metrics
    auto *met = app.add_subcommand("metrics", "Dice between masks and folding of a deformation");
    std::string mask_a, mask_b;
    met->add_option("--a", mask_a, "First mask");
    met->add_option("--b", mask_b, "Second mask");
    met->add_option("--deformation", deformation, "Deformation directory for the folding fraction");
    met->add_option("--mask", mask, "Fixed-space mask for the folding fraction");
    met->add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    // stats
    auto *sts = app.add_subcommand("stats", "AUROCs, DeLong tests and the hierarchical testing plan");
    std::string scores;
    double alpha = 0.05;
    sts->add_option("--scores", scores, "Case score CSV")->required();
    sts->add_option("--alpha", alpha, "Family-wise significance level")->check(CLI::Range(0.0, 1.0));
    sts->add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    // phantom
    auto *ph = app.add_subcommand("phantom", "Write a synthetic two-modality phantom case");
    double noise = PhantomSpec{}.noise_sigma, amplitude = 0.0;
    std::optional<std::uint64_t> deform_seed;
    seed = PhantomSpec{}.seed;
    ph->add_option("--out", out_dir, "Output directory")->required();
    ph->add_option("--seed", seed, "Noise seed");
    ph->add_option("--noise", noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);
    ph->add_option("--deform", amplitude, "Max amplitude (mm) of a smooth deformation applied to the adc-like image")
        ->check(CLI::NonNegativeNumber);
    ph->add_option("--deform-seed", deform_seed, "Seed of the deformation (defaults to --seed)");
    ph->add_flag("--json", as_json, "Machine-readable JSON summary on stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    if (reg->parsed()) {
        return guarded(err, [&] {
            const bool single = !fixed.empty() || !moving.empty() || !mask.empty();
            if (!batch.empty() && single) throw UsageError("--batch excludes --fixed/--moving/--mask");
            if (batch.empty() && (fixed.empty() || moving.empty() || mask.empty()))
                throw UsageError("register needs --fixed, --moving and --mask, or --batch");
            if (!batch.empty() && !maps.empty()) throw UsageError("--map is given per case in the batch manifest");
            RegistrationConfigFile cfg;
            if (!config.empty()) cfg = read_config_json(config);
            cfg.config.validate();
            if (!batch.empty()) return run_batch(batch, cfg, out_dir, batch_jobs(jobs), as_json, out, err);
            CaseInputs c{fs::path(fixed).stem().string(), fixed, moving, mask, {}};
            for (const auto &m : maps) c.maps.emplace_back(m);
            const auto metrics = register_case(c, cfg, out_dir);
            if (as_json) {
                out << metrics.dump(2) << '\n';
            } else {
                out << "ngf " << fmt("%.6f", metrics["ngf_before"].get<double>()) << " -> "
                    << fmt("%.6f", metrics["ngf_after"].get<double>()) << ", folding "
                    << fmt("%.3f", metrics["folding_percent_in_mask"].get<double>()) << "% in mask\n";
                out << "wrote " << out_dir << '\n';
            }
            return static_cast<int>(Ok);
        });
    }

    if (wrp->parsed()) {
        return guarded(err, [&] {
            const auto obj = read_metaimage(input);
            const auto d = read_deformation(deformation);
            const auto ref = geometry_of(read_metaimage(reference));
            std::string kind;
            if (const auto *m = std::get_if<BinaryMask>(&obj)) {
                write_metaimage(warp_mask(*m, d, ref), output);
                kind = "mask";
            } else if (const auto *v = std::get_if<Volume3D>(&obj)) {
                write_metaimage(warp(*v, d, ref, parse_policy(policy)), output);
                kind = "volume";
            } else {
                throw InputError("warp: vector fields cannot be warped, input '" + input + "'");
            }
            if (as_json) out << ordered_json{{"schema_version", output_schema_version}, {"kind", kind}, {"output", output}}.dump(2) << '\n';
            return static_cast<int>(Ok);
        });
    }

    if (mis->parsed()) {
        return guarded(err, [&] {
            const auto sev = *parse_severity(severity);
            const auto spec = draw_misalignment(sev, seed);
            std::set<std::string> names;
            std::vector<std::pair<fs::path, MetaObject>> shifted;
            for (const auto &in : inputs) {
                const fs::path name = fs::path(in).filename();
                if (!names.insert(name.string()).second) throw InputError("misalign: duplicate file name '" + name.string() + "'");
                auto obj = read_metaimage(in);
                if (const auto *m = std::get_if<BinaryMask>(&obj)) {
                    shifted.emplace_back(name, threshold(shift_volume(to_volume(*m), spec.shift), 0.5));
                } else if (const auto *v = std::get_if<Volume3D>(&obj)) {
                    shifted.emplace_back(name, shift_volume(*v, spec.shift));
                } else {
                    throw InputError("misalign: vector fields are not supported, input '" + in + "'");
                }
            }
            ordered_json j{{"schema_version", output_schema_version},
                           {"severity", std::string(to_string(sev))},
                           {"seed", seed},
                           {"shift_voxels", {spec.shift[0], spec.shift[1], spec.shift[2]}}};
            fs::create_directories(out_dir);
            for (const auto &[name, obj] : shifted)
                std::visit([&](const auto &o) { write_metaimage(o, fs::path(out_dir) / name); }, obj);
            write_json(fs::path(out_dir) / "misalignment.json", j);
            if (as_json)
                out << j.dump(2) << '\n';
            else
                out << "shift (" << spec.shift[0] << ", " << spec.shift[1] << ", " << spec.shift[2] << ") voxels\n";
            return static_cast<int>(Ok);
        });
    }

    if (met->parsed()) {
        return guarded(err, [&] {
            const bool want_dice = !mask_a.empty() || !mask_b.empty();
            const bool want_fold = !deformation.empty() || !mask.empty();
            if (!want_dice && !want_fold) throw UsageError("metrics needs --a/--b and/or --deformation/--mask");
            if (want_dice && (mask_a.empty() || mask_b.empty())) throw UsageError("dice needs both --a and --b");
            if (want_fold && (deformation.empty() || mask.empty()))
                throw UsageError("folding needs both --deformation and --mask");
            ordered_json j{{"schema_version", output_schema_version}};
            if (want_dice) {
                const auto s = dice_score(read_mask(mask_a), read_mask(mask_b));
                j["dice"] = s.value;
                j["dice_vacuous"] = s.vacuous;
                if (!as_json) out << "dice " << fmt("%.6f", s.value) << (s.vacuous ? " (both empty)" : "") << '\n';
            }
            if (want_fold) {
                const auto m = read_mask(mask);
                const double f = folding_fraction(densify(read_deformation(deformation), m.geometry()), m);
                j["folding_percent_in_mask"] = f;
                if (!as_json) out << "folding " << fmt("%.4f", f) << "% in mask\n";
            }
            if (as_json) out << j.dump(2) << '\n';
            return static_cast<int>(Ok);
        });
    }

    if (sts->parsed()) {
        return guarded(err, [&] {
            const auto table = read_scores_csv(scores);
            const auto h = run_hierarchical_plan(table, alpha);
            if (as_json) {
                ordered_json j{{"schema_version", output_schema_version}, {"alpha", h.alpha}};
                j["aurocs"] = ordered_json::object();
                for (const auto &[name, a] : h.aurocs) j["aurocs"][name] = a;
                j["families"] = ordered_json::array();
                for (const auto *f : {&h.family_1a, &h.family_1b, &h.family_2a, &h.family_2b})
                    j["families"].push_back(family_json(*f));
                out << j.dump(2) << '\n';
            } else {
                print_stats(h, out);
            }
            return static_cast<int>(Ok);
        });
    }

    // phantom
    return guarded(err, [&] {
        PhantomSpec spec;
        spec.seed = seed;
        spec.noise_sigma = noise;
        std::optional<VectorField3D> u;
        if (amplitude > 0.0) u = generate_smooth_deformation(spec.geometry(), amplitude, deform_seed.value_or(seed));
        const auto p = generate_phantom(spec, u ? &*u : nullptr);
        const fs::path dir = out_dir;
        fs::create_directories(dir);
        ordered_json files{{"t2", "t2.mha"}, {"adc", "adc.mha"}, {"gland_mask", "gland_mask.mha"}};
        write_metaimage(p.t2_like, dir / "t2.mha");
        write_metaimage(p.adc_like, dir / "adc.mha");
        write_metaimage(p.gland_mask, dir / "gland_mask.mha");
        files["t2_lesions"] = ordered_json::array();
        files["adc_lesions"] = ordered_json::array();
        for (std::size_t l = 0; l < p.t2_lesions.size(); ++l) {
            const std::string t2 = "t2_lesion_" + std::to_string(l) + ".mha";
            const std::string adc = "adc_lesion_" + std::to_string(l) + ".mha";
            write_metaimage(p.t2_lesions[l], dir / t2);
            write_metaimage(p.adc_lesions[l], dir / adc);
            files["t2_lesions"].push_back(t2);
            files["adc_lesions"].push_back(adc);
        }
        if (p.ground_truth) {
            write_metaimage(*p.ground_truth, dir / "ground_truth.mha");
            files["ground_truth"] = "ground_truth.mha";
        }
        ordered_json manifest{{"schema_version", output_schema_version},
                              {"seed", seed},
                              {"noise_sigma", noise},
                              {"deform_amplitude_mm", amplitude},
                              {"files", files}};
        if (u) {
            manifest["deform_seed"] = deform_seed.value_or(seed);
            manifest["ground_truth_convention"] = "adc(x) = undeformed_adc(x + u(x))";
        }
        write_json(dir / "manifest.json", manifest);
        if (as_json)
            out << manifest.dump(2) << '\n';
        else
            out << "wrote " << dir.string() << '\n';
        return static_cast<int>(Ok);
    });
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    std::vector<const char *> argv{"seqreg"};
    for (const auto &a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace seqreg::cli
