#include "seqreg/evalstat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "seqreg/error.hpp"
#include "seqreg/phantom.hpp"
#include "seqreg/volio.hpp"

namespace seqreg {

DiceScore dice_score(const BinaryMask &a, const BinaryMask &b) {
    if (!same_lattice(a.geometry(), b.geometry())) throw InputError("dice: mask geometries differ");
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        na += a[n];
        nb += b[n];
        both += a[n] && b[n];
    }
    if (na + nb == 0) return {1.0, true};
    return {2.0 * static_cast<double>(both) / static_cast<double>(na + nb), false};
}

std::optional<Severity> parse_severity(std::string_view s) {
    if (s == "severe") return Severity::Severe;
    if (s == "extreme") return Severity::Extreme;
    return std::nullopt;
}

std::string_view to_string(Severity s) { return s == Severity::Severe ? "severe" : "extreme"; }

MisalignmentSpec draw_misalignment(Severity severity, std::uint64_t seed) {
    MisalignmentSpec spec;
    spec.severity = severity;
    spec.seed = seed;
    SplitMix64 rng(seed);
    if (severity == Severity::Severe) {
        spec.shift[0] = rng.integer(-5, 5);
        spec.shift[1] = rng.integer(-5, 5);
        spec.shift[2] = rng.integer(-2, 2);
    } else {
        spec.shift[0] = rng.integer(0, 1) ? 10 : -10;
        spec.shift[1] = rng.integer(0, 1) ? 10 : -10;
        spec.shift[2] = rng.integer(0, 1) ? 5 : -5;
    }
    return spec;
}

Volume3D shift_volume(const Volume3D &vol, const std::int64_t shift[3]) {
    const auto &g = vol.geometry();
    Volume3D out(g, 0.0);
    for (std::int64_t k = 0; k < g.dims.nz; ++k)
        for (std::int64_t j = 0; j < g.dims.ny; ++j)
            for (std::int64_t i = 0; i < g.dims.nx; ++i) {
                const std::int64_t si = i - shift[0], sj = j - shift[1], sk = k - shift[2];
                if (si < 0 || sj < 0 || sk < 0 || si >= g.dims.nx || sj >= g.dims.ny || sk >= g.dims.nz) continue;
                out.at(i, j, k) = vol.at(si, sj, sk);
            }
    return out;
}

MisalignedVolumes apply_synthetic_misalignment(const std::vector<Volume3D> &vols, Severity severity,
                                              std::uint64_t seed) {
    if (vols.empty()) throw InputError("misalignment: no volumes given");
    MisalignedVolumes out;
    out.spec = draw_misalignment(severity, seed);
    for (const auto &v : vols) out.volumes.push_back(shift_volume(v, out.spec.shift));
    return out;
}

double case_level_score(std::span<const double> lesion_preds, std::optional<std::span<const double>> algorithm_scores) {
    auto check = [](std::span<const double> v) {
        for (double p : v)
            if (!(p >= 0.0 && p <= 1.0)) throw InputError("case_level_score: predictions must lie in [0, 1]");
    };
    check(lesion_preds);
    if (algorithm_scores && !algorithm_scores->empty()) {
        check(*algorithm_scores);
        return std::accumulate(algorithm_scores->begin(), algorithm_scores->end(), 0.0) /
               static_cast<double>(algorithm_scores->size());
    }
    if (lesion_preds.empty()) return 0.0;
    return *std::max_element(lesion_preds.begin(), lesion_preds.end());
}

namespace {

struct Split {
    std::vector<double> pos, neg;
};

Split split_by_label(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InputError("roc: scores and labels differ in length");
    Split s;
    for (std::size_t n = 0; n < scores.size(); ++n) {
        if (labels[n] == 1)
            s.pos.push_back(scores[n]);
        else if (labels[n] == 0)
            s.neg.push_back(scores[n]);
        else
            throw InputError("roc: labels must be 0 or 1");
    }
    if (s.pos.empty() || s.neg.empty()) throw InputError("roc: both classes must be present");
    return s;
}

// 1-based ranks with ties replaced by their mean rank.
std::vector<double> midranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && v[order[j]] == v[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j + 1); // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
        i = j;
    }
    return ranks;
}

struct Components {
    double auc;
    std::vector<double> v10; ///< per positive
    std::vector<double> v01; ///< per negative
};

Components structural_components(const Split &s) {
    const std::size_t m = s.pos.size(), n = s.neg.size();
    std::vector<double> z(s.pos);
    z.insert(z.end(), s.neg.begin(), s.neg.end());
    const auto tz = midranks(z);
    const auto tx = midranks(s.pos);
    const auto ty = midranks(s.neg);
    Components c;
    c.v10.resize(m);
    c.v01.resize(n);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        c.v10[i] = (tz[i] - tx[i]) / static_cast<double>(n);
        rank_sum += tz[i];
    }
    for (std::size_t j = 0; j < n; ++j) c.v01[j] = 1.0 - (tz[m + j] - ty[j]) / static_cast<double>(m);
    c.auc = (rank_sum - 0.5 * static_cast<double>(m) * static_cast<double>(m + 1)) /
            (static_cast<double>(m) * static_cast<double>(n));
    return c;
}

double covariance(std::span<const double> a, std::span<const double> b) {
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - ma) * (b[i] - mb);
    return acc / static_cast<double>(a.size() - 1);
}

} // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    return structural_components(split_by_label(scores, labels)).auc;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

DelongResult delong_test(std::span<const double> scores_1, std::span<const double> scores_2,
                         std::span<const int> labels, Direction direction) {
    if (scores_1.size() != scores_2.size()) throw InputError("delong: score vectors must be paired");
    const auto s1 = split_by_label(scores_1, labels);
    const auto s2 = split_by_label(scores_2, labels);
    const std::size_t m = s1.pos.size(), n = s1.neg.size();
    if (m < 2 || n < 2) throw InputError("delong: need at least two cases per class");
    const auto c1 = structural_components(s1);
    const auto c2 = structural_components(s2);

    DelongResult r;
    r.auroc_1 = c1.auc;
    r.auroc_2 = c2.auc;
    const double dm = static_cast<double>(m), dn = static_cast<double>(n);
    r.var_1 = covariance(c1.v10, c1.v10) / dm + covariance(c1.v01, c1.v01) / dn;
    r.var_2 = covariance(c2.v10, c2.v10) / dm + covariance(c2.v01, c2.v01) / dn;
    r.covar = covariance(c1.v10, c2.v10) / dm + covariance(c1.v01, c2.v01) / dn;
    const double var_diff = r.var_1 + r.var_2 - 2.0 * r.covar;
    if (!(var_diff > 0.0)) {
        r.degenerate = true;
        r.z = 0.0;
        r.p_one_tailed = 0.5;
        return r;
    }
    const double diff = direction == Direction::FirstGreater ? r.auroc_1 - r.auroc_2 : r.auroc_2 - r.auroc_1;
    r.z = diff / std::sqrt(var_diff);
    r.p_one_tailed = normal_sf(r.z);
    return r;
}

std::vector<double> holm_thresholds(std::span<const double> pvalues, double alpha) {
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> t(m);
    for (std::size_t rank = 0; rank < m; ++rank) t[order[rank]] = alpha / static_cast<double>(m - rank);
    return t;
}

std::vector<bool> holm_bonferroni(std::span<const double> pvalues, double alpha) {
    for (double p : pvalues)
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("holm: p-values must lie in [0, 1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("holm: alpha must lie in (0, 1)");
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<bool> rejected(m, false);
    for (std::size_t rank = 0; rank < m; ++rank) {
        const std::size_t i = order[rank];
        if (pvalues[i] > alpha / static_cast<double>(m - rank)) break;
        rejected[i] = true;
    }
    return rejected;
}

HierarchyOutcome run_hierarchical_plan(const ScoreTable &table, double alpha) {
    for (const char *v : {"original", "rigid", "deformable"})
        if (!table.has_variant(v)) throw InputError(std::string("hierarchy: missing score variant '") + v + "'");
    const auto labels = table.labels();
    HierarchyOutcome out;
    out.alpha = alpha;
    for (const auto &v : table.variants) out.aurocs.emplace_back(v, auroc(table.column(v), labels));

    auto family = [&](const char *name, const char *better, const char *reference) {
        FamilyOutcome f;
        f.name = name;
        f.better = better;
        f.reference = reference;
        return f;
    };
    out.family_1a = family("1A", "deformable", "original");
    out.family_1b = family("1B", "rigid", "original");
    out.family_2a = family("2A", "deformable", "rigid");
    out.family_2b = family("2B", "rigid", "deformable");

    auto run = [&](FamilyOutcome &f) {
        f.tested = true;
        f.test = delong_test(table.column(f.better), table.column(f.reference), labels, Direction::FirstGreater);
    };
    auto decide = [&](std::vector<FamilyOutcome *> fams) {
        std::vector<double> p;
        for (auto *f : fams) p.push_back(f->test.p_one_tailed);
        const auto thr = holm_thresholds(p, alpha);
        const auto rej = holm_bonferroni(p, alpha);
        for (std::size_t i = 0; i < fams.size(); ++i) {
            fams[i]->threshold = thr[i];
            fams[i]->rejected = rej[i];
        }
    };

    run(out.family_1a);
    run(out.family_1b);
    decide({&out.family_1a, &out.family_1b});

    std::vector<FamilyOutcome *> stage2;
    if (out.family_1a.rejected) stage2.push_back(&out.family_2a);
    if (out.family_1b.rejected) stage2.push_back(&out.family_2b);
    for (auto *f : stage2) run(*f);
    if (!stage2.empty()) decide(stage2);
    return out;
}

} // namespace seqreg
