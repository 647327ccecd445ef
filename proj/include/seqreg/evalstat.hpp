#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqreg/volume.hpp"

namespace seqreg {

struct ScoreTable;

// Registration quality -----------------------------------------------------------------------

struct DiceScore {
    double value = 0.0;
    bool vacuous = false; ///< both masks empty; value is 1 by convention
};

DiceScore dice_score(const BinaryMask &a, const BinaryMask &b);
inline double dice(const BinaryMask &a, const BinaryMask &b) { return dice_score(a, b).value; }

// Synthetic misalignment -----------------------------------------------------------------------

enum class Severity { Severe, Extreme };

std::optional<Severity> parse_severity(std::string_view s);
std::string_view to_string(Severity s);

struct MisalignmentSpec {
    Severity severity = Severity::Severe;
    std::uint64_t seed = 0;
    std::int64_t shift[3]{0, 0, 0}; ///< voxels along (x, y, z) index axes
};

/// Draw of the integer translation. Severe: z in {-2..2}, x, y in {-5..5}. Extreme: z in {-5, 5},
/// x, y in {-10, 10}. Draw order x, y, z from SplitMix64(seed).
MisalignmentSpec draw_misalignment(Severity severity, std::uint64_t seed);

/// out(i) = in(i - shift), zero outside the source lattice.
Volume3D shift_volume(const Volume3D &vol, const std::int64_t shift[3]);

struct MisalignedVolumes {
    std::vector<Volume3D> volumes;
    MisalignmentSpec spec;
};

/// One draw applied identically to every volume.
MisalignedVolumes apply_synthetic_misalignment(const std::vector<Volume3D> &vols, Severity severity,
                                              std::uint64_t seed);

// Case-level scoring ---------------------------------------------------------------------------

/// Max lesion prediction (0 when no lesion was predicted); with per-algorithm case scores the
/// unweighted mean of those scores.
double case_level_score(std::span<const double> lesion_preds,
                        std::optional<std::span<const double>> algorithm_scores = std::nullopt);

// ROC statistics -------------------------------------------------------------------------------

/// Mann-Whitney AUROC with ties counted as 1/2.
double auroc(std::span<const double> scores, std::span<const int> labels);

enum class Direction { FirstGreater, SecondGreater };

struct DelongResult {
    double auroc_1 = 0.5, auroc_2 = 0.5;
    double var_1 = 0.0, var_2 = 0.0, covar = 0.0;
    double z = 0.0;
    double p_one_tailed = 0.5;
    bool degenerate = false; ///< non-positive variance of the difference; z = 0 and p = 0.5
};

/// Paired one-tailed DeLong test using midrank structural components. z = (A1 - A2) / sd for
/// FirstGreater and (A2 - A1) / sd for SecondGreater; p = 1 - Phi(z).
DelongResult delong_test(std::span<const double> scores_1, std::span<const double> scores_2,
                         std::span<const int> labels, Direction direction);

/// Upper-tail standard normal probability 1 - Phi(z).
double normal_sf(double z);

/// Step-down Holm thresholds alpha / (m - rank) in input order, rank from the ascending sort.
std::vector<double> holm_thresholds(std::span<const double> pvalues, double alpha);
std::vector<bool> holm_bonferroni(std::span<const double> pvalues, double alpha);

struct FamilyOutcome {
    std::string name;        ///< 1A, 1B, 2A, 2B
    std::string better;      ///< variant hypothesised to be better
    std::string reference;   ///< variant it is compared against
    bool tested = false;
    DelongResult test;
    double threshold = 0.0;  ///< significance threshold applied (0 when untested)
    bool rejected = false;
};

struct HierarchyOutcome {
    double alpha = 0.05;
    std::vector<std::pair<std::string, double>> aurocs; ///< per variant
    FamilyOutcome family_1a, family_1b, family_2a, family_2b;
};

/// 1A deformable > original and 1B rigid > original under Holm; 2A deformable > rigid is tested
/// only if 1A is rejected and 2B rigid > deformable only if 1B is rejected, with Holm again when
/// both run and the base alpha when only one does.
HierarchyOutcome run_hierarchical_plan(const ScoreTable &table, double alpha);

} // namespace seqreg
