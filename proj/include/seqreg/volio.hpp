#pragma once

// File formats: MetaImage (.mha, header + LOCAL little-endian payload), case score CSV, and JSON
// for registration configs and rigid parameters.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "seqreg/pipeline.hpp"
#include "seqreg/transform.hpp"
#include "seqreg/volume.hpp"

namespace seqreg {

namespace fs = std::filesystem;

// MetaImage ------------------------------------------------------------------------------------

enum class ElementType { UChar, Float, Double };

std::string_view to_string(ElementType t);

using MetaObject = std::variant<Volume3D, BinaryMask, VectorField3D>;

/// Parses a 3D MetaImage. Three channels yield a VectorField3D; MET_UCHAR data whose values are
/// all 0 or 1 yields a BinaryMask; everything else a Volume3D. Throws FormatError naming the
/// offending key.
MetaObject read_metaimage(const fs::path &path);

/// Typed readers; a {0,1} mask file is accepted as a volume and a {0,1} volume as a mask.
Volume3D read_volume(const fs::path &path);
BinaryMask read_mask(const fs::path &path);
VectorField3D read_field(const fs::path &path);

/// Volumes default to MET_FLOAT, promoted to MET_DOUBLE when a value is not exactly
/// representable as float so that re-reading is always bit-exact. An explicit type forces it.
void write_metaimage(const Volume3D &vol, const fs::path &path, std::optional<ElementType> type = std::nullopt);
void write_metaimage(const BinaryMask &mask, const fs::path &path);
/// Vector fields are written as 3-channel MET_DOUBLE.
void write_metaimage(const VectorField3D &field, const fs::path &path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path &path, std::string_view bytes);

// Scores CSV -----------------------------------------------------------------------------------

struct ScoreRow {
    std::string case_id;
    int label = 0;
    std::map<std::string, double> scores; ///< variant name -> score
};

struct ScoreTable {
    std::vector<std::string> variants; ///< in column order, without the score_ prefix
    std::vector<ScoreRow> rows;

    bool has_variant(std::string_view v) const;
    std::vector<double> column(std::string_view variant) const;
    std::vector<int> labels() const;
};

/// Header `case_id,label,score_original,score_rigid,score_deformable[,score_*...]`. Throws
/// FormatError with the 1-based line number on malformed rows, labels outside {0,1}, scores
/// outside [0,1] or duplicate case ids.
ScoreTable read_scores_csv(const fs::path &path);
ScoreTable parse_scores_csv(std::string_view text);
std::string format_scores_csv(const ScoreTable &table);
void write_scores_csv(const ScoreTable &table, const fs::path &path);

// JSON -----------------------------------------------------------------------------------------

inline constexpr int config_schema_version = 1;

struct RegistrationConfigFile {
    RegistrationConfig config;
    std::uint64_t seed = 0;
};

RegistrationConfigFile parse_config_json(std::string_view text);
std::string format_config_json(const RegistrationConfigFile &cfg);
RegistrationConfigFile read_config_json(const fs::path &path);

RigidParams parse_rigid_json(std::string_view text);
std::string format_rigid_json(const RigidParams &rigid);

/// Deformation as rigid.json (+ grid.mha when a grid is present) inside `dir`.
void write_deformation(const Deformation &d, const fs::path &dir);
Deformation read_deformation(const fs::path &dir);

std::string read_text_file(const fs::path &path);

} // namespace seqreg
