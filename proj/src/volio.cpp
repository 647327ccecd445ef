#include "seqreg/volio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "seqreg/error.hpp"

namespace seqreg {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "MetaImage payloads are read and written little-endian");

std::string read_text_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path &path, std::string_view bytes) {
    const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InputError("write failed for '" + path.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot move output into place: '" + path.string() + "'");
    }
}

// MetaImage ------------------------------------------------------------------------------------

std::string_view to_string(ElementType t) {
    switch (t) {
    case ElementType::UChar: return "MET_UCHAR";
    case ElementType::Float: return "MET_FLOAT";
    case ElementType::Double: return "MET_DOUBLE";
    }
    return "MET_NONE";
}

namespace {

std::size_t element_size(ElementType t) {
    switch (t) {
    case ElementType::UChar: return 1;
    case ElementType::Float: return 4;
    case ElementType::Double: return 8;
    }
    return 0;
}

std::string fmt_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string fmt_triple(const Vec3 &v) { return fmt_double(v.x) + " " + fmt_double(v.y) + " " + fmt_double(v.z); }

std::string meta_header(const Geometry &g, int channels, ElementType type) {
    std::string h;
    h += "ObjectType = Image\n";
    h += "NDims = 3\n";
    h += "BinaryData = True\n";
    h += "BinaryDataByteOrderMSB = False\n";
    h += "CompressedData = False\n";
    // direction columns (index axis directions) one after another
    h += "TransformMatrix =";
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) h += " " + fmt_double(g.direction(r, c));
    h += "\n";
    h += "Offset = " + fmt_triple(g.origin) + "\n";
    h += "CenterOfRotation = 0 0 0\n";
    h += "ElementSpacing = " + fmt_triple(g.spacing) + "\n";
    h += "DimSize = " + std::to_string(g.dims.nx) + " " + std::to_string(g.dims.ny) + " " + std::to_string(g.dims.nz) + "\n";
    if (channels != 1) h += "ElementNumberOfChannels = " + std::to_string(channels) + "\n";
    h += "ElementType = " + std::string(to_string(type)) + "\n";
    h += "ElementDataFile = LOCAL\n";
    return h;
}

template <class T>
void append_raw(std::string &out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

std::vector<double> parse_numbers(const std::string &key, const std::string &value, std::size_t expected) {
    std::vector<double> out;
    std::istringstream ss(value);
    std::string tok;
    while (ss >> tok) {
        char *end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw FormatError("metaimage: bad number in " + key + ": '" + tok + "'");
        out.push_back(v);
    }
    if (out.size() != expected)
        throw FormatError("metaimage: " + key + " needs " + std::to_string(expected) + " values, got " +
                          std::to_string(out.size()));
    return out;
}

struct MetaHeader {
    Geometry geometry;
    int channels = 1;
    ElementType type = ElementType::Float;
    std::string data_file;
};

// Parses the header and returns the offset of the first payload byte.
std::size_t parse_header(const std::string &bytes, MetaHeader &h) {
    std::map<std::string, std::string> keys;
    std::size_t pos = 0;
    bool done = false;
    while (!done && pos < bytes.size()) {
        const auto eol = bytes.find('\n', pos);
        if (eol == std::string::npos) throw FormatError("metaimage: header is not terminated by ElementDataFile");
        std::string line = bytes.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("metaimage: malformed header line '" + line + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        keys[key] = trim(line.substr(eq + 1));
        done = key == "ElementDataFile";
    }
    if (!done) throw FormatError("metaimage: missing ElementDataFile");

    auto require = [&](const char *key) -> const std::string & {
        const auto it = keys.find(key);
        if (it == keys.end()) throw FormatError(std::string("metaimage: missing key ") + key);
        return it->second;
    };
    if (require("NDims") != "3") throw FormatError("metaimage: NDims must be 3, got " + keys["NDims"]);
    if (auto it = keys.find("ObjectType"); it != keys.end() && it->second != "Image")
        throw FormatError("metaimage: ObjectType must be Image");
    if (auto it = keys.find("BinaryDataByteOrderMSB"); it != keys.end() && it->second != "False")
        throw FormatError("metaimage: BinaryDataByteOrderMSB big-endian payloads are not supported");
    if (auto it = keys.find("CompressedData"); it != keys.end() && it->second != "False")
        throw FormatError("metaimage: CompressedData is not supported");

    const auto dims = parse_numbers("DimSize", require("DimSize"), 3);
    for (double d : dims)
        if (d < 1 || d != std::floor(d)) throw FormatError("metaimage: DimSize must hold positive integers");
    h.geometry.dims = Dims{static_cast<std::int64_t>(dims[0]), static_cast<std::int64_t>(dims[1]),
                           static_cast<std::int64_t>(dims[2])};
    if (keys.count("ElementSpacing")) {
        const auto sp = parse_numbers("ElementSpacing", keys["ElementSpacing"], 3);
        h.geometry.spacing = Vec3{sp[0], sp[1], sp[2]};
    }
    const std::string origin_key = keys.count("Offset") ? "Offset" : (keys.count("Origin") ? "Origin" : "Position");
    if (keys.count(origin_key)) {
        const auto o = parse_numbers(origin_key, keys[origin_key], 3);
        h.geometry.origin = Vec3{o[0], o[1], o[2]};
    }
    const std::string dir_key = keys.count("TransformMatrix") ? "TransformMatrix" : "Orientation";
    if (keys.count(dir_key)) {
        const auto m = parse_numbers(dir_key, keys[dir_key], 9);
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r) h.geometry.direction(r, c) = m[static_cast<std::size_t>(3 * c + r)];
    }
    if (keys.count("ElementNumberOfChannels")) {
        const auto &ch = keys["ElementNumberOfChannels"];
        if (ch == "1")
            h.channels = 1;
        else if (ch == "3")
            h.channels = 3;
        else
            throw FormatError("metaimage: ElementNumberOfChannels must be 1 or 3, got " + ch);
    }
    const auto &et = require("ElementType");
    if (et == "MET_UCHAR")
        h.type = ElementType::UChar;
    else if (et == "MET_FLOAT")
        h.type = ElementType::Float;
    else if (et == "MET_DOUBLE")
        h.type = ElementType::Double;
    else
        throw FormatError("metaimage: unsupported ElementType " + et);
    h.data_file = keys["ElementDataFile"];
    try {
        h.geometry.validate();
    } catch (const InputError &e) {
        throw FormatError(std::string("metaimage: ") + e.what());
    }
    return pos;
}

template <class T>
T read_raw(const char *p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double element_at(const char *payload, ElementType type, std::size_t n) {
    switch (type) {
    case ElementType::UChar: return static_cast<double>(static_cast<unsigned char>(payload[n]));
    case ElementType::Float: return static_cast<double>(read_raw<float>(payload + 4 * n));
    case ElementType::Double: return read_raw<double>(payload + 8 * n);
    }
    return 0.0;
}

} // namespace

MetaObject read_metaimage(const fs::path &path) {
    const std::string bytes = read_text_file(path);
    MetaHeader h;
    const std::size_t offset = parse_header(bytes, h);

    std::string external;
    const char *payload = nullptr;
    std::size_t available = 0;
    if (h.data_file == "LOCAL") {
        payload = bytes.data() + offset;
        available = bytes.size() - offset;
    } else {
        external = read_text_file(path.parent_path() / h.data_file);
        payload = external.data();
        available = external.size();
    }
    const std::size_t count = h.geometry.voxel_count() * static_cast<std::size_t>(h.channels);
    const std::size_t needed = count * element_size(h.type);
    if (available != needed)
        throw FormatError("metaimage: size mismatch between DimSize/ElementType (" + std::to_string(needed) +
                          " bytes) and payload (" + std::to_string(available) + " bytes)");

    if (h.channels == 3) {
        std::vector<Vec3> v(h.geometry.voxel_count());
        for (std::size_t n = 0; n < v.size(); ++n)
            v[n] = Vec3{element_at(payload, h.type, 3 * n), element_at(payload, h.type, 3 * n + 1),
                        element_at(payload, h.type, 3 * n + 2)};
        return VectorField3D(h.geometry, std::move(v));
    }
    if (h.type == ElementType::UChar) {
        const bool binary = std::all_of(payload, payload + count, [](char c) { return c == 0 || c == 1; });
        if (binary) {
            std::vector<std::uint8_t> v(payload, payload + count);
            return BinaryMask(h.geometry, std::move(v));
        }
    }
    std::vector<double> v(count);
    for (std::size_t n = 0; n < count; ++n) v[n] = element_at(payload, h.type, n);
    return Volume3D(h.geometry, std::move(v));
}

Volume3D read_volume(const fs::path &path) {
    auto obj = read_metaimage(path);
    if (auto *v = std::get_if<Volume3D>(&obj)) return std::move(*v);
    if (auto *m = std::get_if<BinaryMask>(&obj)) return to_volume(*m);
    throw FormatError("'" + path.string() + "' holds a vector field, expected a scalar volume");
}

BinaryMask read_mask(const fs::path &path) {
    auto obj = read_metaimage(path);
    if (auto *m = std::get_if<BinaryMask>(&obj)) return std::move(*m);
    if (auto *v = std::get_if<Volume3D>(&obj)) {
        for (double x : v->values())
            if (x != 0.0 && x != 1.0) throw FormatError("'" + path.string() + "' is not a binary mask");
        return threshold(*v, 0.5);
    }
    throw FormatError("'" + path.string() + "' holds a vector field, expected a mask");
}

VectorField3D read_field(const fs::path &path) {
    auto obj = read_metaimage(path);
    if (auto *f = std::get_if<VectorField3D>(&obj)) return std::move(*f);
    throw FormatError("'" + path.string() + "' is not a 3-channel vector field");
}

void write_metaimage(const Volume3D &vol, const fs::path &path, std::optional<ElementType> type) {
    ElementType t = ElementType::Float;
    if (type) {
        t = *type;
    } else {
        const bool lossless = std::all_of(vol.values().begin(), vol.values().end(),
                                          [](double v) { return static_cast<double>(static_cast<float>(v)) == v; });
        if (!lossless) t = ElementType::Double;
    }
    std::string out = meta_header(vol.geometry(), 1, t);
    out.reserve(out.size() + vol.size() * element_size(t));
    for (double v : vol.values()) {
        switch (t) {
        case ElementType::UChar: out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L)))); break;
        case ElementType::Float: append_raw(out, static_cast<float>(v)); break;
        case ElementType::Double: append_raw(out, v); break;
        }
    }
    write_file_atomic(path, out);
}

void write_metaimage(const BinaryMask &mask, const fs::path &path) {
    std::string out = meta_header(mask.geometry(), 1, ElementType::UChar);
    for (auto v : mask.values()) out.push_back(static_cast<char>(v));
    write_file_atomic(path, out);
}

void write_metaimage(const VectorField3D &field, const fs::path &path) {
    std::string out = meta_header(field.geometry(), 3, ElementType::Double);
    out.reserve(out.size() + field.size() * 24);
    for (const auto &v : field.values()) {
        append_raw(out, v.x);
        append_raw(out, v.y);
        append_raw(out, v.z);
    }
    write_file_atomic(path, out);
}

// Scores CSV -----------------------------------------------------------------------------------

bool ScoreTable::has_variant(std::string_view v) const {
    return std::find(variants.begin(), variants.end(), v) != variants.end();
}

std::vector<double> ScoreTable::column(std::string_view variant) const {
    if (!has_variant(variant)) throw InputError("score table has no variant '" + std::string(variant) + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &r : rows) out.push_back(r.scores.at(std::string(variant)));
    return out;
}

std::vector<int> ScoreTable::labels() const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto &r : rows) out.push_back(r.label);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto &s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }
    return out;
}

} // namespace

ScoreTable parse_scores_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string &msg) -> FormatError {
        return FormatError("scores csv line " + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line != "\r") break;
    }
    if (line_no == 0 || line.empty()) throw FormatError("scores csv: empty file");
    const auto header = split_csv_line(line);
    int id_col = -1, label_col = -1;
    std::vector<std::pair<int, std::string>> score_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto &h = header[c];
        if (h == "case_id")
            id_col = static_cast<int>(c);
        else if (h == "label")
            label_col = static_cast<int>(c);
        else if (h.rfind("score_", 0) == 0 && h.size() > 6)
            score_cols.emplace_back(static_cast<int>(c), h.substr(6));
        else
            throw fail("unexpected column '" + h + "'");
    }
    if (id_col < 0) throw fail("missing column case_id");
    if (label_col < 0) throw fail("missing column label");
    ScoreTable table;
    for (const auto &[col, name] : score_cols) {
        if (table.has_variant(name)) throw fail("duplicate column score_" + name);
        table.variants.push_back(name);
    }
    for (const char *req : {"original", "rigid", "deformable"})
        if (!table.has_variant(req)) throw fail(std::string("missing column score_") + req);

    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
        ScoreRow row;
        row.case_id = cells[static_cast<std::size_t>(id_col)];
        if (row.case_id.empty()) throw fail("empty case_id");
        if (!seen.insert(row.case_id).second) throw fail("duplicate case_id '" + row.case_id + "'");
        const auto &lab = cells[static_cast<std::size_t>(label_col)];
        if (lab == "0")
            row.label = 0;
        else if (lab == "1")
            row.label = 1;
        else
            throw fail("label must be 0 or 1, got '" + lab + "'");
        for (const auto &[col, name] : score_cols) {
            const auto &cell = cells[static_cast<std::size_t>(col)];
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
                throw fail("score_" + name + " is not a number: '" + cell + "'");
            if (!(v >= 0.0 && v <= 1.0)) throw fail("score_" + name + " outside [0, 1]: " + cell);
            row.scores[name] = v;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

ScoreTable read_scores_csv(const fs::path &path) { return parse_scores_csv(read_text_file(path)); }

std::string format_scores_csv(const ScoreTable &table) {
    std::string out = "case_id,label";
    for (const auto &v : table.variants) out += ",score_" + v;
    out += "\n";
    for (const auto &r : table.rows) {
        out += r.case_id + "," + std::to_string(r.label);
        for (const auto &v : table.variants) out += "," + fmt_double(r.scores.at(v));
        out += "\n";
    }
    return out;
}

void write_scores_csv(const ScoreTable &table, const fs::path &path) { write_file_atomic(path, format_scores_csv(table)); }

// JSON -----------------------------------------------------------------------------------------

namespace {

json vec_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

Vec3 json_vec(const json &j, const char *key) {
    if (!j.is_array() || j.size() != 3) throw FormatError(std::string("json: ") + key + " must be an array of 3 numbers");
    Vec3 v;
    for (int a = 0; a < 3; ++a) {
        if (!j[static_cast<std::size_t>(a)].is_number()) throw FormatError(std::string("json: ") + key + " must hold numbers");
        v[a] = j[static_cast<std::size_t>(a)].get<double>();
    }
    return v;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw FormatError(std::string("json: ") + e.what());
    }
}

} // namespace

RegistrationConfigFile parse_config_json(std::string_view text) {
    const json j = parse_json(text);
    if (!j.is_object()) throw FormatError("config: top level must be an object");
    static const std::set<std::string> known{"version",       "epsilon",      "epsilon_fraction", "normalize_by_voxels",
                                             "alpha",         "levels",       "smoothing_sigmas", "rigid_iters",
                                             "deform_iters",  "rigid_grad_tol", "deform_grad_tol", "lbfgs_memory",
                                             "grid_size",     "oob_policy",   "rigid_use_mask",   "seed"};
    for (const auto &[k, v] : j.items())
        if (!known.count(k)) throw FormatError("config: unknown key '" + k + "'");
    RegistrationConfigFile out;
    auto &c = out.config;
    try {
        if (j.contains("version") && j["version"].get<int>() != config_schema_version)
            throw FormatError("config: unsupported version " + j["version"].dump());
        if (j.contains("epsilon") && !j["epsilon"].is_null()) c.epsilon = j["epsilon"].get<double>();
        if (j.contains("epsilon_fraction")) c.epsilon_fraction = j["epsilon_fraction"].get<double>();
        if (j.contains("normalize_by_voxels")) c.normalize_by_voxels = j["normalize_by_voxels"].get<bool>();
        if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
        if (j.contains("levels")) c.levels = j["levels"].get<int>();
        if (j.contains("smoothing_sigmas")) c.smoothing_sigmas = j["smoothing_sigmas"].get<std::vector<double>>();
        if (j.contains("rigid_iters")) c.rigid_iters = j["rigid_iters"].get<int>();
        if (j.contains("deform_iters")) c.deform_iters = j["deform_iters"].get<int>();
        if (j.contains("rigid_grad_tol")) c.rigid_grad_tol = j["rigid_grad_tol"].get<double>();
        if (j.contains("deform_grad_tol")) c.deform_grad_tol = j["deform_grad_tol"].get<double>();
        if (j.contains("lbfgs_memory")) c.lbfgs_memory = j["lbfgs_memory"].get<int>();
        if (j.contains("grid_size")) {
            const auto g = j["grid_size"].get<std::vector<std::int64_t>>();
            if (g.size() != 3) throw FormatError("config: grid_size needs 3 entries");
            c.grid_size = Dims{g[0], g[1], g[2]};
        }
        if (j.contains("oob_policy")) {
            const auto p = j["oob_policy"].get<std::string>();
            if (p == "zero")
                c.oob_policy = OobPolicy::Zero;
            else if (p == "clamp")
                c.oob_policy = OobPolicy::Clamp;
            else
                throw FormatError("config: oob_policy must be 'zero' or 'clamp'");
        }
        if (j.contains("rigid_use_mask")) c.rigid_use_mask = j["rigid_use_mask"].get<bool>();
        if (j.contains("seed")) out.seed = j["seed"].get<std::uint64_t>();
    } catch (const json::type_error &e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const InputError &e) {
        throw FormatError(e.what());
    }
    return out;
}

std::string format_config_json(const RegistrationConfigFile &f) {
    const auto &c = f.config;
    json j;
    j["version"] = config_schema_version;
    j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
    j["epsilon_fraction"] = c.epsilon_fraction;
    j["normalize_by_voxels"] = c.normalize_by_voxels;
    j["alpha"] = c.alpha;
    j["levels"] = c.levels;
    j["smoothing_sigmas"] = c.smoothing_sigmas;
    j["rigid_iters"] = c.rigid_iters;
    j["deform_iters"] = c.deform_iters;
    j["rigid_grad_tol"] = c.rigid_grad_tol;
    j["deform_grad_tol"] = c.deform_grad_tol;
    j["lbfgs_memory"] = c.lbfgs_memory;
    j["grid_size"] = {c.grid_size.nx, c.grid_size.ny, c.grid_size.nz};
    j["oob_policy"] = c.oob_policy == OobPolicy::Zero ? "zero" : "clamp";
    j["rigid_use_mask"] = c.rigid_use_mask;
    j["seed"] = f.seed;
    return j.dump(2) + "\n";
}

RegistrationConfigFile read_config_json(const fs::path &path) { return parse_config_json(read_text_file(path)); }

RigidParams parse_rigid_json(std::string_view text) {
    const json j = parse_json(text);
    if (!j.is_object()) throw FormatError("rigid: top level must be an object");
    if (j.contains("euler_order") && j["euler_order"] != "ZYX") throw FormatError("rigid: euler_order must be ZYX");
    for (const char *k : {"rotation", "translation", "center"})
        if (!j.contains(k)) throw FormatError(std::string("rigid: missing key ") + k);
    RigidParams r{json_vec(j["rotation"], "rotation"), json_vec(j["translation"], "translation"),
                  json_vec(j["center"], "center")};
    try {
        r.validate();
    } catch (const InputError &e) {
        throw FormatError(e.what());
    }
    return r;
}

std::string format_rigid_json(const RigidParams &r) {
    json j;
    j["version"] = config_schema_version;
    j["euler_order"] = "ZYX";
    j["rotation"] = vec_json(r.rotation);
    j["translation"] = vec_json(r.translation);
    j["center"] = vec_json(r.center);
    return j.dump(2) + "\n";
}

void write_deformation(const Deformation &d, const fs::path &dir) {
    fs::create_directories(dir);
    write_file_atomic(dir / "rigid.json", format_rigid_json(d.rigid));
    if (d.grid) write_metaimage(d.grid->control, dir / "grid.mha");
}

Deformation read_deformation(const fs::path &dir) {
    Deformation d;
    d.rigid = parse_rigid_json(read_text_file(dir / "rigid.json"));
    if (fs::exists(dir / "grid.mha")) d.grid = DisplacementGrid{read_field(dir / "grid.mha")};
    return d;
}

} // namespace seqreg
