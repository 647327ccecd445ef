#include <cstring>
#include <fstream>
#include <random>

#include <doctest.h>

#include "seqreg/error.hpp"
#include "seqreg/volio.hpp"
#include "support.hpp"

using namespace seqreg;
using namespace testing;

namespace {

std::string header(const std::string &dims, const std::string &type, int channels = 1) {
    std::string h = "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\n"
                    "TransformMatrix = 1 0 0 0 1 0 0 0 1\nOffset = 0 0 0\nElementSpacing = 1 1 1\n"
                    "DimSize = " + dims + "\n";
    if (channels != 1) h += "ElementNumberOfChannels = " + std::to_string(channels) + "\n";
    return h + "ElementType = " + type + "\nElementDataFile = LOCAL\n";
}

template <class T>
void append(std::string &s, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    s.append(b, sizeof(T));
}

void write_raw(const fs::path &p, const std::string &bytes) {
    std::ofstream(p, std::ios::binary) << bytes;
}

Geometry random_geometry(std::mt19937_64 &rng) {
    std::uniform_int_distribution<std::int64_t> n(2, 9);
    std::uniform_real_distribution<double> s(0.3, 3.0), o(-100.0, 100.0), a(-3.0, 3.0);
    return make_geometry(n(rng), n(rng), n(rng), {s(rng), s(rng), s(rng)}, {o(rng), o(rng), o(rng)},
                         oblique_direction(a(rng), a(rng), a(rng)));
}

std::string valid_csv() {
    return "case_id,label,score_original,score_rigid,score_deformable\n"
           "a,1,0.9,0.8,0.95\n"
           "b,0,0.1,0.2,0.05\n";
}

} // namespace

TEST_CASE("property: MetaImage round trips are bit exact") {
    TempDir dir("volio");
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const auto g = random_geometry(rng);
        const auto v = random_volume(g, 100 + static_cast<std::uint64_t>(t), -1e3, 1e3);
        write_metaimage(v, dir / "v.mha");
        const auto rv = read_volume(dir / "v.mha");
        CHECK(rv.geometry() == g);
        CHECK(rv == v);

        const auto f = random_field(g, 200 + static_cast<std::uint64_t>(t));
        write_metaimage(f, dir / "f.mha");
        const auto rf = read_field(dir / "f.mha");
        CHECK(rf.geometry() == g);
        CHECK(rf == f);

        BinaryMask m(g);
        for (std::size_t n = 0; n < m.size(); ++n) m.set(n, rng() % 3 == 0);
        write_metaimage(m, dir / "m.mha");
        CHECK(read_mask(dir / "m.mha") == m);
        CHECK(std::holds_alternative<BinaryMask>(read_metaimage(dir / "m.mha")));
    }
}

TEST_CASE("float-representable volumes are stored as MET_FLOAT") {
    TempDir dir("volio");
    const auto g = make_geometry(2, 2, 2);
    Volume3D zeros(g);
    write_metaimage(zeros, dir / "z.mha");
    const auto text = read_text_file(dir / "z.mha");
    CHECK(text.find("DimSize = 2 2 2\n") != std::string::npos);
    CHECK(text.find("ElementType = MET_FLOAT\n") != std::string::npos);
    CHECK(text.find("ElementDataFile = LOCAL\n") != std::string::npos);
    const auto payload = text.substr(text.find("ElementDataFile = LOCAL\n") + 24);
    CHECK(payload == std::string(8 * sizeof(float), '\0'));

    Volume3D third(g);
    third[0] = 1.0 / 3.0;
    write_metaimage(third, dir / "t.mha");
    CHECK(read_text_file(dir / "t.mha").find("MET_DOUBLE") != std::string::npos);
    CHECK(read_volume(dir / "t.mha") == third);
}

TEST_CASE("lattices need two voxels per axis") {
    TempDir dir("volio");
    write_raw(dir / "thin.mha", header("2 1 2", "MET_UCHAR") + std::string(4, '\0'));
    CHECK_THROWS_AS(read_metaimage(dir / "thin.mha"), FormatError);
}

TEST_CASE("vector fields declare three channels") {
    TempDir dir("volio");
    write_metaimage(random_field(make_geometry(3, 2, 2), 1), dir / "f.mha");
    const auto text = read_text_file(dir / "f.mha");
    CHECK(text.find("ElementNumberOfChannels = 3\n") != std::string::npos);
    CHECK(text.find("ElementType = MET_DOUBLE\n") != std::string::npos);
}

TEST_CASE("three-channel float files load as vector fields") {
    TempDir dir("volio");
    std::string s = header("2 2 2", "MET_FLOAT", 3);
    for (float v : {1.f, 2.f, 3.f, -4.f, 5.5f, 6.f}) append(s, v);
    for (int n = 0; n < 18; ++n) append(s, 0.f);
    write_raw(dir / "f.mha", s);
    const auto obj = read_metaimage(dir / "f.mha");
    REQUIRE(std::holds_alternative<VectorField3D>(obj));
    const auto &f = std::get<VectorField3D>(obj);
    CHECK(f[0] == Vec3{1, 2, 3});
    CHECK(f[1] == Vec3{-4, 5.5, 6});
}

TEST_CASE("uchar files with other values load as volumes") {
    TempDir dir("volio");
    std::string s = header("2 2 2", "MET_UCHAR");
    s.push_back(0);
    s.push_back(7);
    s.append(6, '\0');
    write_raw(dir / "u.mha", s);
    const auto obj = read_metaimage(dir / "u.mha");
    REQUIRE(std::holds_alternative<Volume3D>(obj));
    CHECK(std::get<Volume3D>(obj)[1] == 7.0);
    CHECK_THROWS_AS(read_mask(dir / "u.mha"), FormatError);
}

TEST_CASE("MetaImage format errors name the problem") {
    TempDir dir("volio");
    auto expect = [&](const std::string &bytes, const std::string &needle) {
        write_raw(dir / "bad.mha", bytes);
        try {
            read_metaimage(dir / "bad.mha");
            FAIL("no error for " << needle);
        } catch (const FormatError &e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    std::string short_payload = header("4 4 4", "MET_FLOAT");
    for (int n = 0; n < 63; ++n) append(short_payload, 0.f);
    expect(short_payload, "size mismatch");
    std::string two_d = header("2 2 2", "MET_FLOAT");
    two_d.replace(two_d.find("NDims = 3"), 9, "NDims = 2");
    expect(two_d, "NDims");
    expect(header("2 2 2", "MET_SHORT") + std::string(16, 'a'), "ElementType");
    expect(header("2 2", "MET_UCHAR") + std::string(4, 'a'), "DimSize");
    std::string no_type = header("2 2 2", "MET_UCHAR");
    no_type.erase(no_type.find("ElementType"), std::string("ElementType = MET_UCHAR\n").size());
    expect(no_type + std::string(8, 'a'), "ElementType");
    expect(header("2 2 2", "MET_UCHAR", 2) + std::string(16, 'a'), "ElementNumberOfChannels");
    CHECK_THROWS_AS(read_metaimage(dir / "missing.mha"), InputError);
}

TEST_CASE("atomic writes leave no temporary files") {
    TempDir dir("volio");
    write_file_atomic(dir / "x.txt", "one");
    write_file_atomic(dir / "x.txt", "two");
    CHECK(read_text_file(dir / "x.txt") == "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(dir.path())) ++files;
    CHECK(files == 1);
    CHECK_THROWS_AS(write_file_atomic(dir / "no_such_dir" / "x.txt", "z"), InputError);
}

TEST_CASE("scores csv examples") {
    const auto t = parse_scores_csv(valid_csv());
    CHECK(t.rows.size() == 2);
    CHECK(t.variants == std::vector<std::string>{"original", "rigid", "deformable"});
    CHECK(t.labels() == std::vector<int>{1, 0});
    CHECK(t.column("rigid") == std::vector<double>{0.8, 0.2});
    CHECK_THROWS_AS(t.column("other"), InputError);

    const auto extra = parse_scores_csv("case_id,label,score_original,score_rigid,score_deformable,score_mi\n"
                                        "a,1,0.9,0.8,0.95,0.5\nb,0,0.1,0.2,0.05,0.4\n");
    CHECK(extra.has_variant("mi"));

    auto expect = [](const std::string &text, const std::string &needle) {
        try {
            parse_scores_csv(text);
            FAIL("no error for " << needle);
        } catch (const FormatError &e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    expect(valid_csv() + "a,0,0.1,0.1,0.1\n", "duplicate case_id 'a'");
    expect(valid_csv() + "c,2,0.1,0.1,0.1\n", "line 4");
    expect(valid_csv() + "c,2,0.1,0.1,0.1\n", "label");
    expect(valid_csv() + "c,1,1.5,0.1,0.1\n", "outside [0, 1]");
    expect(valid_csv() + "c,1,x,0.1,0.1\n", "not a number");
    expect(valid_csv() + "c,1,0.1,0.1\n", "fields");
    expect("case_id,label,score_original,score_rigid\na,1,0.1,0.1\n", "score_deformable");
    expect("", "empty");
}

TEST_CASE("property: scores csv round trips at full precision") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ScoreTable t;
    t.variants = {"original", "rigid", "deformable", "extra"};
    for (int i = 0; i < 50; ++i) {
        ScoreRow r{"case-" + std::to_string(i), static_cast<int>(rng() % 2), {}};
        for (const auto &v : t.variants) r.scores[v] = u(rng);
        t.rows.push_back(r);
    }
    const auto back = parse_scores_csv(format_scores_csv(t));
    CHECK(back.variants == t.variants);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(back.rows[i].case_id == t.rows[i].case_id);
        CHECK(back.rows[i].label == t.rows[i].label);
        CHECK(back.rows[i].scores == t.rows[i].scores);
    }
    TempDir dir("volio");
    write_scores_csv(t, dir / "s.csv");
    CHECK(read_scores_csv(dir / "s.csv").rows.size() == 50);
}

TEST_CASE("config json") {
    RegistrationConfigFile f;
    f.config.alpha = 0.25;
    f.config.epsilon = 0.3;
    f.config.grid_size = Dims{11, 12, 13};
    f.config.oob_policy = OobPolicy::Clamp;
    f.seed = 99;
    const auto back = parse_config_json(format_config_json(f));
    CHECK(back.config.alpha == 0.25);
    CHECK(back.config.epsilon == 0.3);
    CHECK(back.config.grid_size == Dims{11, 12, 13});
    CHECK(back.config.oob_policy == OobPolicy::Clamp);
    CHECK(back.seed == 99);
    CHECK(format_config_json(back) == format_config_json(f));

    const auto defaults = parse_config_json("{}");
    CHECK(defaults.config.alpha == RegistrationConfig{}.alpha);
    CHECK_FALSE(defaults.config.epsilon.has_value());
    CHECK_THROWS_AS(parse_config_json(R"({"alpah": 1})"), FormatError);
    CHECK_THROWS_AS(parse_config_json(R"({"alpha": -1})"), FormatError);
    CHECK_THROWS_AS(parse_config_json(R"({"alpha": "big"})"), FormatError);
    CHECK_THROWS_AS(parse_config_json(R"({"levels": 3})"), FormatError);
    CHECK_THROWS_AS(parse_config_json(R"({"oob_policy": "mirror"})"), FormatError);
    CHECK_THROWS_AS(parse_config_json(R"({"version": 2})"), FormatError);
    CHECK_THROWS_AS(parse_config_json("[1, 2"), FormatError);
}

TEST_CASE("deformation files round trip") {
    TempDir dir("volio");
    const auto g = make_geometry(10, 10, 10);
    Deformation d;
    d.rigid = RigidParams{Vec3{0.1, -0.2, 0.3}, Vec3{1.0 / 3.0, 2, -3}, Vec3{4.5, 4.5, 4.5}};
    auto grid = DisplacementGrid::covering(box_mask(g, 2, 7), Dims{5, 5, 5});
    grid.control = random_field(grid.geometry(), 4);
    d.grid = grid;
    write_deformation(d, dir.path());
    const auto back = read_deformation(dir.path());
    CHECK(back.rigid == d.rigid);
    REQUIRE(back.grid.has_value());
    CHECK(back.grid->control == d.grid->control);

    CHECK(parse_rigid_json(format_rigid_json(d.rigid)) == d.rigid);
    CHECK_THROWS_AS(parse_rigid_json(R"({"rotation": [0, 0, 0]})"), FormatError);

    TempDir rigid_only("volio");
    write_deformation(Deformation{d.rigid, std::nullopt}, rigid_only.path());
    CHECK_FALSE(read_deformation(rigid_only.path()).grid.has_value());
}
