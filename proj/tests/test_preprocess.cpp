#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fairtriage;
using ft_test::feature_json;

namespace {

// Tiny schema with one of each kind plus the age/attendance/IDACI sources.
FeatureSchema small_schema() {
    json j = {{"target", {{"name", "OUT"}, {"levels", {"EH_SUPPORT", "SOME_ACTION"}}, {"mix", {0.4, 0.6}}}},
              {"features",
               {feature_json("NEET", "binary", 0.2, 0.4, 0.0, 30.0),
                feature_json("IDACI", "numeric-fraction", 0.3, 0.2),
                feature_json("AGE AT LOCALITY DECISION", "numeric-count", 9.0, 4.0),
                feature_json("ATTENDANCE YEAR 4", "numeric-fraction", 0.9, 0.1, 0.0, 10.0),
                {{"name", "GENDER"}, {"kind", "categorical"}, {"levels", {"MALE", "FEMALE", "OTHER"}},
                 {"level_weights", {0.5, 0.45, 0.05}}}}}};
    return schema_from_json(j);
}

RawDataset blank(const FeatureSchema& s, std::size_t n) {
    RawDataset ds;
    ds.schema = s;
    ds.n = n;
    ds.values.assign(n * s.size(), 0.0);
    ds.states.assign(n * s.size(), CellState::Value);
    ds.labels.assign(n, 0);
    ds.signal_labels.assign(n, 0);
    return ds;
}

void set(RawDataset& ds, std::size_t i, std::size_t j, double v, CellState st = CellState::Value) {
    ds.values[i * ds.cols() + j] = v;
    ds.states[i * ds.cols() + j] = st;
}

}  // namespace

TEST(DropSparse, ThresholdOnMissingFraction) {
    // 149 binary features: one record fully observed, one with 60 MISSING
    // (40.3 %), one with 44 MISSING (29.5 %) and 100 NA.
    json j = {{"target", {{"name", "T"}, {"levels", {"A", "B"}}, {"mix", {0.5, 0.5}}}}, {"features", json::array()}};
    for (int k = 0; k < 149; ++k) j["features"].push_back(feature_json("B" + std::to_string(k), "binary", 0.5, 0.5, 1.0, 1.0));
    const auto s = schema_from_json(j);
    auto ds = blank(s, 3);
    for (std::size_t c = 0; c < 60; ++c) set(ds, 1, c, 0.0, CellState::Missing);
    for (std::size_t c = 0; c < 44; ++c) set(ds, 2, c, 0.0, CellState::Missing);
    for (std::size_t c = 44; c < 144; ++c) set(ds, 2, c, 0.0, CellState::NA);
    ds.labels = {0, 1, 1};
    const auto kept = drop_sparse_records(ds, 0.30);
    ASSERT_EQ(kept.n, 2u);
    EXPECT_EQ(kept.labels, (std::vector<int>{0, 1}));
    EXPECT_EQ(kept.state(1, 50), CellState::NA);  // survivor order preserved
}

TEST(DropSparse, BoundaryIsStrict) {
    json j = {{"target", {{"name", "T"}, {"levels", {"A", "B"}}, {"mix", {0.5, 0.5}}}}, {"features", json::array()}};
    for (int k = 0; k < 10; ++k) j["features"].push_back(feature_json("B" + std::to_string(k), "binary", 0.5, 0.5, 1.0));
    auto ds = blank(schema_from_json(j), 1);
    for (std::size_t c = 0; c < 3; ++c) set(ds, 0, c, 0.0, CellState::Missing);
    EXPECT_EQ(drop_sparse_records(ds, 0.30).n, 1u);  // exactly 30 % stays
}

TEST(DropSparse, AllRemovedIsAnError) {
    json j = {{"target", {{"name", "T"}, {"levels", {"A", "B"}}, {"mix", {0.5, 0.5}}}},
              {"features", {feature_json("B", "binary", 0.5, 0.5, 50.0)}}};
    auto ds = blank(schema_from_json(j), 2);
    set(ds, 0, 0, 0.0, CellState::Missing);
    set(ds, 1, 0, 0.0, CellState::Missing);
    EXPECT_THROW(drop_sparse_records(ds, 0.3), DataError);
    EXPECT_THROW(drop_sparse_records(ds, 0.0), ValidationError);
}

TEST(DropSparse, BundledSchemaSurvivorCount) {
    const auto s = load_schema(ft_test::bundled_schema());
    const auto raw = synthesize(s, 15976, {}, 7);
    const auto kept = drop_sparse_records(raw, 0.30);
    EXPECT_EQ(kept.n, 14354u);  // frozen from the first run
    EXPECT_NEAR(static_cast<double>(kept.n), 14360.0, 0.03 * 14360.0);
}

TEST(Encode, NaCellBecomesZeroPlusIndicator) {
    const auto s = small_schema();
    auto ds = blank(s, 2);
    set(ds, 0, 0, 0.0, CellState::NA);
    set(ds, 1, 0, 1.0);
    const auto enc = encode(ds, "EH_SUPPORT");
    const auto& dm = enc.design;
    const auto v = *dm.column_index("NEET"), na = *dm.column_index("NEET NA");
    EXPECT_EQ(dm.X(0, v), 0.0);
    EXPECT_EQ(dm.X(0, na), 1.0);
    EXPECT_EQ(dm.X(1, v), 1.0);
    EXPECT_EQ(dm.X(1, na), 0.0);
}

TEST(Encode, MissingBecomesZeroAndOneHotSumsToAtMostOne) {
    const auto s = small_schema();
    auto ds = blank(s, 3);
    const auto g = *s.index_of("GENDER");
    set(ds, 0, g, 1.0);
    set(ds, 1, g, 0.0, CellState::Missing);
    set(ds, 2, *s.index_of("IDACI"), 0.0, CellState::Missing);
    const auto enc = encode(ds, "EH_SUPPORT");
    const auto& dm = enc.design;
    const std::size_t m = *dm.column_index("GENDER MALE"), f = *dm.column_index("GENDER FEMALE"),
                      o = *dm.column_index("GENDER OTHER");
    EXPECT_EQ(dm.X(0, m) + dm.X(0, f) + dm.X(0, o), 1.0);
    EXPECT_EQ(dm.X(0, f), 1.0);
    EXPECT_EQ(dm.X(1, m) + dm.X(1, f) + dm.X(1, o), 0.0);
    EXPECT_EQ(dm.X(2, *dm.column_index("IDACI")), 0.0);
}

TEST(Encode, LabelsAreOneVsRest) {
    const auto s = small_schema();
    auto ds = blank(s, 3);
    ds.labels = {0, 1, 0};
    EXPECT_EQ(encode(ds, "EH_SUPPORT").design.y, (std::vector<int>{1, 0, 1}));
    EXPECT_EQ(encode(ds, "SOME_ACTION").design.y, (std::vector<int>{0, 1, 0}));
    EXPECT_THROW(encode(ds, "NO_SUCH_LEVEL"), ValidationError);
}

TEST(Encode, SensitiveBins) {
    const auto s = small_schema();
    auto ds = blank(s, 8);
    const auto idaci = *s.index_of("IDACI"), age = *s.index_of("AGE AT LOCALITY DECISION"),
               att = *s.index_of("ATTENDANCE YEAR 4");
    const double idaci_v[] = {0.0, 0.19999, 0.2, 0.4, 0.6, 0.8, 1.0, 0.55};
    const double age_v[] = {7.4, 7.5, 12.5, 12.6, 0.0, 18.0, 10.0, 3.0};
    const double att_v[] = {0.5, 0.5000001, 0.2, 1.0, 0.0, 0.7, 0.9, 0.4};
    for (std::size_t i = 0; i < 8; ++i) {
        set(ds, i, idaci, idaci_v[i]);
        set(ds, i, age, age_v[i]);
        set(ds, i, att, att_v[i]);
    }
    const auto enc = encode(ds, "EH_SUPPORT");
    const auto& ic = enc.groups.at("IDACI_CLASS");
    std::vector<std::string> got;
    for (std::size_t i = 0; i < 8; ++i) got.push_back(ic.label(i));
    EXPECT_EQ(got, (std::vector<std::string>{"1", "1", "2", "3", "4", "5", "5", "3"}));
    const auto& ac = enc.groups.at("AGE_CLASS");
    EXPECT_EQ(ac.label(0), "A");
    EXPECT_EQ(ac.label(1), "B");
    EXPECT_EQ(ac.label(2), "B");
    EXPECT_EQ(ac.label(3), "C");
    const auto& at = enc.groups.at("ATTENDANCE_BIN");
    EXPECT_EQ(at.label(0), "<=0.5");
    EXPECT_EQ(at.label(1), ">0.5");
    const auto& gd = enc.groups.at("GENDER");
    EXPECT_EQ(gd.categories, (std::vector<std::string>{"male", "female", "other"}));
}

TEST(Encode, EveryRecordHasExactlyOneCategoryPerFeature) {
    const auto s = load_schema(ft_test::bundled_schema());
    const auto enc = encode(drop_sparse_records(synthesize(s, 1500, {}, 2)), "EH_SUPPORT");
    ASSERT_EQ(enc.groups.groupings.size(), 4u);
    for (const auto& g : enc.groups.groupings) {
        ASSERT_EQ(g.codes.size(), enc.design.n());
        for (int c : g.codes) ASSERT_TRUE(c >= 0 && static_cast<std::size_t>(c) < g.categories.size()) << g.name;
    }
}

TEST(Encode, FullyObservedDataGetsAllZeroIndicators) {
    const auto s = small_schema();
    auto ds = blank(s, 4);
    for (std::size_t i = 0; i < 4; ++i) set(ds, i, 0, static_cast<double>(i % 2));
    const auto dm = encode(ds, "EH_SUPPORT").design;
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(dm.X(i, *dm.column_index("NEET NA")), 0.0);
        EXPECT_EQ(dm.X(i, *dm.column_index("ATTENDANCE YEAR 4 NA")), 0.0);
    }
}

TEST(Encode, NoMissingOrNaRemains) {
    const auto s = load_schema(ft_test::bundled_schema());
    const auto dm = encode(synthesize(s, 800, {}, 6), "NO_ACTION").design;
    for (double v : dm.X.values()) ASSERT_TRUE(std::isfinite(v));
}

TEST(Encode, ColumnCountDependsOnSchemaOnly) {
    const auto s = load_schema(ft_test::bundled_schema());
    EXPECT_EQ(encoded_column_names(s).size(), 286u);  // regression constant
    const auto a = encode(synthesize(s, 50, {}, 1), "EH_SUPPORT").design;
    const auto b = encode(synthesize(s, 70, {}, 2), "SOME_ACTION").design;
    EXPECT_EQ(a.column_names, b.column_names);
    EXPECT_EQ(a.d(), 286u);
    std::size_t na = 0;
    for (const auto& c : a.column_names) na += c.size() > 3 && c.compare(c.size() - 3, 3, " NA") == 0;
    std::size_t with_na = 0;
    for (const auto& f : s.features) with_na += f.na_rate > 0.0;
    EXPECT_EQ(na, with_na);
}

TEST(Encode, DesignAndGroupCsvRoundTrip) {
    const auto s = load_schema(ft_test::bundled_schema());
    const auto enc = encode(synthesize(s, 120, {}, 11), "EH_SUPPORT");
    const auto dir = ft_test::scratch_dir("design_csv");
    design_table(enc.design).save(dir / "design.csv");
    groups_table(enc.groups, enc.design.n()).save(dir / "groups.csv");
    const auto dm = read_design_csv(dir / "design.csv");
    EXPECT_EQ(dm.column_names, enc.design.column_names);
    EXPECT_TRUE(dm.X == enc.design.X);
    EXPECT_EQ(dm.y, enc.design.y);
    const auto g = read_groups_csv(dir / "groups.csv");
    for (const auto& orig : enc.groups.groupings) {
        const auto& back = g.at(orig.name);
        for (std::size_t i = 0; i < enc.design.n(); ++i) ASSERT_EQ(back.label(i), orig.label(i));
    }
}
