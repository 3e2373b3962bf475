#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sigver/dtw.hpp"
#include "sigver/errors.hpp"
#include "sigver/ingest.hpp"

using namespace sigver;

TEST_CASE("parse_signature_file maps columns per schema") {
    const auto r = parse_signature_file("2\n10 20 0 512\n11 21 10 600\n", ColumnSchema{});
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[0].x == 10.0);
    CHECK(r.points[0].y == 20.0);
    CHECK(r.points[0].t == 0.0);
    CHECK(r.points[0].p == 512.0);
    CHECK(r.points[1].p == 600.0);
    CHECK(r.kind == InputKind::Stylus);
}

TEST_CASE("parse_signature_file enforces the count header") {
    CHECK_THROWS_AS(parse_signature_file("3\n10 20 0 512\n11 21 10 600\n", ColumnSchema{}),
                    CountMismatch);
}

TEST_CASE("parse_signature_file without a P column yields finger input") {
    ColumnSchema schema;
    schema.column_order = {Column::X, Column::Y, Column::T};
    schema.has_count_header = false;
    schema.delimiter = ColumnSchema::Delimiter::Comma;
    const auto r = parse_signature_file("10,20,0\n11,21,10\n", schema);
    CHECK(r.kind == InputKind::Finger);
    CHECK(r.points[0].p == 0.0);
    CHECK(r.points[1].p == 0.0);
}

TEST_CASE("parse_signature_file treats an all-zero P column as finger input") {
    const auto r = parse_signature_file("2\n10 20 0 0\n11 21 10 0\n", ColumnSchema{});
    CHECK(r.kind == InputKind::Finger);
}

TEST_CASE("parse_signature_file rejects bad input") {
    CHECK_THROWS_AS(parse_signature_file("", ColumnSchema{}), EmptyFile);
    CHECK_THROWS_AS(parse_signature_file("1\n", ColumnSchema{}), EmptyFile);
    CHECK_THROWS_AS(parse_signature_file("1\n10 oops 0 1\n", ColumnSchema{}), MalformedLine);
    CHECK_THROWS_AS(parse_signature_file("1\n10 20 0\n", ColumnSchema{}), MalformedLine);
    try {
        parse_signature_file("2\n10 20 0 1\n10 20 x 1\n", ColumnSchema{});
        FAIL("expected MalformedLine");
    } catch (const MalformedLine& e) {
        CHECK(e.line_no == 3);
    }
}

TEST_CASE("parse_signature_file reads an explicit pen-state column") {
    ColumnSchema schema;
    schema.column_order = {Column::X, Column::Y, Column::T, Column::PenState};
    schema.has_count_header = false;
    const auto r = parse_signature_file("0 0 0 1\n1 1 10 0\n2 2 20 1\n", schema);
    REQUIRE(r.pen_state.size() == 3);
    CHECK(r.pen_state[0] == 1);
    CHECK(r.pen_state[1] == 0);
    const auto strokes = segment_strokes(r);
    REQUIRE(strokes.size() == 2);
}

TEST_CASE("signature file round-trips through the same schema") {
    const SynthParams params{.seed = 9, .n_subjects = 2, .genuine_per_subject = 2,
                             .skilled_per_subject = 1};
    const Dataset d = synth_dataset(params);
    const ColumnSchema schema;
    for (const auto& [path, record] : d.records) {
        const std::string text = serialize_signature_file(record, schema);
        const SignatureRecord back = parse_signature_file(text, schema, path);
        REQUIRE(back.points.size() == record.points.size());
        CHECK(back.kind == record.kind);
        for (std::size_t i = 0; i < record.points.size(); ++i) {
            CHECK(back.points[i].x == record.points[i].x);
            CHECK(back.points[i].y == record.points[i].y);
            CHECK(back.points[i].t == record.points[i].t);
            CHECK(back.points[i].p == record.points[i].p);
        }
    }
}

TEST_CASE("schema validation") {
    ColumnSchema no_x;
    no_x.column_order = {Column::Y, Column::T};
    CHECK_THROWS_AS(no_x.validate(), InvalidParams);
    ColumnSchema two_p;
    two_p.column_order = {Column::X, Column::Y, Column::P, Column::P};
    CHECK_THROWS_AS(two_p.validate(), InvalidParams);
}

TEST_CASE("parse_comparison_list reads labels and preserves order") {
    const auto pairs = parse_comparison_list("# header comment\n"
                                             "u1_g1.txt u1_g2.txt genuine\n"
                                             "u1_g1.txt u2_g1.txt random\n"
                                             "\n"
                                             "u1_g1.txt u1_f1.txt\n");
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].label == PairLabel::Genuine);
    CHECK(pairs[1].label == PairLabel::RandomForgery);
    CHECK(pairs[2].label == PairLabel::Unlabeled);
    CHECK(pairs[0].pair_id == "000000");
    CHECK(pairs[1].pair_id == "000001");
    CHECK(pairs[2].pair_id == "000002");
    CHECK(pairs[1].reference_path == "u1_g1.txt");
    CHECK(pairs[1].probe_path == "u2_g1.txt");
}

TEST_CASE("parse_comparison_list rejects malformed lines") {
    CHECK_THROWS_AS(parse_comparison_list("only_one_field\n"), MalformedLine);
    CHECK_THROWS_AS(parse_comparison_list("a.txt b.txt maybe\n"), MalformedLine);
    CHECK_THROWS_AS(parse_comparison_list("a b c d\n"), MalformedLine);
}

TEST_CASE("comparison list round-trips") {
    const std::string text = "a.txt b.txt genuine\nc.txt d.txt\n";
    const auto pairs = parse_comparison_list(text);
    CHECK(serialize_comparison_list(pairs) == text);
}

TEST_CASE("synth_dataset structure at minimal size") {
    const SynthParams params{.seed = 42, .n_subjects = 2, .genuine_per_subject = 2,
                             .skilled_per_subject = 1};
    const Dataset d = synth_dataset(params);
    CHECK(d.records.size() == 2 * 2 + 2 * 1);
    int genuine = 0, skilled = 0, random = 0;
    for (const ComparisonPair& p : d.pairs) {
        genuine += p.label == PairLabel::Genuine;
        skilled += p.label == PairLabel::SkilledForgery;
        random += p.label == PairLabel::RandomForgery;
    }
    CHECK(genuine == 2);  // one per subject
    CHECK(skilled == 4);  // each forgery vs both genuines
    CHECK(random > 0);
    d.validate();
}

TEST_CASE("synth_dataset is deterministic") {
    const SynthParams params{.seed = 42, .n_subjects = 3, .genuine_per_subject = 2,
                             .skilled_per_subject = 1};
    const Dataset a = synth_dataset(params);
    const Dataset b = synth_dataset(params);
    CHECK(serialize_comparison_list(a.pairs) == serialize_comparison_list(b.pairs));
    REQUIRE(a.records.size() == b.records.size());
    for (const auto& [path, record] : a.records)
        CHECK(serialize_signature_file(record, ColumnSchema{}) ==
              serialize_signature_file(b.records.at(path), ColumnSchema{}));
}

TEST_CASE("synth_dataset rejects impossible parameters") {
    CHECK_THROWS_AS(synth_dataset({.seed = 7, .n_subjects = 1, .genuine_per_subject = 2,
                                   .skilled_per_subject = 1}),
                    InvalidParams);
    CHECK_THROWS_AS(synth_dataset({.seed = 7, .n_subjects = 2, .genuine_per_subject = 1,
                                   .skilled_per_subject = 1}),
                    InvalidParams);
}

TEST_CASE("synth genuine pairs sit closer than random pairs under DTW") {
    const Dataset d = synth_dataset({.seed = 11, .n_subjects = 4, .genuine_per_subject = 3,
                                     .skilled_per_subject = 0});
    double genuine_sum = 0, random_sum = 0;
    int genuine_n = 0, random_n = 0;
    for (const ComparisonPair& p : d.pairs) {
        if (p.label == PairLabel::SkilledForgery)
            continue;
        const auto a = derive_features(normalize_record(d.records.at(p.reference_path)));
        const auto b = derive_features(normalize_record(d.records.at(p.probe_path)));
        const double dist = dtw_distance(a, b).normalized_distance;
        if (p.label == PairLabel::Genuine) {
            genuine_sum += dist;
            ++genuine_n;
        } else {
            random_sum += dist;
            ++random_n;
        }
    }
    REQUIRE(genuine_n > 0);
    REQUIRE(random_n > 0);
    CHECK(genuine_sum / genuine_n < random_sum / random_n);
}

TEST_CASE("assign_tasks_from_kinds tags by endpoint devices") {
    const Dataset d = synth_dataset({.seed = 5, .n_subjects = 4, .genuine_per_subject = 2,
                                     .skilled_per_subject = 1});
    for (const ComparisonPair& p : d.pairs) {
        const InputKind a = d.records.at(p.reference_path).kind;
        const InputKind b = d.records.at(p.probe_path).kind;
        if (a == InputKind::Stylus && b == InputKind::Stylus)
            CHECK(p.task == TaskKind::Task1Stylus);
        else if (a == InputKind::Finger && b == InputKind::Finger)
            CHECK(p.task == TaskKind::Task2Finger);
        else
            CHECK(p.task == TaskKind::Task3Combined);
    }
    int total = 0;
    for (const auto& [task, count] : d.task_counts)
        total += count;
    CHECK(total == static_cast<int>(d.pairs.size()));
}
