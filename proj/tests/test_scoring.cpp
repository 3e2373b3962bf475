#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sigver/errors.hpp"
#include "sigver/scoring.hpp"
#include "sigver/util.hpp"

#include <cmath>

using namespace sigver;

namespace {

const TokenClassSets kDefaultSets;

TokenLogProb tok(std::string text, double logprob) {
    return {std::move(text), logprob, std::nullopt};
}

} // namespace

TEST_CASE("classify_token normalizes whitespace and quotes") {
    CHECK(classify_token(" Same", kDefaultSets) == TokenClass::Same);
    CHECK(classify_token("\"Different", kDefaultSets) == TokenClass::Diff);
    CHECK(classify_token("Identity", kDefaultSets) == TokenClass::Unknown);
    CHECK(classify_token("SAME", kDefaultSets) == TokenClass::Same);
    CHECK(classify_token(" \"same\" ", kDefaultSets) == TokenClass::Same);
}

TEST_CASE("token class sets validate") {
    TokenClassSets overlapping;
    overlapping.diff_tokens.insert("same");
    CHECK_THROWS_AS(overlapping.validate(), InvalidParams);
    TokenClassSets empty;
    empty.same_tokens.clear();
    CHECK_THROWS_AS(empty.validate(), InvalidParams);
}

TEST_CASE("score_from_logprob follows the two-branch rule") {
    CHECK(score_from_logprob(tok("Same", 0.0), kDefaultSets) == 1.0);
    CHECK(score_from_logprob(tok("Same", std::log(0.9)), kDefaultSets) ==
          doctest::Approx(0.9).epsilon(1e-12));
    CHECK(score_from_logprob(tok("Different", std::log(0.8)), kDefaultSets) ==
          doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("score_from_logprob clamps provider rounding above zero") {
    CHECK(score_from_logprob(tok("Same", 1e-14), kDefaultSets) == 1.0);
    CHECK(score_from_logprob(tok("Different", 1e-14), kDefaultSets) >= 0.0);
}

TEST_CASE("score_from_logprob rejects unknown tokens") {
    CHECK_THROWS_AS(score_from_logprob(tok("Identity", -0.1), kDefaultSets), UnknownToken);
}

TEST_CASE("logprob scores are complementary and monotone") {
    Rng rng(71);
    double prev_l = -20.0, prev_same = score_from_logprob(tok("same", prev_l), kDefaultSets);
    for (int i = 0; i < 500; ++i) {
        const double l = -20.0 * rng.uniform();
        const double same = score_from_logprob(tok("same", l), kDefaultSets);
        const double diff = score_from_logprob(tok("different", l), kDefaultSets);
        CHECK(same + diff == 1.0);
        CHECK(same >= 0.0);
        CHECK(same <= 1.0);
        if (l > prev_l && std::exp(l) != std::exp(prev_l)) {
            const double s = score_from_logprob(tok("same", prev_l), kDefaultSets);
            CHECK(same > s);
        }
        prev_l = l;
        prev_same = same;
    }
    (void)prev_same;
}

TEST_CASE("verdict consistency under the binary-concentration assumption") {
    // whenever exp(L) >= 0.5, the score lands on the Same side of 0.5
    // exactly when the token classifies as Same
    Rng rng(72);
    for (int i = 0; i < 300; ++i) {
        const double l = std::log(rng.uniform(0.5, 1.0));
        CHECK(score_from_logprob(tok("same", l), kDefaultSets) >= 0.5);
        CHECK(score_from_logprob(tok("different", l), kDefaultSets) <= 0.5);
    }
}

TEST_CASE("score_from_certainty normalizes and inverts") {
    CHECK(score_from_certainty(Verdict::SameIdentity, 86) == 0.86);
    CHECK(score_from_certainty(Verdict::DifferentIdentity, 90) == 1.0 - 0.90);
    CHECK(score_from_certainty(Verdict::DifferentIdentity, 50) == 0.5);
    CHECK(score_from_certainty(Verdict::SameIdentity, 0) == 0.0);
    CHECK(score_from_certainty(Verdict::DifferentIdentity, 0) == 1.0);
}

TEST_CASE("score_from_certainty rejects out-of-range values") {
    CHECK_THROWS_AS(score_from_certainty(Verdict::SameIdentity, 101), RangeError);
    CHECK_THROWS_AS(score_from_certainty(Verdict::SameIdentity, -1), RangeError);
}

TEST_CASE("certainty channels for the two verdicts mirror each other") {
    // 1-(1-x) reintroduces one rounding step, hence the tiny epsilon
    for (int c = 0; c <= 100; ++c)
        CHECK(score_from_certainty(Verdict::SameIdentity, c) ==
              doctest::Approx(1.0 - score_from_certainty(Verdict::DifferentIdentity, c))
                  .epsilon(1e-15));
}

TEST_CASE("assemble_scores composes the three channels") {
    VerificationExchange ex;
    ex.pair_id = "000003";
    ex.verdicts = {Verdict::SameIdentity, "both flowing", Verdict::SameIdentity, 95};
    ex.token_logprobs = {
        {"Same", std::log(0.9), VerdictSlot::InitialVerdict},
        {"Same", std::log(0.99), VerdictSlot::FinalVerdict},
    };
    const ScoreTriple t = assemble_scores(ex, kDefaultSets);
    REQUIRE(t.s_v1.has_value());
    REQUIRE(t.s_v2.has_value());
    CHECK(*t.s_v1 == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(*t.s_v2 == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(t.s_text == 0.95);
    CHECK(t.warnings.empty());
}

TEST_CASE("assemble_scores without logprobs yields only the certainty channel") {
    VerificationExchange ex;
    ex.pair_id = "000004";
    ex.verdicts = {Verdict::DifferentIdentity, "", Verdict::DifferentIdentity, 92};
    const ScoreTriple t = assemble_scores(ex, kDefaultSets);
    CHECK_FALSE(t.s_v1.has_value());
    CHECK_FALSE(t.s_v2.has_value());
    CHECK(t.warnings.empty()); // absence without logprobs is expected, not a fault
    CHECK(t.s_text == doctest::Approx(0.08).epsilon(1e-12));
}

TEST_CASE("assemble_scores flags unknown verdict tokens with a warning") {
    VerificationExchange ex;
    ex.pair_id = "000005";
    ex.verdicts = {Verdict::SameIdentity, "", Verdict::SameIdentity, 70};
    ex.token_logprobs = {
        {"Same", std::log(0.9), VerdictSlot::InitialVerdict},
        {"Identity", std::log(0.9), VerdictSlot::FinalVerdict},
    };
    const ScoreTriple t = assemble_scores(ex, kDefaultSets);
    CHECK(t.s_v1.has_value());
    CHECK_FALSE(t.s_v2.has_value());
    REQUIRE(t.warnings.size() == 1);
    CHECK(t.warnings[0].find("s_v2") != std::string::npos);
}

TEST_CASE("scores CSV round-trips rows with absent fields") {
    std::vector<ScoreRow> rows;
    ScoreRow a;
    a.pair_id = "000000";
    a.task = TaskKind::Task1Stylus;
    a.label = PairLabel::Genuine;
    a.channels["s_v1"] = 0.25;
    a.channels["s_v2"] = std::nullopt;
    a.channels["s_text"] = 1.0 / 3.0;
    rows.push_back(a);
    ScoreRow b;
    b.pair_id = "000001";
    b.task = TaskKind::Task2Finger;
    b.label = PairLabel::RandomForgery;
    b.channels["s_v1"] = std::nullopt;
    b.channels["s_v2"] = 0.125;
    b.channels["s_text"] = std::nullopt;
    rows.push_back(b);

    const std::string csv = write_scores_csv(rows);
    CHECK(csv.starts_with("pair_id,task,label,s_v1,s_v2,s_text\n"));
    const auto back = parse_scores_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == rows[0]);
    CHECK(back[1] == rows[1]);
}

TEST_CASE("scores CSV emission is channel-ordered and deterministic") {
    ScoreRow r;
    r.pair_id = "000000";
    r.task = TaskKind::Task3Combined;
    r.label = PairLabel::SkilledForgery;
    r.channels["s_dtw"] = 0.5;
    r.channels["s_v2"] = 0.5;
    r.channels["zz_custom"] = 0.5;
    const std::string csv = write_scores_csv({r});
    CHECK(csv.starts_with("pair_id,task,label,s_v2,s_dtw,zz_custom\n"));
    CHECK(write_scores_csv({r}) == csv);
}

TEST_CASE("scores CSV parser rejects bad input") {
    CHECK_THROWS_AS(parse_scores_csv(""), EmptyFile);
    CHECK_THROWS_AS(parse_scores_csv("nope,nope,nope\n"), MalformedLine);
    CHECK_THROWS_AS(parse_scores_csv("pair_id,task,label,s_v1\np0,1,genuine\n"), MalformedLine);
    CHECK_THROWS_AS(parse_scores_csv("pair_id,task,label,s_v1\np0,9,genuine,0.5\n"),
                    InvalidParams);
}
