#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace fairkit;
using namespace testutil;

TEST_CASE("fairness spec files parse with line-aware errors") {
    std::istringstream good(
        "# roles\n"
        "sensitive G=female\n"
        "outcome O=1\n"
        "admissible D\n"
        "inadmissible H\n"
        "proxy G\n");
    const auto spec = parse_fairness_spec(good);
    CHECK(spec.sensitive == "G");
    CHECK(spec.protected_label == "female");
    CHECK(spec.outcome == "O");
    CHECK(spec.positive_outcome == "1");
    CHECK(spec.admissible == NameSet{"D"});
    CHECK(spec.admissible_declared);
    CHECK(spec.inadmissible == NameSet{"H"});
    CHECK(spec.proxy == NameSet{"G"});
    CHECK_FALSE(spec.has_label());

    // a bare `admissible` line declares the empty set (distinct from absent)
    std::istringstream bare(
        "sensitive S=1\n"
        "outcome O=1\n"
        "admissible\n");
    const auto empty_adm = parse_fairness_spec(bare);
    CHECK(empty_adm.admissible_declared);
    CHECK(empty_adm.admissible.empty());

    std::istringstream missing_outcome("sensitive G=female\n");
    CHECK_THROWS_AS((void)parse_fairness_spec(missing_outcome), ParseError);

    std::istringstream duplicate(
        "sensitive G=female\n"
        "outcome O=1\n"
        "sensitive G=male\n");
    try {
        (void)parse_fairness_spec(duplicate);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }

    const auto from_file = load_fairness_spec(fixture_path("college1.spec"));
    CHECK(from_file.sensitive == "G");
    CHECK(from_file.admissible == NameSet{"D"});
}

TEST_CASE("spec validation enforces binary roles and disjoint sets") {
    const auto ds = college1_data();
    CHECK_NOTHROW(validate_fairness_spec(ds, college1_spec()));

    auto bad = college1_spec();
    bad.sensitive = "Z";
    CHECK_THROWS_AS(validate_fairness_spec(ds, bad), Error);  // unknown variable

    bad = college1_spec();
    bad.protected_label = "other";
    CHECK_THROWS_AS(validate_fairness_spec(ds, bad), Error);  // unknown label

    bad = college1_spec();
    bad.admissible = {"D"};
    bad.inadmissible = {"D", "H"};
    CHECK_THROWS_AS(validate_fairness_spec(ds, bad), Error);  // overlap

    bad = college1_spec();
    bad.admissible = {"G"};
    CHECK_THROWS_AS(validate_fairness_spec(ds, bad), Error);  // role in admissible

    // non-binary sensitive attribute is rejected loudly
    const auto ternary =
        dataset_of("S:a,b,c O:0,1", {{{"a", "1"}, 1}, {{"b", "0"}, 1}, {{"c", "1"}, 1}});
    FairnessSpec spec;
    spec.sensitive = "S";
    spec.protected_label = "a";
    spec.outcome = "O";
    spec.positive_outcome = "1";
    CHECK_THROWS_AS(validate_fairness_spec(ternary, spec), Error);
}

TEST_CASE("demographic parity") {
    const auto r1 = demographic_parity(college1_data(), college1_spec());
    CHECK(r1.gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r1.fair);
    REQUIRE(r1.rows.size() == 2);
    CHECK(r1.rows[0].quantity == "Pr(O=1|G=male)");
    CHECK(r1.rows[0].value == doctest::Approx(0.32).epsilon(1e-12));
    CHECK(r1.rows[1].quantity == "Pr(O=1|G=female)");
    CHECK(r1.rows[1].value == doctest::Approx(0.32).epsilon(1e-12));

    const auto r2 = demographic_parity(college2_data(), college2_spec());
    CHECK(r2.fair);
    CHECK(r2.rows[0].value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r2.rows[1].value == doctest::Approx(0.5).epsilon(1e-12));

    // one-sided data faults instead of treating a missing group as zero
    const auto one_group = dataset_of("G:male,female O:0,1", {{{"male", "1"}, 5}});
    CHECK_THROWS_AS((void)demographic_parity(one_group, college1_spec()), Error);
}

TEST_CASE("conditional statistical parity: the aggregate gap hides, strata reveal") {
    const auto report =
        conditional_statistical_parity(college1_data(), college1_spec(), {"D"});
    CHECK(report.gap == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_FALSE(report.fair);
    const auto* male_a = report.find_row("Pr(O=1|G=male,D=A)");
    REQUIRE(male_a != nullptr);
    CHECK(male_a->value == doctest::Approx(0.8).epsilon(1e-12));
    const auto* female_a = report.find_row("Pr(O=1|G=female,D=A)");
    REQUIRE(female_a != nullptr);
    CHECK(female_a->value == doctest::Approx(0.2).epsilon(1e-12));
    REQUIRE(report.find_gap("D=A") != nullptr);
    CHECK(report.find_gap("D=A")->gap == doctest::Approx(0.6).epsilon(1e-12));

    // college II values, as observed (not interventional)
    const auto r2 = conditional_statistical_parity(college2_data(), college2_spec(), {"D"});
    CHECK(r2.find_row("Pr(O=1|G=male,D=A)")->value == doctest::Approx(1.0));
    CHECK(r2.find_row("Pr(O=1|G=female,D=A)")->value == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r2.find_row("Pr(O=1|G=male,D=B)")->value == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
    CHECK(r2.find_row("Pr(O=1|G=female,D=B)")->value == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r2.gap == doctest::Approx(4.0 / 9.0 - 0.2).epsilon(1e-12));

    // empty conditioning set degrades to demographic parity
    const auto global = conditional_statistical_parity(college1_data(), college1_spec(), {});
    CHECK(global.gap == doctest::Approx(0.0).epsilon(1e-12));

    // conditioning on a role variable is a fault
    CHECK_THROWS_AS((void)conditional_statistical_parity(college1_data(), college1_spec(), {"G"}),
                    Error);
}

TEST_CASE("conditional statistical parity: uncomparable strata") {
    FairnessSpec spec;
    spec.sensitive = "S";
    spec.protected_label = "1";
    spec.outcome = "O";
    spec.positive_outcome = "1";
    const auto ds = dataset_of("S:0,1 D:a,b O:0,1",
                               {{{"0", "a", "1"}, 1},
                                {{"0", "a", "0"}, 1},
                                {{"1", "a", "1"}, 3},
                                {{"1", "a", "0"}, 1},
                                {{"0", "b", "1"}, 2}});  // stratum b: no S=1 rows
    const auto report = conditional_statistical_parity(ds, spec, {"D"});
    CHECK(report.gap == doctest::Approx(0.25).epsilon(1e-12));  // 0.75 vs 0.5 in a
    const auto* b_entry = report.find_gap("D=b");
    REQUIRE(b_entry != nullptr);
    CHECK_FALSE(b_entry->comparable);
    const auto* missing = report.find_row("Pr(O=1|S=1,D=b)");
    REQUIRE(missing != nullptr);
    CHECK_FALSE(missing->defined);

    // every stratum uncomparable -> fault, not a silent "fair"
    const auto disjoint = dataset_of("S:0,1 D:a,b O:0,1",
                                     {{{"0", "a", "1"}, 1}, {{"1", "b", "1"}, 1}});
    CHECK_THROWS_AS((void)conditional_statistical_parity(disjoint, spec, {"D"}), Error);
}

TEST_CASE("equalized odds and predictive parity on the recidivism-style fixture") {
    CsvOptions options;
    const auto ds = load_csv_file(fixture_path("compas.csv"), options);
    const auto spec = load_fairness_spec(fixture_path("compas.spec"));
    validate_fairness_spec(ds, spec);

    const auto eo = equalized_odds(ds, spec);
    CHECK_FALSE(eo.fair);
    // protected group S=1: FP 0.449, FN 0.280; S=0: FP 0.235, FN 0.477
    CHECK(eo.find_row("Pr(O=1|Y=0,S=1)")->value == doctest::Approx(0.449).epsilon(1e-12));
    CHECK(eo.find_row("Pr(O=1|Y=0,S=0)")->value == doctest::Approx(0.235).epsilon(1e-12));
    CHECK(eo.find_row("Pr(O=0|Y=1,S=1)")->value == doctest::Approx(0.280).epsilon(1e-12));
    CHECK(eo.find_row("Pr(O=0|Y=1,S=0)")->value == doctest::Approx(0.477).epsilon(1e-12));
    CHECK(eo.find_gap("false_positive_rate")->gap == doctest::Approx(0.214).epsilon(1e-12));
    CHECK(eo.find_gap("false_negative_rate")->gap == doctest::Approx(0.197).epsilon(1e-12));
    CHECK(eo.gap == doctest::Approx(0.214).epsilon(1e-12));

    const auto pp = predictive_parity(ds, spec);
    CHECK_FALSE(pp.fair);
    CHECK(pp.find_row("Pr(Y=1|O=1,S=1)")->value == doctest::Approx(720.0 / 1169.0).epsilon(1e-12));
    CHECK(pp.find_row("Pr(Y=1|O=1,S=0)")->value == doctest::Approx(523.0 / 758.0).epsilon(1e-12));
    CHECK(pp.find_gap("positive_predictions")->gap ==
          doctest::Approx(523.0 / 758.0 - 720.0 / 1169.0).epsilon(1e-12));

    // a missing label column is a fault for both metrics
    const auto no_label = college1_data();
    CHECK_THROWS_AS((void)equalized_odds(no_label, college1_spec()), Error);
    CHECK_THROWS_AS((void)predictive_parity(no_label, college1_spec()), Error);
}

TEST_CASE("proxy fairness") {
    const auto report = proxy_fairness(college1_data(), college1_dag(), college1_spec());
    CHECK(report.fair);
    CHECK(report.gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.find_row("Pr(O=1|do(G=male))")->value == doctest::Approx(0.32).epsilon(1e-12));
    CHECK(report.find_row("Pr(O=1|do(G=female))")->value == doctest::Approx(0.32).epsilon(1e-12));

    auto no_proxy = college1_spec();
    no_proxy.proxy = {};
    CHECK_THROWS_AS((void)proxy_fairness(college1_data(), college1_dag(), no_proxy), Error);

    // a proxy context that violates positivity propagates as a fault
    const auto sparse = dataset_of("G:male,female D:A,B H:male,female O:0,1",
                                   {{{"male", "B", "male", "1"}, 5},
                                    {{"female", "A", "female", "0"}, 5}});
    auto proxy_d = college1_spec();
    proxy_d.proxy = {"D"};
    CHECK_THROWS_AS((void)proxy_fairness(sparse, college1_dag(), proxy_d), PositivityError);
}

TEST_CASE("k-fairness: interventional gaps per context") {
    const auto r1 = k_fair(college1_data(), college1_dag(), college1_spec(), {"D"});
    CHECK_FALSE(r1.fair);
    CHECK(r1.gap == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r1.find_row("Pr(O=1|do(G=male),do(D=A))")->value == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r1.find_row("Pr(O=1|do(G=female),do(D=A))")->value ==
          doctest::Approx(0.2).epsilon(1e-12));

    // college II: exactly 1/2 everywhere (the values, not just the gap)
    const auto r2 = k_fair(college2_data(), college2_dag(), college2_spec(), {"D"});
    CHECK(r2.fair);
    for (const auto& row : r2.rows) {
        REQUIRE(row.defined);
        CHECK(row.value == 0.5);
    }

    // K = {} degrades to the pure do(S) comparison
    const auto base = k_fair(college1_data(), college1_dag(), college1_spec(), {});
    CHECK(base.fair);
    CHECK(base.gap == doctest::Approx(0.0).epsilon(1e-12));

    // K may not contain role variables
    CHECK_THROWS_AS((void)k_fair(college1_data(), college1_dag(), college1_spec(), {"G"}), Error);

    // contexts that violate positivity are uncomparable, not fatal
    const auto sparse = dataset_of("G:male,female D:A,B H:male,female O:0,1",
                                   {{{"male", "B", "male", "1"}, 2},
                                    {{"male", "B", "male", "0"}, 2},
                                    {{"female", "B", "female", "1"}, 2},
                                    {{"female", "B", "female", "0"}, 2}});
    const auto rs = k_fair(sparse, college1_dag(), college1_spec(), {"D"});
    REQUIRE(rs.find_gap("D=A") != nullptr);
    CHECK_FALSE(rs.find_gap("D=A")->comparable);
    CHECK(rs.find_gap("D=B")->comparable);
}

TEST_CASE("justifiable fairness: enumerate mode") {
    const auto r1 = justifiably_fair(college1_data(), college1_dag(), college1_spec(),
                                     JustifiableMode::Enumerate);
    CHECK(r1.verdict == Verdict::Unfair);
    CHECK_FALSE(r1.fair());
    CHECK(r1.witness_k == NameSet{"D"});
    CHECK(r1.witness_gap == doctest::Approx(0.6).epsilon(1e-12));

    const auto r2 = justifiably_fair(college2_data(), college2_dag(), college2_spec(),
                                     JustifiableMode::Enumerate);
    CHECK(r2.verdict == Verdict::Fair);
    CHECK(r2.fair());
    CHECK(r2.supersets_checked == 2);  // {D} and {D,Q}

    // an undeclared admissible set cannot be defaulted silently
    auto no_admissible = college1_spec();
    no_admissible.admissible_declared = false;
    no_admissible.admissible = {};
    CHECK_THROWS_AS((void)justifiably_fair(college1_data(), college1_dag(), no_admissible,
                                           JustifiableMode::Enumerate),
                    Error);
}

TEST_CASE("justifiable fairness: graph mode is sufficient-only") {
    // college I: the G->H->O route avoids the admissible set -> Unknown, with a path witness
    const auto r1 = justifiably_fair(college1_data(), college1_dag(), college1_spec(),
                                     JustifiableMode::Graph);
    CHECK(r1.verdict == Verdict::Unknown);
    CHECK_FALSE(r1.fair());
    REQUIRE(r1.witness_path.size() == 3);
    CHECK(r1.witness_path == std::vector<std::string>{"G", "H", "O"});

    // college II: the only directed route G->D->O passes through D -> Fair
    const auto r2 = justifiably_fair(college2_data(), college2_dag(), college2_spec(),
                                     JustifiableMode::Graph);
    CHECK(r2.verdict == Verdict::Fair);
}

TEST_CASE("justifiable fairness: saturated-independence mode") {
    // college II fails the saturated statement (Q feeds O directly) -> Unknown
    const auto r2 = justifiably_fair(college2_data(), college2_dag(), college2_spec(),
                                     JustifiableMode::Ci);
    CHECK(r2.verdict == Verdict::Unknown);
    CHECK(r2.ci_statement.x == NameSet{"O"});
    CHECK(r2.ci_statement.y == NameSet{"G", "Q"});
    CHECK(r2.ci_statement.z == NameSet{"D"});
    CHECK_FALSE(r2.ci.holds);

    // outcome depending only on the admissible set passes
    const auto clean = dataset_of("G:male,female Q:0,1 D:A,B O:0,1",
                                  {{{"male", "1", "A", "1"}, 8},
                                   {{"male", "1", "A", "0"}, 2},
                                   {{"male", "0", "B", "1"}, 4},
                                   {{"male", "0", "B", "0"}, 6},
                                   {{"female", "1", "B", "1"}, 4},
                                   {{"female", "1", "B", "0"}, 6},
                                   {{"female", "0", "A", "1"}, 8},
                                   {{"female", "0", "A", "0"}, 2}});
    const auto rc = justifiably_fair(clean, college2_dag(), college2_spec(), JustifiableMode::Ci);
    CHECK(rc.verdict == Verdict::Fair);
    CHECK(rc.ci.holds);
    CHECK(rc.ci.cmi_bits <= 1e-9);
}

TEST_CASE("justifiable fairness: enumerate refuses oversized variable sets") {
    // 13 free variables besides S and O would mean 2^13 supersets
    std::string vars = "S:0,1 O:0,1";
    for (int i = 0; i < 13; ++i) vars += " X" + std::to_string(i) + ":0,1";
    std::vector<std::string> row0, row1;
    row0.push_back("0");
    row0.push_back("0");
    row1.push_back("1");
    row1.push_back("1");
    for (int i = 0; i < 13; ++i) {
        row0.push_back("0");
        row1.push_back("1");
    }
    const auto ds = dataset_of(vars, {{row0, 1}, {row1, 1}});
    CausalDag dag;
    dag.variables = ds.schema;
    FairnessSpec spec;
    spec.sensitive = "S";
    spec.protected_label = "1";
    spec.outcome = "O";
    spec.positive_outcome = "1";
    spec.admissible_declared = true;
    try {
        (void)justifiably_fair(ds, dag, spec, JustifiableMode::Enumerate);
        FAIL("expected an advisory refusal");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("12") != std::string::npos);
    }
}

TEST_CASE("error-rate identity report") {
    CsvOptions options;
    const auto ds = load_csv_file(fixture_path("compas.csv"), options);
    const auto spec = load_fairness_spec(fixture_path("compas.spec"));

    const auto report = impossibility_check(ds, spec);
    CHECK(report.identity_agrees);
    for (const auto& side : report.identity) {
        REQUIRE(side.evaluated);
        CHECK(side.lhs == doctest::Approx(side.rhs).epsilon(1e-9));
    }
    CHECK(report.eo_fp_gap == doctest::Approx(0.214).epsilon(1e-12));
    CHECK(report.eo_fn_gap == doctest::Approx(0.197).epsilon(1e-12));
    CHECK(report.pp_gap ==
          doctest::Approx(523.0 / 758.0 - 720.0 / 1169.0).epsilon(1e-12));
    CHECK(report.prevalence_gap == doctest::Approx(0.0).epsilon(1e-12));
    // identity sides: lhs = FP/(1-FN) = 449/720 for the protected group
    CHECK(report.identity[1].lhs == doctest::Approx(449.0 / 720.0).epsilon(1e-12));

    // degenerate cells are skipped with a note, not divided by zero
    const auto degenerate = dataset_of("S:0,1 Y:0,1 O:0,1",
                                       {{{"1", "0", "0"}, 5},
                                        {{"1", "1", "0"}, 5},  // S=1 never predicted positive
                                        {{"0", "0", "1"}, 3},
                                        {{"0", "0", "0"}, 2},
                                        {{"0", "1", "1"}, 4},
                                        {{"0", "1", "0"}, 1}});
    const auto dr = impossibility_check(degenerate, spec);
    CHECK_FALSE(dr.identity[1].evaluated);
    CHECK(dr.identity[1].note.find("no positive predictions") != std::string::npos);
    CHECK(dr.identity[0].evaluated);
}

TEST_CASE("stratified odds-ratio summary") {
    const auto r1 = rod(college1_data(), college1_spec());
    CHECK(r1.value == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(r1.strata.size() == 2);
    CHECK(r1.strata[0].odds_ratio == doctest::Approx(1.0 / 16.0).epsilon(1e-12));  // D=A
    CHECK(r1.strata[1].odds_ratio == doctest::Approx(16.0).epsilon(1e-12));        // D=B
    CHECK(r1.strata[0].weight == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r1.note.find("reconstructed") != std::string::npos);

    const auto r2 = rod(college2_data(), college2_spec());
    CHECK(r2.value == doctest::Approx(0.3125).epsilon(1e-12));
    CHECK_FALSE(r2.strata[0].comparable);  // department A has an empty male-reject cell
    CHECK(r2.strata[1].comparable);
    CHECK(r2.strata[1].weight == doctest::Approx(0.7).epsilon(1e-12));

    // swapping the protected group inverts the summary
    auto swapped = college2_spec();
    swapped.protected_label = "male";
    CHECK(rod(college2_data(), swapped).value == doctest::Approx(1.0 / 0.3125).epsilon(1e-12));

    // conditional independence given the admissible set forces 1.0
    const auto indep = dataset_of("S:0,1 D:a,b O:0,1",
                                  {{{"0", "a", "1"}, 2},
                                   {{"0", "a", "0"}, 2},
                                   {{"1", "a", "1"}, 3},
                                   {{"1", "a", "0"}, 3},
                                   {{"0", "b", "1"}, 1},
                                   {{"0", "b", "0"}, 3},
                                   {{"1", "b", "1"}, 2},
                                   {{"1", "b", "0"}, 6}});
    FairnessSpec spec;
    spec.sensitive = "S";
    spec.protected_label = "1";
    spec.outcome = "O";
    spec.positive_outcome = "1";
    spec.admissible_declared = true;
    spec.admissible = {"D"};
    CHECK(rod(indep, spec).value == doctest::Approx(1.0).epsilon(1e-12));

    // no comparable stratum is a fault
    const auto sparse = dataset_of("S:0,1 D:a,b O:0,1",
                                   {{{"0", "a", "1"}, 1}, {{"1", "b", "0"}, 1}});
    CHECK_THROWS_AS((void)rod(sparse, spec), Error);

    // admissible set must be declared
    auto undeclared = spec;
    undeclared.admissible_declared = false;
    CHECK_THROWS_AS((void)rod(indep, undeclared), Error);
}
