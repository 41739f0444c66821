#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "enrollrec/catalog.hpp"
#include "enrollrec/enrollment.hpp"
#include "enrollrec/error.hpp"
#include "test_util.hpp"

using namespace enrollrec;
using enrollrec::testing::make_record;
using enrollrec::testing::parse_string;
using enrollrec::testing::random_table;

namespace {

const std::string kHeader = "semester,student_id,major,entry_type,subject,course_number,grade\n";

Semester sem(int year, Term term) { return Semester{year, term}; }

}  // namespace

TEST_CASE("semester order is year then Spring < Summer < Fall") {
    CHECK(sem(2014, Term::Spring) < sem(2014, Term::Summer));
    CHECK(sem(2014, Term::Summer) < sem(2014, Term::Fall));
    CHECK(sem(2014, Term::Fall) < sem(2015, Term::Spring));
    CHECK(Semester::parse("Fall 2014") == sem(2014, Term::Fall));
    CHECK(Semester::parse("Fall 6") == sem(6, Term::Fall));
    CHECK(sem(2016, Term::Summer).to_string() == "Summer 2016");
    CHECK_THROWS_AS(Semester::parse("Winter 2014"), Error);

    std::mt19937 rng(3);
    for (int i = 0; i < 500; ++i) {
        Semester a = Semester::from_ordinal(static_cast<int>(rng() % 40));
        Semester b = Semester::from_ordinal(static_cast<int>(rng() % 40));
        Semester c = Semester::from_ordinal(static_cast<int>(rng() % 40));
        CHECK((a < b) == (a.ordinal() < b.ordinal()));
        if (a < b && b < c) CHECK(a < c);
        if (a < b) CHECK_FALSE(b < a);
        CHECK(Semester::from_ordinal(a.ordinal()) == a);
    }
}

TEST_CASE("parse_enrollments reads a sample row") {
    auto table = parse_string(kHeader + "Fall 2014,x282243,Math,Transfer Student,Math,121,A\n");
    REQUIRE(table.size() == 1);
    const auto& r = table.records[0];
    CHECK(r.semester == sem(2014, Term::Fall));
    CHECK(r.student == "x282243");
    CHECK(r.entry_type == EntryType::Transfer);
    CHECK(r.course == CourseKey{"Math", "121"});
    CHECK(r.grade == std::optional<std::string>("A"));
}

TEST_CASE("parse_enrollments edge cases") {
    SUBCASE("header only") { CHECK(parse_string(kHeader).empty()); }
    SUBCASE("unknown term reports its line") {
        std::string text = kHeader + "Fall 2014,a,Math,New Freshman,Math,1A,B\n" +
                           "Winter 2014,a,Math,New Freshman,Math,1B,B\n";
        try {
            parse_string(text);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("wrong field count") {
        CHECK_THROWS_AS(parse_string(kHeader + "Fall 2014,a,Math\n"), ParseError);
    }
    SUBCASE("bad header") { CHECK_THROWS_AS(parse_string("a,b,c\n"), ParseError); }
    SUBCASE("non-letter marks become missing") {
        auto t = parse_string(kHeader + "Fall 2014,a,Math,New Freshman,Math,1A,P\n" +
                              "Fall 2014,a,Math,New Freshman,Math,1B,W\n");
        CHECK_FALSE(t.records[0].grade.has_value());
        CHECK_FALSE(t.records[1].grade.has_value());
    }
    SUBCASE("duplicates are dropped and counted") {
        auto t = parse_string(kHeader + "Fall 2014,a,Math,New Freshman,Math,1A,A\n" +
                              "Fall 2014,a,Math,New Freshman,Math,1A,B\n" +
                              "Spring 2015,a,Math,New Freshman,Math,1A,B\n");
        CHECK(t.size() == 2);
        CHECK(t.duplicates_dropped == 1);
        CHECK(dataset_stats(t).duplicates_dropped == 1);
    }
    SUBCASE("quoted fields") {
        auto t = parse_string(kHeader + "Fall 2014,\"x,1\",\"Public Policy\",New Freshman,PP,C103,\n");
        CHECK(t.records[0].student == "x,1");
    }
}

TEST_CASE("csv round trip preserves the table") {
    auto table = random_table(11, 30, 12, 6);
    std::ostringstream out;
    write_enrollments(out, table);
    auto again = parse_string(out.str());
    CHECK(again.records == table.records);
}

TEST_CASE("filter_courses") {
    EnrollmentTable t;
    for (int i = 0; i < 9; ++i) t.records.push_back(make_record(sem(1, Term::Fall), "s" + std::to_string(i), "A", "1"));
    for (int i = 0; i < 10; ++i) t.records.push_back(make_record(sem(1, Term::Fall), "s" + std::to_string(i), "B", "2"));
    auto out = filter_courses(t, 10);
    CHECK(out.size() == 10);
    for (const auto& r : out.records) CHECK(r.course.subject == "B");
    CHECK(filter_courses(t, 1).records == t.records);
    CHECK_THROWS_AS(filter_courses(t, 0), Error);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto table = random_table(seed, 60, 40, 6);
        // brute-force count oracle
        std::map<CourseKey, int> counts;
        for (const auto& r : table.records) counts[r.course]++;
        std::vector<EnrollmentRecord> expected;
        for (const auto& r : table.records) {
            if (counts[r.course] >= 10) expected.push_back(r);
        }
        auto filtered = filter_courses(table, 10);
        CHECK(filtered.records == expected);
        CHECK(filter_courses(filtered, 10).records == filtered.records);
    }
}

TEST_CASE("filter_students bounds") {
    EnrollmentTable t;
    auto add = [&](const std::string& who, int n) {
        for (int i = 0; i < n; ++i) t.records.push_back(make_record(Semester::from_ordinal(10 + i), who, "A", "1"));
    };
    add("one", 1);
    add("twelve", 12);
    add("thirteen", 13);
    add("two", 2);
    auto out = filter_students(t);
    std::set<std::string> kept;
    for (const auto& r : out.records) kept.insert(r.student);
    CHECK(kept == std::set<std::string>{"twelve", "two"});
    CHECK(filter_students(out).records == out.records);
    CHECK_THROWS_AS(filter_students(t, 3, 2), Error);
}

TEST_CASE("serialize_sequences respects semester order") {
    CourseVocabulary vocab({{"X", "A"}, {"X", "B"}, {"X", "C"}});
    EnrollmentTable t;
    t.records.push_back(make_record(sem(1, Term::Fall), "s", "X", "A"));
    t.records.push_back(make_record(sem(1, Term::Fall), "s", "X", "B"));
    t.records.push_back(make_record(sem(2, Term::Spring), "s", "X", "C"));
    auto histories = build_histories(t, vocab);
    std::set<std::vector<std::size_t>> seen;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto seq = serialize_sequences(histories, seed).at(0);
        CHECK(seq.tokens.size() == 3);
        CHECK(seq.tokens[2] == 2);
        CHECK(seq.semester_index == std::vector<std::size_t>{0, 0, 1});
        seen.insert(seq.tokens);
    }
    CHECK(seen == std::set<std::vector<std::size_t>>{{0, 1, 2}, {1, 0, 2}});

    SUBCASE("single-course semesters keep semester order") {
        EnrollmentTable u;
        u.records.push_back(make_record(sem(2, Term::Spring), "s", "X", "A"));
        u.records.push_back(make_record(sem(1, Term::Fall), "s", "X", "C"));
        u.records.push_back(make_record(sem(1, Term::Summer), "s", "X", "B"));
        auto seq = serialize_sequences(build_histories(u, vocab), 9).at(0);
        CHECK(seq.tokens == std::vector<std::size_t>{1, 2, 0});
    }
}

TEST_CASE("serialize_sequences is deterministic and length-preserving") {
    auto table = random_table(5, 80, 30, 8);
    auto vocab = CourseVocabulary::from_table(table);
    auto histories = build_histories(table, vocab);
    auto a = serialize_sequences(histories, 42);
    auto b = serialize_sequences(histories, 42);
    REQUIRE(a.size() == histories.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].tokens == b[i].tokens);
        CHECK(a[i].tokens.size() == histories[i].enrollment_count());
        // each semester's slice is a permutation of its course set
        for (std::size_t s = 0; s < histories[i].semesters.size(); ++s) {
            std::vector<std::size_t> slice;
            for (std::size_t p = 0; p < a[i].tokens.size(); ++p) {
                if (a[i].semester_index[p] == s) slice.push_back(a[i].tokens[p]);
            }
            std::sort(slice.begin(), slice.end());
            CHECK(slice == histories[i].semesters[s].courses);
        }
        CHECK(std::is_sorted(a[i].semester_index.begin(), a[i].semester_index.end()));
    }
}

TEST_CASE("split_by_semester") {
    EnrollmentTable t;
    int ord = 0;
    for (Semester s = sem(2008, Term::Fall); s <= sem(2017, Term::Spring); s = s.next()) {
        t.records.push_back(make_record(s, "s" + std::to_string(ord++ % 7), "A", "1"));
    }
    auto split = split_by_semester(t, sem(2015, Term::Fall), sem(2016, Term::Fall));
    auto last = [](const EnrollmentTable& table) {
        Semester m = table.records.front().semester;
        for (const auto& r : table.records) m = std::max(m, r.semester);
        return m;
    };
    CHECK(last(split.sub_training) == sem(2015, Term::Summer));
    CHECK(last(split.full_training()) == sem(2016, Term::Summer));
    CHECK(split.test_semester.size() == 1);
    CHECK(split.later.size() == 1);

    CHECK_THROWS_AS(split_by_semester(t, sem(2016, Term::Fall), sem(2016, Term::Fall)), Error);
    CHECK_THROWS_AS(split_by_semester(t, sem(2008, Term::Fall), sem(2016, Term::Fall)), Error);

    SUBCASE("six-semester table partitions like a brute-force filter") {
        auto table = random_table(8, 50, 20, 6);
        Semester v = Semester::from_ordinal(3 + 4);
        Semester te = Semester::from_ordinal(3 + 5);
        auto p = split_by_semester(table, v, te);
        std::size_t before = 0, at_v = 0, at_t = 0;
        for (const auto& r : table.records) {
            if (r.semester.ordinal() < v.ordinal()) ++before;
            if (r.semester.ordinal() == v.ordinal()) ++at_v;
            if (r.semester.ordinal() == te.ordinal()) ++at_t;
        }
        CHECK(p.sub_training.size() == before);
        CHECK(p.validation_semester.size() == at_v);
        CHECK(p.test_semester.size() == at_t);
        CHECK(p.between.size() == 0);
        CHECK(p.sub_training.size() + p.validation_semester.size() + p.between.size() +
                  p.test_semester.size() + p.later.size() ==
              table.size());
    }
}

TEST_CASE("compute_gpa") {
    CourseVocabulary vocab({{"X", "1"}, {"X", "2"}});
    EnrollmentTable t;
    t.records.push_back(make_record(sem(1, Term::Fall), "s", "X", "1", "M", "B"));
    t.records.push_back(make_record(sem(1, Term::Fall), "s", "X", "2", "M", "A"));
    t.records.push_back(make_record(sem(2, Term::Spring), "s", "X", "1", "M", "A"));
    t.records.push_back(make_record(sem(2, Term::Spring), "s", "X", "2", "M", "A"));
    t.records.push_back(make_record(sem(2, Term::Fall), "s", "X", "1", "M"));
    auto h = build_histories(t, vocab).at(0);
    CHECK(compute_gpa(h, sem(1, Term::Fall)).value() == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(compute_gpa(h, sem(2, Term::Spring)).value() == 4.0);
    CHECK_FALSE(compute_gpa(h, sem(2, Term::Fall)).has_value());
    CHECK_FALSE(h.semesters[2].gpa.has_value());
    CHECK(h.semesters[0].gpa.value() == 3.5);
}

TEST_CASE("dataset_stats") {
    SUBCASE("empty") {
        auto s = dataset_stats(EnrollmentTable{});
        CHECK(s.record_count == 0);
        CHECK(s.enrollment_histogram.empty());
        CHECK(s.active_students.empty());
    }
    SUBCASE("single record") {
        EnrollmentTable t;
        t.records.push_back(make_record(sem(1, Term::Fall), "s", "X", "1"));
        auto s = dataset_stats(t);
        CHECK(s.enrollment_histogram == std::map<std::size_t, std::size_t>{{1, 1}});
        CHECK(s.active_students.at(sem(1, Term::Fall)) == 1);
    }
    SUBCASE("group-by oracle") {
        auto table = random_table(21, 70, 25, 7);
        auto s = dataset_stats(table);
        std::map<std::string, int> per_course;
        std::map<int, std::set<std::string>> per_sem;
        for (const auto& r : table.records) {
            per_course[r.course.to_string()]++;
            per_sem[r.semester.ordinal()].insert(r.student);
        }
        std::size_t reconciled = 0;
        for (const auto& [n, courses] : s.enrollment_histogram) reconciled += n * courses;
        CHECK(reconciled == table.size());
        for (const auto& [course, n] : s.course_enrollments) {
            CHECK(per_course[course.to_string()] == static_cast<int>(n));
        }
        for (const auto& [semester, n] : s.active_students) {
            CHECK(per_sem[semester.ordinal()].size() == n);
        }
    }
}

TEST_CASE("catalog and list csv formats") {
    std::string catalog_csv =
        "subject,course_number,title,description,department,division,college,capacity\n"
        "Econ,1,Intro,\"Supply, demand\",Economics,Social Sciences,L&S,300\n"
        "Econ,1X,Intro,\"Supply, demand\",Economics,Social Sciences,L&S,30\n";
    std::istringstream in(catalog_csv);
    auto catalog = parse_catalog(in);
    REQUIRE(catalog.entries().size() == 2);
    CHECK(catalog.find({"Econ", "1"})->description == "Supply, demand");
    CHECK(catalog.find({"Econ", "1"})->capacity == 300);
    std::ostringstream out;
    write_catalog(out, catalog);
    std::istringstream again(out.str());
    CHECK(parse_catalog(again).entries() == catalog.entries());

    std::istringstream eq("subject_a,number_a,subject_b,number_b\nEcon,1,Econ,1X\nEcon,1,Stat,2\n");
    auto pairs = parse_equivalencies(eq);
    CHECK(pairs.size() == 2);
    auto kept = drop_cross_listed(pairs, catalog);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].second == CourseKey{"Stat", "2"});

    std::istringstream list("subject,course_number\nEcon,1\n");
    CHECK(parse_course_list(list) == std::vector<CourseKey>{{"Econ", "1"}});
    CHECK(CourseKey::parse("Public Policy C103") == CourseKey{"Public Policy", "C103"});
}
