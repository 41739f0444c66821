#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "enrollrec/error.hpp"
#include "enrollrec/query.hpp"

using namespace enrollrec;

namespace {

using Index = std::vector<std::size_t>;

struct Toy {
    CourseVocabulary vocab;
    Catalog catalog;
    QueryContext ctx;

    Toy() {
        // 0 Econ 1, 1 Econ 10, 2 Econ 2, 3 Math 5, 4 Stat 7, 5 Stat C20
        vocab = CourseVocabulary({{"Econ", "1"}, {"Econ", "10"}, {"Econ", "2"}, {"Math", "5"}, {"Stat", "7"},
                                  {"Stat", "C20"}});
        std::vector<CatalogEntry> entries;
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            CatalogEntry e;
            e.course = vocab.key(i);
            e.department = vocab.key(i).subject == "Econ" ? "Economics" : "Mathematics";
            e.capacity = static_cast<long>(10 * i);
            entries.push_back(e);
        }
        catalog = Catalog(entries);
        ctx.vocab = &vocab;
        ctx.catalog = &catalog;
        ctx.offered = {0, 1, 3, 5};
        ctx.equivalencies = {{0, 4}, {4, 5}};
        ctx.requirement_lists["core"] = {1, 2, 3};
        ctx.registrar_list = {2, 5};
        ctx.enrollment = {{1, 10}, {2, 5}, {5, 60}};
    }
};

Index all_courses(std::size_t n) {
    Index v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

EmbeddingSpace toy_space() {
    RowMatrix m(4, 2);
    m << 0, 0, 1, 0, 3, 0, 10, 0;
    return EmbeddingSpace(m, {"A", "A", "B", "B"});
}

}  // namespace

TEST_CASE("filters: individual semantics") {
    Toy t;
    auto all = all_courses(6);
    std::set<std::size_t> taken{0};
    CHECK(apply_filters(all, {}, t.ctx, taken) == all);
    CHECK(apply_filters(all, {{FilterKind::Offered, ""}}, t.ctx, taken) == Index{0, 1, 3, 5});
    CHECK(apply_filters(all, {{FilterKind::NotTaken, ""}}, t.ctx, taken) == Index{1, 2, 3, 4, 5});
    // taken X=0, pair (0,4) -> 4 restricted; (4,5) is not followed transitively
    CHECK(apply_filters(all, {{FilterKind::NoCreditRestriction, ""}}, t.ctx, taken) == Index{0, 1, 2, 3, 5});
    // the pair is symmetric
    CHECK(apply_filters(all, {{FilterKind::NoCreditRestriction, ""}}, t.ctx, {5}) == Index{0, 1, 2, 3, 5});
    CHECK(apply_filters(all, {{FilterKind::Department, "Economics"}}, t.ctx, taken) == Index{0, 1, 2});
    CHECK(apply_filters(all, {{FilterKind::RequirementList, "core"}}, t.ctx, taken) == Index{1, 2, 3});
    CHECK(apply_filters(all, {{FilterKind::RegistrarList, ""}}, t.ctx, taken) == Index{2, 5});
    // capacity 10*i; enrollment 1:10 2:5 5:60
    CHECK(apply_filters(all, {{FilterKind::OpenSeats, ""}}, t.ctx, taken) == Index{2, 3, 4});

    try {
        apply_filters(all, {{FilterKind::Department, "Physics"}}, t.ctx, taken);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("Economics, Mathematics") != std::string::npos);
    }
    try {
        apply_filters(all, {{FilterKind::RequirementList, "nope"}}, t.ctx, taken);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("core") != std::string::npos);
    }
}

TEST_CASE("filters: conjunction equals intersection and is order independent") {
    Toy t;
    auto all = all_courses(6);
    std::vector<Filter> pool{{FilterKind::Offered, ""},       {FilterKind::NotTaken, ""},
                             {FilterKind::NoCreditRestriction, ""}, {FilterKind::Department, "Economics"},
                             {FilterKind::RequirementList, "core"}, {FilterKind::OpenSeats, ""},
                             {FilterKind::RegistrarList, ""}};
    std::set<std::size_t> taken{0, 3};
    std::mt19937_64 rng(4);
    for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
        std::vector<Filter> chosen;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (mask & (1u << i)) chosen.push_back(pool[i]);
        }
        std::set<std::size_t> expected(all.begin(), all.end());
        for (const auto& f : chosen) {
            auto one = apply_filters(all, {f}, t.ctx, taken);
            std::set<std::size_t> keep(one.begin(), one.end());
            std::set<std::size_t> next;
            std::set_intersection(expected.begin(), expected.end(), keep.begin(), keep.end(),
                                  std::inserter(next, next.begin()));
            expected = next;
        }
        auto got = apply_filters(all, chosen, t.ctx, taken);
        CHECK(got == Index(expected.begin(), expected.end()));
        std::shuffle(chosen.begin(), chosen.end(), rng);
        CHECK(apply_filters(all, chosen, t.ctx, taken) == got);
    }
}

TEST_CASE("preference score: endpoints, symmetry, brute force") {
    auto space = toy_space();
    auto all = all_courses(4);
    std::vector<double> a{0, 0}, b{10, 0};
    auto s = preference_scores(space, all, a, b);
    CHECK(s[0] == 1.0);   // on the interest centroid, farthest from disinterest
    CHECK(s[3] == -1.0);
    std::vector<double> mid{5, 0};
    // equal normalized distances to both -> 0
    auto sym = preference_scores(space, Index{0, 3}, a, b);
    CHECK(sym[0] == 1.0);
    auto same = preference_scores(space, all, mid, mid);
    for (double x : same) CHECK(x == 0.0);

    // brute force on centroids from subjects
    auto ca = subject_centroid(space, "A"), cb = subject_centroid(space, "B");
    auto got = preference_scores(space, all, ca, cb);
    std::vector<double> da, db;
    for (std::size_t i = 0; i < 4; ++i) {
        double x = space.vector(i)[0];
        da.push_back(std::abs(x - 0.5));
        db.push_back(std::abs(x - 6.5));
    }
    auto norm = [](std::vector<double> v) {
        double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
        for (auto& x : v) x = (x - lo) / (hi - lo);
        return v;
    };
    auto na = norm(da), nb = norm(db);
    for (std::size_t i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(-na[i] + nb[i]));
    CHECK(preference_scores(space, all, std::nullopt, std::nullopt) == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(preference_scores(space, Index{}, a, b), Error);
}

TEST_CASE("natural course-number order") {
    CHECK(natural_less("2", "10"));
    CHECK(!natural_less("10", "2"));
    CHECK(natural_less("C20", "C103"));
    CHECK(natural_less("1", "1A"));
    CHECK(natural_less("99", "C1"));
    CHECK(!natural_less("5", "5"));
    CHECK(natural_less("05", "5"));  // tie on value broken lexically
}

TEST_CASE("ranking: alphabetical default, collaborative passthrough, score composition") {
    Toy t;
    auto all = all_courses(6);
    QuerySpec none;
    auto alpha = rank_courses(all, none, t.ctx, nullptr);
    Index order;
    for (const auto& s : alpha) order.push_back(s.course);
    // Economics: 1, 2, 10 ; Mathematics: Math 5, Stat 7, Stat C20
    CHECK(order == Index{0, 2, 1, 3, 4, 5});

    std::vector<double> rnn{0.1, 0.3, 0.05, 0.3, 0.2, 0.05};
    QuerySpec collab;
    collab.use_collaborative = true;
    auto ranked = rank_courses(all, collab, t.ctx, nullptr, rnn);
    order.clear();
    for (const auto& s : ranked) order.push_back(s.course);
    CHECK(order == Index{1, 3, 4, 0, 2, 5});
    CHECK(ranked.front().collaborative == 1.0);
    CHECK(ranked.back().collaborative == 0.0);
    CHECK_THROWS_AS(rank_courses(all, collab, t.ctx, nullptr), Error);

    // argsort invariance: raw probabilities vs normalized term, on random data
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> p(6);
        for (auto& x : p) x = u(rng);
        collab.collaborative_weight = 0.1 + u(rng);
        auto r = rank_courses(all, collab, t.ctx, nullptr, p);
        Index expect = all;
        std::stable_sort(expect.begin(), expect.end(), [&](auto x, auto y) { return p[x] > p[y]; });
        Index got;
        for (const auto& s : r) got.push_back(s.course);
        CHECK(got == expect);
    }

    // blended score equals its components
    RowMatrix m(6, 2);
    m << 0, 0, 1, 1, 2, 0, 5, 5, 9, 1, 9, 9;
    EmbeddingSpace space(m, {"Econ", "Econ", "Econ", "Math", "Stat", "Stat"});
    QuerySpec full;
    full.interest = "Econ";
    full.disinterest = "Stat";
    full.use_collaborative = true;
    full.collaborative_weight = 0.7;
    auto blend = rank_courses(all, full, t.ctx, &space, rnn);
    for (std::size_t i = 0; i < blend.size(); ++i) {
        const auto& s = blend[i];
        CHECK(s.score == -s.interest_distance + s.disinterest_distance + 0.7 * s.collaborative);
        if (i) CHECK(blend[i - 1].score >= s.score);
    }
    QuerySpec bad;
    bad.interest = "Physics";
    CHECK_THROWS_AS(rank_courses(all, bad, t.ctx, &space), NotFoundError);
}

TEST_CASE("swapping interest and disinterest reverses the preference ranking") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 30;
    RowMatrix m(n, 4);
    std::vector<std::string> subjects;
    std::vector<CourseKey> keys;
    for (std::size_t i = 0; i < n; ++i) {
        subjects.push_back("S" + std::to_string(i % 3));
        keys.push_back({subjects.back(), std::to_string(i)});
        for (int k = 0; k < 4; ++k) m(static_cast<Eigen::Index>(i), k) = g(rng) + (i % 3 == 0 ? 3.0 : 0.0);
    }
    EmbeddingSpace space(m, subjects);
    CourseVocabulary vocab(keys);
    QueryContext ctx;
    ctx.vocab = &vocab;
    QuerySpec ab, ba;
    ab.interest = ba.disinterest = "S0";
    ab.disinterest = ba.interest = "S1";
    auto r1 = run_query(ab, ctx, &space, {}, {}, n);
    auto r2 = run_query(ba, ctx, &space, {}, {}, n);
    REQUIRE(r1.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(r1[i].course == r2[n - 1 - i].course);
        CHECK(r1[i].score == -r2[n - 1 - i].score);
    }
    // interest cluster on top
    for (std::size_t i = 0; i < 8; ++i) CHECK(space.subject(r1[i].course) == "S0");
    CHECK(run_query(ab, ctx, &space, {}, {}, 5).size() == 5);
    CHECK_THROWS_AS(run_query(ab, ctx, &space, {}, {}, 0), Error);
}

TEST_CASE("query spec json") {
    auto spec = query_spec_from_json(nlohmann::json::parse(
        R"({"use_collaborative":true,"interest":"Public Policy","disinterest":"Statistics",
            "filters":{"department":"Economics","offered":true,"open_seats":false}})"));
    CHECK(spec.interest == "Public Policy");
    CHECK(spec.use_collaborative);
    CHECK(spec.collaborative_weight == 1.0);
    REQUIRE(spec.filters.size() == 2);
    auto round = query_spec_from_json(to_json(spec));
    CHECK(round.filters == spec.filters);
    CHECK(round.interest == spec.interest);
    try {
        query_spec_from_json(nlohmann::json::parse(R"({"filters":{"seats":true}})"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("registrar_list") != std::string::npos);
    }
    CHECK_THROWS_AS(query_spec_from_json(nlohmann::json::parse(R"({"collaborative_weight":-1})")), Error);
    CHECK_THROWS_AS(query_spec_from_json(nlohmann::json::parse(R"({"filters":{"department":true}})")), Error);
    CHECK_THROWS_AS(query_spec_from_json(nlohmann::json::parse("[]")), Error);
}
