#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "enrollrec/embedding_space.hpp"
#include "enrollrec/error.hpp"
#include "enrollrec/skipgram.hpp"

using namespace enrollrec;

namespace {

SerializedSequence seq(std::vector<std::size_t> tokens) {
    SerializedSequence s;
    s.student = "s";
    s.tokens = std::move(tokens);
    return s;
}

std::vector<std::string> names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("T" + std::to_string(i));
    return out;
}

SkipGramConfig small_config(std::size_t d, std::uint64_t seed = 7) {
    SkipGramConfig c;
    c.dimension = d;
    c.seed = seed;
    return c;
}

std::vector<SerializedSequence> random_sequences(std::uint64_t seed, std::size_t vocab, std::size_t count) {
    std::mt19937_64 rng(seed);
    std::vector<SerializedSequence> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::size_t> toks(1 + rng() % 6);
        for (auto& t : toks) t = rng() % vocab;
        out.push_back(seq(toks));
    }
    return out;
}

}  // namespace

TEST_CASE("skipgram forward: zero weights give a uniform distribution") {
    SkipGramModel m;
    m.input = RowMatrix::Zero(5, 3);
    m.output = RowMatrix::Zero(5, 3);
    m.tokens = names(5);
    m.config = small_config(3);
    auto p = skipgram_forward(m, 2);
    for (double x : p) CHECK(x == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("skipgram forward: hand-computed softmax with three tokens") {
    SkipGramModel m;
    m.config = small_config(2);
    m.tokens = names(3);
    m.input = RowMatrix(3, 2);
    m.input << 1.0, 2.0, 0.0, 0.0, 0.0, 0.0;
    m.output = RowMatrix(3, 2);
    m.output << 1.0, 0.0, 0.0, 1.0, -1.0, 1.0;
    // scores for input 0: 1, 2, 1
    const double e1 = std::exp(1.0), e2 = std::exp(2.0);
    const double z = 2 * e1 + e2;
    auto p = skipgram_forward(m, 0);
    CHECK(p[0] == doctest::Approx(e1 / z).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(e2 / z).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(e1 / z).epsilon(1e-12));
    CHECK_THROWS_AS(skipgram_forward(m, 3), NotFoundError);
}

TEST_CASE("skipgram forward sums to one and is strictly positive for random weights") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
        SkipGramModel m;
        m.config = small_config(5);
        m.tokens = names(9);
        m.input = RowMatrix(9, 5);
        m.output = RowMatrix(9, 5);
        for (Eigen::Index i = 0; i < m.input.size(); ++i) {
            m.input.data()[i] = g(rng);
            m.output.data()[i] = g(rng);
        }
        for (std::size_t w = 0; w < 9; ++w) {
            auto p = skipgram_forward(m, w);
            double sum = std::accumulate(p.begin(), p.end(), 0.0);
            CHECK(std::abs(sum - 1.0) <= 1e-9);
            for (double x : p) CHECK(x > 0.0);
        }
    }
}

TEST_CASE("skipgram objective: window truncation and ln|V| at zero output weights") {
    auto m = init_skipgram(names(6), small_config(4));
    // sequence of length 3, window 2: positions have 2, 2, 2 contexts -> 6 pairs, /T=3
    std::vector<SerializedSequence> one{seq({0, 1, 2})};
    CHECK(skipgram_objective(m, one) == doctest::Approx(6.0 * std::log(6.0) / 3.0).epsilon(1e-12));
    // length 5: contexts 2,3,4,3,2 = 14 pairs
    std::vector<SerializedSequence> five{seq({0, 1, 2, 3, 4})};
    CHECK(skipgram_objective(m, five) == doctest::Approx(14.0 * std::log(6.0) / 5.0).epsilon(1e-12));
    // single token contributes nothing
    std::vector<SerializedSequence> single{seq({3})};
    CHECK(skipgram_objective(m, single) == 0.0);
}

TEST_CASE("skipgram analytic gradient agrees with central differences") {
    auto m = init_skipgram(names(6), small_config(4, 11));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (Eigen::Index i = 0; i < m.output.size(); ++i) m.output.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < m.input.size(); ++i) m.input.data()[i] = u(rng);
    auto seqs = random_sequences(9, 6, 8);
    CHECK(skipgram_gradient_check(m, seqs) < 1e-4);

    // Objective value from the gradient routine matches the plain objective.
    auto og = skipgram_objective_gradient(m, seqs);
    CHECK(og.loss == doctest::Approx(skipgram_objective(m, seqs)).epsilon(1e-12));

    // Negative control: a perturbed analytic gradient would be detected.
    SkipGramModel probe = m;
    const double h = 1e-5;
    probe.output(2, 1) += h;
    double up = skipgram_objective(probe, seqs);
    probe.output(2, 1) -= 2 * h;
    double down = skipgram_objective(probe, seqs);
    double numeric = (up - down) / (2 * h);
    double wrong = og.grad_output(2, 1) * 1.01 + 1e-3;
    CHECK(std::abs(wrong - numeric) / std::max({std::abs(wrong), std::abs(numeric), 1e-4}) > 1e-4);
}

TEST_CASE("skipgram training: initial loss equals ln|V| per pair and decreases") {
    auto seqs = random_sequences(21, 10, 60);
    auto config = small_config(8);
    auto r = train_skipgram(seqs, names(10), config);
    double expected = 0.0;
    for (const auto& s : seqs) {
        std::size_t n = s.tokens.size(), pairs = 0;
        for (std::size_t t = 0; t < n; ++t) {
            std::size_t lo = t >= 2 ? t - 2 : 0, hi = std::min(n - 1, t + 2);
            pairs += hi - lo;
        }
        expected += static_cast<double>(pairs) * std::log(10.0) / static_cast<double>(n);
    }
    expected /= static_cast<double>(seqs.size());
    CHECK(r.initial_loss == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.final_loss < r.initial_loss);
    CHECK(r.epoch_loss.size() == 5);
    CHECK(r.model.input.allFinite());
    CHECK(r.model.output.allFinite());
}

TEST_CASE("skipgram training: tokens with identical contexts end up close") {
    // Tokens 1 and 2 always appear between 0 and 3; others form a separate group.
    std::vector<SerializedSequence> seqs;
    for (int i = 0; i < 40; ++i) {
        seqs.push_back(seq({0, 1, 3}));
        seqs.push_back(seq({0, 2, 3}));
        seqs.push_back(seq({4, 5, 6, 7}));
        seqs.push_back(seq({7, 6, 5, 4}));
    }
    auto config = small_config(10, 3);
    config.epochs = 20;
    auto r = train_skipgram(seqs, names(8), config);
    auto v1 = row_span(r.model.input, 1), v2 = row_span(r.model.input, 2);
    CHECK(cosine(v1, v2) >= 0.9);
}

TEST_CASE("skipgram training: degenerate and invalid inputs") {
    std::vector<SerializedSequence> singles{seq({0}), seq({1})};
    auto r = train_skipgram(singles, names(3), small_config(4));
    CHECK(r.training_pairs == 0);
    REQUIRE(r.warnings.size() == 1);
    auto init = init_skipgram(names(3), small_config(4));
    CHECK(r.model.input == init.input);
    CHECK(r.model.output == init.output);

    CHECK_THROWS_AS(train_skipgram({}, names(3), small_config(4)), Error);
    CHECK_THROWS_AS(train_skipgram({seq({0, 5})}, names(3), small_config(4)), Error);
    SkipGramConfig bad = small_config(0);
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = small_config(4);
    bad.window = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = small_config(4);
    bad.initial_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("skipgram training is deterministic for a seed") {
    auto seqs = random_sequences(4, 12, 50);
    for (auto objective : {SkipGramObjective::FullSoftmax, SkipGramObjective::NegativeSampling}) {
        auto config = small_config(6, 99);
        config.objective = objective;
        auto a = train_skipgram(seqs, names(12), config);
        auto b = train_skipgram(seqs, names(12), config);
        CHECK(a.model.input == b.model.input);
        CHECK(a.model.output == b.model.output);
        config.seed = 100;
        auto c = train_skipgram(seqs, names(12), config);
        CHECK(!(a.model.input == c.model.input));
    }
}

TEST_CASE("negative sampling training reduces the full-softmax objective") {
    auto seqs = random_sequences(8, 10, 80);
    auto config = small_config(8, 2);
    config.objective = SkipGramObjective::NegativeSampling;
    auto r = train_skipgram(seqs, names(10), config);
    auto init = init_skipgram(names(10), config);
    CHECK(r.model.input.allFinite());
    CHECK(skipgram_objective(r.model, seqs) < skipgram_objective(init, seqs));
}

TEST_CASE("skipgram config json round trip") {
    SkipGramConfig c = small_config(17, 5);
    c.window = 3;
    c.objective = SkipGramObjective::NegativeSampling;
    c.negatives = 7;
    auto back = skipgram_config_from_json(to_json(c));
    CHECK(back.dimension == 17);
    CHECK(back.window == 3);
    CHECK(back.seed == 5);
    CHECK(back.objective == SkipGramObjective::NegativeSampling);
    CHECK(back.negatives == 7);
    CHECK_THROWS_AS(skipgram_config_from_json({{"objective", "hierarchical"}}), Error);
}

TEST_CASE("word2vec export and import") {
    SkipGramModel m;
    m.config = small_config(3);
    m.tokens = {"Econ:101", "Public Policy:C103"};
    m.input = RowMatrix(2, 3);
    m.input << 0.1, -0.25, 1.0 / 3.0, 2.0, 0.0, -1e-7;
    m.output = RowMatrix::Zero(2, 3);
    std::string text = export_embeddings(m, EmbeddingSide::Input);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.rfind("2 3\n", 0) == 0);
    CHECK(text.find("Public_Policy:C103 2.000000 0.000000 -0.000000") != std::string::npos);
    std::istringstream in(text);
    auto imported = import_embeddings(in);
    REQUIRE(imported.tokens.size() == 2);
    CHECK(imported.tokens[0] == "Econ:101");
    CHECK(imported.tokens[1] == "Public_Policy:C103");
    CHECK((imported.vectors - m.input).cwiseAbs().maxCoeff() <= 5e-7);

    SkipGramModel empty;
    empty.config = small_config(4);
    empty.input = RowMatrix::Zero(0, 4);
    empty.output = RowMatrix::Zero(0, 4);
    CHECK(export_embeddings(empty, EmbeddingSide::Output) == "0 4\n");

    std::istringstream truncated("2 3\nA 1 2 3\nB 1 2\n");
    CHECK_THROWS_AS(import_embeddings(truncated), Error);
    CHECK(course_token(CourseKey{"Public Policy", "C103"}) == "Public_Policy:C103");
}

TEST_CASE("skipgram container save/load") {
    auto seqs = random_sequences(2, 5, 10);
    auto r = train_skipgram(seqs, names(5), small_config(3));
    std::stringstream buf;
    save_skipgram(buf, r.model);
    std::string bytes = buf.str();
    std::istringstream in(bytes);
    auto loaded = load_skipgram(in);
    CHECK(loaded.tokens == r.model.tokens);
    CHECK(loaded.config.dimension == 3);
    CHECK((loaded.input - r.model.input).cwiseAbs().maxCoeff() <= 1e-6);

    // Shape mismatch: claim a different dimension in the manifest.
    SkipGramModel wrong = r.model;
    wrong.config.dimension = 4;
    std::stringstream buf2;
    save_skipgram(buf2, wrong);
    std::istringstream in2(buf2.str());
    CHECK_THROWS_AS(load_skipgram(in2), Error);

    std::istringstream garbage("nope");
    CHECK_THROWS_AS(load_skipgram(garbage), Error);
    std::istringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_skipgram(cut), Error);
}

TEST_CASE("cosine") {
    std::vector<double> a{1, 0}, b{1, 1}, c{0, 1}, z{0, 0}, three{1, 2, 3};
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK(cosine(a, c) == 0.0);
    CHECK(cosine(a, b) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
    CHECK(cosine(a, z) == 0.0);
    CHECK_THROWS_AS(cosine(a, three), Error);
}

namespace {

EmbeddingSpace toy_space() {
    RowMatrix v(5, 2);
    v << 1, 0, 0.9, 0.1, 0, 1, -1, 0, 1, 0;
    return EmbeddingSpace(v, {"Econ", "Econ", "Stat", "Stat", "Math"});
}

}  // namespace

TEST_CASE("nearest neighbors") {
    auto space = toy_space();
    auto nn = nearest_neighbors(space, 0, 1);
    REQUIRE(nn.size() == 1);
    CHECK(nn[0].course == 4);
    CHECK(nn[0].similarity == doctest::Approx(1.0));
    CHECK(nearest_neighbors(space, 0, 100).size() == 4);
    CHECK_THROWS_AS(nearest_neighbors(space, 9, 1), NotFoundError);
    CHECK_THROWS_AS(nearest_neighbors(space, 0, 0), Error);

    // brute-force oracle on random spaces, and invariance to storage order
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        RowMatrix v(12, 3);
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = std::round(g(rng) * 2) / 2;
        std::vector<std::string> subj(12, "X");
        EmbeddingSpace s(v, subj);
        auto got = nearest_neighbors(s, 3, 5);
        std::vector<std::pair<double, std::size_t>> brute;
        for (std::size_t i = 0; i < 12; ++i) {
            if (i == 3) continue;
            brute.push_back({-cosine(row_span(v, 3), row_span(v, static_cast<Eigen::Index>(i))), i});
        }
        std::sort(brute.begin(), brute.end());
        for (std::size_t k = 0; k < 5; ++k) CHECK(got[k].course == brute[k].second);

        std::vector<std::size_t> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        RowMatrix pv(12, 3);
        for (std::size_t i = 0; i < 12; ++i) pv.row(static_cast<Eigen::Index>(perm[i])) = v.row(static_cast<Eigen::Index>(i));
        EmbeddingSpace ps(pv, subj);
        auto pgot = nearest_neighbors(ps, perm[3], 11);
        auto full = nearest_neighbors(s, 3, 11);
        for (std::size_t k = 0; k < 11; ++k) {
            CHECK(pgot[k].similarity == doctest::Approx(full[k].similarity).epsilon(1e-12));
        }
    }
}

TEST_CASE("subject centroid") {
    auto space = toy_space();
    auto m = subject_centroid(space, "Math");
    CHECK(m == std::vector<double>{1, 0});
    auto s = subject_centroid(space, "Stat");
    CHECK(s[0] == doctest::Approx(-0.5));
    CHECK(s[1] == doctest::Approx(0.5));
    RowMatrix v(4, 2);
    v << 1, 2, -1, -2, 3, 3, 0, 6;
    EmbeddingSpace opp(v, {"A", "A", "B", "B"});
    CHECK(subject_centroid(opp, "A") == std::vector<double>{0, 0});
    RowMatrix w(3, 2);
    w << 1, 2, 4, 0, 1, 1;
    EmbeddingSpace three(w, {"C", "C", "C"});
    auto c = subject_centroid(three, "C");
    CHECK(c[0] == doctest::Approx(2.0));
    CHECK(c[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(subject_centroid(space, "History"), NotFoundError);
}

TEST_CASE("embedding space rejects non-finite vectors and mismatched subjects") {
    RowMatrix v(2, 2);
    v << 1, std::nan(""), 0, 1;
    CHECK_THROWS_AS(EmbeddingSpace(v, {"A", "B"}), Error);
    RowMatrix ok = RowMatrix::Ones(2, 2);
    CHECK_THROWS_AS(EmbeddingSpace(ok, {"A"}), Error);
}

TEST_CASE("equivalency rank eval") {
    auto space = toy_space();
    std::vector<std::size_t> all{0, 1, 2, 3, 4};
    // 0 -> 4 unique nearest (cos 1), 4 -> 0 also 1.0 but ties with none
    auto stats = equivalency_rank_eval(embedding_similarity(space), {{0, 4}}, all);
    REQUIRE(stats.ranks.size() == 2);
    CHECK(stats.ranks[0] == 1);
    CHECK(stats.ranks[1] == 1);

    // pair with a missing representation is skipped
    SimilaritySource partial = embedding_similarity(space);
    partial.has_representation = [](std::size_t c) { return c != 2; };
    auto skip = equivalency_rank_eval(partial, {{0, 1}, {2, 3}}, all);
    CHECK(skip.skipped.size() == 1);
    CHECK(skip.ranks.size() == 2);

    // brute-force oracle over random spaces with planted duplicate pairs
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 30;
        RowMatrix v(n, 4);
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (int p = 0; p < 5; ++p) {
            std::size_t a = static_cast<std::size_t>(2 * p), b = static_cast<std::size_t>(2 * p + 1);
            v.row(static_cast<Eigen::Index>(b)) = v.row(static_cast<Eigen::Index>(a)) * 0.8;
            for (int k = 0; k < 4; ++k) v(static_cast<Eigen::Index>(b), k) += 0.3 * g(rng);
            pairs.emplace_back(a, b);
        }
        EmbeddingSpace s(v, std::vector<std::string>(n, "X"));
        std::vector<std::size_t> cands(n);
        std::iota(cands.begin(), cands.end(), 0);
        auto got = equivalency_rank_eval(embedding_similarity(s), pairs, cands);

        std::vector<std::size_t> expect;
        for (auto [a, b] : pairs) {
            for (auto [q, t] : {std::pair{a, b}, std::pair{b, a}}) {
                std::vector<std::pair<double, std::size_t>> order;
                for (std::size_t c = 0; c < static_cast<std::size_t>(n); ++c) {
                    if (c == q) continue;
                    order.push_back({-cosine(row_span(v, static_cast<Eigen::Index>(q)),
                                             row_span(v, static_cast<Eigen::Index>(c))),
                                     c});
                }
                std::sort(order.begin(), order.end());
                for (std::size_t r = 0; r < order.size(); ++r) {
                    if (order[r].second == t) expect.push_back(r + 1);
                }
            }
        }
        CHECK(got.ranks == expect);
    }
}

TEST_CASE("rank statistics") {
    auto s = summarize_ranks({1, 3, 2, 10});
    CHECK(s.median == 2.5);
    CHECK(s.mean == 4.0);
    // population std of {1,2,3,10}: deviations -3,-2,-1,6 -> (9+4+1+36)/4 = 12.5
    CHECK(s.stddev == doctest::Approx(std::sqrt(12.5)));
    auto odd = summarize_ranks({5, 1, 4});
    CHECK(odd.median == 4.0);
    auto none = summarize_ranks({});
    CHECK(none.median == 0.0);
    CHECK(none.ranks.empty());
}
