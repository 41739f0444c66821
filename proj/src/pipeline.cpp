#include "enrollrec/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("cannot read " + p.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

void check_keyword_source(const LstmConfig& config, const Corpus& corpus) {
    if (config.aux_head && corpus.bow.size() == 0) throw Error("keyword head needs course descriptions in catalog.csv");
}

}  // namespace

void AppConfig::apply_seed(std::uint64_t value) {
    seed = value;
    synth.seed = value;
    skipgram.seed = value;
    lstm.seed = value;
    for (auto& c : lstm_candidates) c.seed = value;
}

AppConfig app_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    static const std::set<std::string> known = {"seed",     "synth", "data",       "split",  "skipgram",
                                                "lstm",     "lstm_candidates", "evaluation", "service"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw Error("config: unknown section '" + key + "'");
    }
    AppConfig c;
    try {
        if (j.contains("seed")) c.apply_seed(j["seed"].get<std::uint64_t>());
        if (j.contains("synth")) c.synth = synth_config_from_json(j["synth"]);
        if (j.contains("data")) {
            const auto& d = j["data"];
            c.min_course_enrollments = d.value("min_course_enrollments", c.min_course_enrollments);
            c.min_semesters = d.value("min_semesters", c.min_semesters);
            c.max_semesters = d.value("max_semesters", c.max_semesters);
            c.bow_top_removed = d.value("bow_top_removed", c.bow_top_removed);
        }
        if (j.contains("split")) {
            const auto& s = j["split"];
            if (s.contains("validation_semester")) c.validation = Semester::parse(s["validation_semester"].get<std::string>());
            if (s.contains("test_semester")) c.test = Semester::parse(s["test_semester"].get<std::string>());
        }
        if (j.contains("skipgram")) c.skipgram = skipgram_config_from_json(j["skipgram"]);
        if (j.contains("lstm")) c.lstm = lstm_config_from_json(j["lstm"]);
        if (j.contains("lstm_candidates")) {
            for (const auto& cand : j["lstm_candidates"]) c.lstm_candidates.push_back(lstm_config_from_json(cand));
        }
        if (j.contains("evaluation")) {
            const auto& e = j["evaluation"];
            c.k = e.value("k", c.k);
            c.popularity_lookback = e.value("popularity_lookback", c.popularity_lookback);
            c.ngram_shuffles = e.value("ngram_shuffles", c.ngram_shuffles);
        }
        if (j.contains("service")) c.port = j["service"].value("port", c.port);
        auto inherit = [&](const char* section, std::uint64_t& seed) {
            if (!j.contains(section) || !j[section].contains("seed")) seed = c.seed;
        };
        inherit("synth", c.synth.seed);
        inherit("skipgram", c.skipgram.seed);
        inherit("lstm", c.lstm.seed);
        if (j.contains("lstm_candidates")) {
            for (std::size_t i = 0; i < c.lstm_candidates.size(); ++i) {
                if (!j["lstm_candidates"][i].contains("seed")) c.lstm_candidates[i].seed = c.seed;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    if (!(c.validation < c.test)) throw Error("config: validation semester must precede the test semester");
    if (c.k < 1) throw Error("config: k must be >= 1");
    return c;
}

nlohmann::json to_json(const AppConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["synth"] = to_json(c.synth);
    j["data"] = {{"min_course_enrollments", c.min_course_enrollments},
                 {"min_semesters", c.min_semesters},
                 {"max_semesters", c.max_semesters},
                 {"bow_top_removed", c.bow_top_removed}};
    j["split"] = {{"validation_semester", c.validation.to_string()}, {"test_semester", c.test.to_string()}};
    j["skipgram"] = to_json(c.skipgram);
    j["lstm"] = to_json(c.lstm);
    j["lstm_candidates"] = nlohmann::json::array();
    for (const auto& cand : c.lstm_candidates) j["lstm_candidates"].push_back(to_json(cand));
    j["evaluation"] = {{"k", c.k}, {"popularity_lookback", c.popularity_lookback}, {"ngram_shuffles", c.ngram_shuffles}};
    j["service"] = {{"port", c.port}};
    return j;
}

AppConfig load_app_config(const std::optional<std::filesystem::path>& path) {
    std::optional<std::filesystem::path> p = path;
    if (!p) {
        if (const char* env = std::getenv("ENROLLREC_CONFIG"); env && *env) p = env;
    }
    if (!p) return AppConfig{};
    auto in = open_in(*p);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + p->string() + ": " + e.what());
    }
    return app_config_from_json(j);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset d;
    {
        auto in = open_in(dir / "enrollments.csv");
        d.enrollments = parse_enrollments(in);
    }
    if (std::filesystem::exists(dir / "catalog.csv")) {
        auto in = open_in(dir / "catalog.csv");
        d.catalog = parse_catalog(in);
    }
    if (std::filesystem::exists(dir / "equivalencies.csv")) {
        auto in = open_in(dir / "equivalencies.csv");
        d.equivalencies = parse_equivalencies(in);
    }
    if (std::filesystem::exists(dir / "majors.csv")) {
        auto in = open_in(dir / "majors.csv");
        d.colleges = parse_major_colleges(in);
    }
    if (std::filesystem::exists(dir / "registrar.csv")) {
        auto in = open_in(dir / "registrar.csv");
        d.registrar_list = parse_course_list(in);
    }
    if (std::filesystem::exists(dir / "schedule.csv")) {
        auto in = open_in(dir / "schedule.csv");
        d.schedule = parse_course_list(in);
    }
    if (std::filesystem::is_directory(dir / "requirements")) {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir / "requirements")) {
            if (e.path().extension() == ".csv") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto in = open_in(f);
            d.requirement_lists[f.stem().string()] = parse_course_list(in);
        }
    }
    return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "enrollments.csv");
        write_enrollments(out, d.enrollments);
    }
    if (!d.catalog.empty()) {
        auto out = open_out(dir / "catalog.csv");
        write_catalog(out, d.catalog);
    }
    if (!d.equivalencies.empty()) {
        auto out = open_out(dir / "equivalencies.csv");
        write_equivalencies(out, d.equivalencies);
    }
    if (!d.colleges.empty()) {
        auto out = open_out(dir / "majors.csv");
        write_major_colleges(out, d.colleges);
    }
    if (!d.registrar_list.empty()) {
        auto out = open_out(dir / "registrar.csv");
        write_course_list(out, d.registrar_list);
    }
    if (d.schedule) {
        auto out = open_out(dir / "schedule.csv");
        write_course_list(out, *d.schedule);
    }
    if (!d.requirement_lists.empty()) {
        std::filesystem::create_directories(dir / "requirements");
        for (const auto& [name, list] : d.requirement_lists) {
            auto out = open_out(dir / "requirements" / (name + ".csv"));
            write_course_list(out, list);
        }
    }
}

EnrollmentTable clean_enrollments(const EnrollmentTable& table, const AppConfig& config) {
    return filter_students(filter_courses(table, config.min_course_enrollments), config.min_semesters,
                           config.max_semesters);
}

Corpus build_corpus(const Dataset& data, std::size_t bow_top_removed) {
    Corpus c;
    c.vocab = CourseVocabulary::from_table(data.enrollments);
    std::set<std::string> majors;
    for (const auto& r : data.enrollments.records) {
        if (!r.major.empty()) majors.insert(r.major);
    }
    c.majors.assign(majors.begin(), majors.end());
    std::vector<std::string> descriptions;
    for (const auto& key : c.vocab.keys()) {
        const auto* e = data.catalog.find(key);
        descriptions.push_back(e ? e->description : "");
    }
    const bool any = std::any_of(descriptions.begin(), descriptions.end(), [](const auto& d) { return !d.empty(); });
    if (any) {
        c.bow = build_bow_vocabulary(descriptions, default_stopwords(), bow_top_removed);
        for (const auto& d : descriptions) c.course_bow.push_back(vectorize_description(d, c.bow));
    } else {
        c.course_bow.assign(descriptions.size(), BowVector{});
    }
    return c;
}

std::vector<std::string> course_names(const CourseVocabulary& vocab) {
    std::vector<std::string> out;
    for (const auto& k : vocab.keys()) out.push_back(k.to_string());
    return out;
}

std::vector<std::string> course_tokens(const CourseVocabulary& vocab) {
    std::vector<std::string> out;
    for (const auto& k : vocab.keys()) out.push_back(course_token(k));
    return out;
}

SkipGramTrainResult train_embedding(const EnrollmentTable& training, const CourseVocabulary& vocab,
                                    const SkipGramConfig& config) {
    auto histories = build_histories(training, vocab);
    auto sequences = serialize_sequences(histories, config.seed);
    return train_skipgram(sequences, course_tokens(vocab), config);
}

std::vector<LstmSequence> training_sequences(const EnrollmentTable& training, const LstmModel& model,
                                             const CourseVocabulary& vocab) {
    std::vector<LstmSequence> out;
    for (const auto& h : build_histories(training, vocab)) out.push_back(make_sequence(h, model));
    return out;
}

LstmTrainResult train_recommender(const EnrollmentTable& training, const Corpus& corpus, const LstmConfig& config) {
    check_keyword_source(config, corpus);
    auto model = init_lstm(config, course_names(corpus.vocab), corpus.majors,
                           config.aux_head ? corpus.bow.stems() : std::vector<std::string>{});
    auto seqs = training_sequences(training, model, corpus.vocab);
    return train_lstm(std::move(model), seqs, corpus.course_bow);
}

RecommenderFit fit_recommender(const EnrollmentTable& cleaned, const Corpus& corpus, const AppConfig& config) {
    auto split = split_by_semester(cleaned, config.validation, config.test);
    auto full = split.full_training();
    RecommenderFit fit;
    if (config.lstm_candidates.empty()) {
        fit.result = train_recommender(full, corpus, config.lstm);
        return fit;
    }
    for (const auto& c : config.lstm_candidates) check_keyword_source(c, corpus);
    auto make_model = [&](const LstmConfig& c) {
        return init_lstm(c, course_names(corpus.vocab), corpus.majors,
                         c.aux_head ? corpus.bow.stems() : std::vector<std::string>{});
    };
    // sequences depend only on the vocabulary and majors, not the weights
    const auto shape = make_model(config.lstm_candidates.front());
    const auto validation = build_eval_set(cleaned, corpus.vocab, config.validation);
    auto score = [&](const LstmModel& m) {
        return evaluate(validation, lstm_predictor(m), config.k).mean_recall;
    };
    auto sel = select_and_refit(config.lstm_candidates, make_model,
                                training_sequences(split.sub_training, shape, corpus.vocab), score,
                                training_sequences(full, shape, corpus.vocab), corpus.course_bow);
    fit.result = std::move(sel.refit);
    fit.selected = sel.best;
    fit.validation_recall = std::move(sel.scores);
    return fit;
}

EvalSet make_eval_set(const Dataset& data, const CourseVocabulary& vocab, Semester target) {
    std::optional<std::vector<std::size_t>> schedule;
    if (data.schedule) {
        schedule.emplace();
        for (const auto& key : *data.schedule) {
            if (auto idx = vocab.find(key)) schedule->push_back(*idx);
        }
    }
    return build_eval_set(data.enrollments, vocab, target, schedule);
}

void check_model_vocabulary(const LstmModel& model, const CourseVocabulary& vocab) {
    if (model.courses != course_names(vocab)) {
        throw Error("recommender model was trained on a different course vocabulary");
    }
}

void check_model_vocabulary(const SkipGramModel& model, const CourseVocabulary& vocab) {
    if (model.tokens != course_tokens(vocab)) {
        throw Error("embedding was trained on a different course vocabulary");
    }
}

}  // namespace enrollrec
