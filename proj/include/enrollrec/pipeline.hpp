#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "enrollrec/catalog.hpp"
#include "enrollrec/enrollment.hpp"
#include "enrollrec/evaluation.hpp"
#include "enrollrec/lstm.hpp"
#include "enrollrec/skipgram.hpp"
#include "enrollrec/synth.hpp"
#include "enrollrec/text.hpp"

namespace enrollrec {

// Settings shared by the command-line tools and the service.
struct AppConfig {
    std::uint64_t seed = 7;
    SynthConfig synth;
    std::size_t min_course_enrollments = 10;
    std::size_t min_semesters = 2;
    std::size_t max_semesters = 12;
    Semester validation{6, Term::Spring};
    Semester test{6, Term::Fall};
    SkipGramConfig skipgram;
    LstmConfig lstm;
    std::vector<LstmConfig> lstm_candidates;  // non-empty -> select on validation
    std::size_t k = 10;
    std::size_t popularity_lookback = 4;
    std::size_t ngram_shuffles = 5;
    std::size_t bow_top_removed = 15;
    int port = 8080;

    AppConfig() { apply_seed(seed); }
    // Seeds every component from one value.
    void apply_seed(std::uint64_t value);
};

// Components take the top-level seed unless their section sets its own.
AppConfig app_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AppConfig& config);

// `path` when given, else $ENROLLREC_CONFIG when set, else defaults.
AppConfig load_app_config(const std::optional<std::filesystem::path>& path);

// A data directory: enrollments.csv plus optional catalog.csv,
// equivalencies.csv, majors.csv, registrar.csv, schedule.csv and
// requirements/<name>.csv.
struct Dataset {
    EnrollmentTable enrollments;
    Catalog catalog;
    std::vector<EquivalencyPair> equivalencies;
    std::map<std::string, std::string> colleges;
    std::map<std::string, std::vector<CourseKey>> requirement_lists;
    std::vector<CourseKey> registrar_list;
    std::optional<std::vector<CourseKey>> schedule;
};

Dataset load_dataset(const std::filesystem::path& dir);
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

// Course filter, then student filter.
EnrollmentTable clean_enrollments(const EnrollmentTable& table, const AppConfig& config);

// Vocabulary-wide derived data.
struct Corpus {
    CourseVocabulary vocab;
    std::vector<std::string> majors;       // sorted
    BowVocabulary bow;                     // empty when no course has a description
    std::vector<BowVector> course_bow;     // per course; no bits without a description
};

Corpus build_corpus(const Dataset& data, std::size_t bow_top_removed = 15);

std::vector<std::string> course_names(const CourseVocabulary& vocab);
std::vector<std::string> course_tokens(const CourseVocabulary& vocab);

// Trained on the serialized histories of `training`.
SkipGramTrainResult train_embedding(const EnrollmentTable& training, const CourseVocabulary& vocab,
                                    const SkipGramConfig& config);

std::vector<LstmSequence> training_sequences(const EnrollmentTable& training, const LstmModel& model,
                                             const CourseVocabulary& vocab);
LstmTrainResult train_recommender(const EnrollmentTable& training, const Corpus& corpus, const LstmConfig& config);

// With candidates: select on the validation semester using models fitted before
// it, then refit the winner on everything before the test semester. Otherwise
// `config.lstm` is fitted on everything before the test semester.
struct RecommenderFit {
    LstmTrainResult result;
    std::optional<std::size_t> selected;
    std::vector<double> validation_recall;  // per candidate
};
RecommenderFit fit_recommender(const EnrollmentTable& cleaned, const Corpus& corpus, const AppConfig& config);

// Evaluation cases for `target`, honouring the dataset's schedule override.
EvalSet make_eval_set(const Dataset& data, const CourseVocabulary& vocab, Semester target);

// Throws unless the model's course list matches the vocabulary.
void check_model_vocabulary(const LstmModel& model, const CourseVocabulary& vocab);
void check_model_vocabulary(const SkipGramModel& model, const CourseVocabulary& vocab);

}  // namespace enrollrec
