#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "enrollrec/enrollment.hpp"
#include "enrollrec/linalg.hpp"

namespace enrollrec {

enum class SkipGramObjective { FullSoftmax, NegativeSampling };

struct SkipGramConfig {
    std::size_t dimension = 229;
    std::size_t window = 2;
    std::size_t epochs = 5;
    double initial_rate = 0.025;
    double min_rate = 1e-4;  // linear decay floor
    std::uint64_t seed = 1;
    // NegativeSampling is an approximation for large vocabularies.
    SkipGramObjective objective = SkipGramObjective::FullSoftmax;
    std::size_t negatives = 5;

    void validate() const;
};

nlohmann::json to_json(const SkipGramConfig& config);
SkipGramConfig skipgram_config_from_json(const nlohmann::json& j);

// input row i is the vector of token i; output row j scores token j as context.
struct SkipGramModel {
    RowMatrix input;
    RowMatrix output;
    std::vector<std::string> tokens;
    SkipGramConfig config;

    std::size_t vocab_size() const { return static_cast<std::size_t>(input.rows()); }
};

// Input uniform in [-0.5/d, 0.5/d], output zero.
SkipGramModel init_skipgram(std::vector<std::string> tokens, const SkipGramConfig& config);

// p(. | input) under the full softmax.
std::vector<double> skipgram_forward(const SkipGramModel& model, std::size_t input);

// Full-softmax objective
//   C = -sum_s (1/T_s) sum_t sum_{0<|i|<=c} log p(w_{t+i} | w_t)
// with the window truncated at sequence ends, and its exact gradient.
struct SkipGramObjectiveValue {
    double loss = 0.0;
    RowMatrix grad_input;
    RowMatrix grad_output;
};
double skipgram_objective(const SkipGramModel& model,
                          const std::vector<SerializedSequence>& sequences);
SkipGramObjectiveValue skipgram_objective_gradient(const SkipGramModel& model,
                                                   const std::vector<SerializedSequence>& sequences);

// Max relative error between the analytic gradient above and central finite
// differences (step h) over every weight. Relative error per entry is
// |a - n| / max(|a|, |n|, 1e-4).
double skipgram_gradient_check(const SkipGramModel& model,
                               const std::vector<SerializedSequence>& sequences, double h = 1e-5);

struct SkipGramTrainResult {
    SkipGramModel model;
    double initial_loss = 0.0;          // C / |S| before training
    std::vector<double> epoch_loss;     // running C / |S| during each epoch
    double final_loss = 0.0;            // C / |S| after training (FullSoftmax only)
    std::size_t training_pairs = 0;     // (input, context) pairs per epoch
    std::vector<std::string> warnings;
};

// SGD with one update per input position; the learning rate decays linearly
// from initial_rate to min_rate over all epochs. Deterministic for a seed.
SkipGramTrainResult train_skipgram(const std::vector<SerializedSequence>& sequences,
                                   std::vector<std::string> tokens, const SkipGramConfig& config);

enum class EmbeddingSide { Input, Output };

// word2vec text format: "<count> <dim>" then "<token> <d floats, 6 decimals>".
// Spaces inside tokens are written as '_'.
std::string export_embeddings(const SkipGramModel& model, EmbeddingSide side);
struct ImportedEmbeddings {
    std::vector<std::string> tokens;
    RowMatrix vectors;
};
ImportedEmbeddings import_embeddings(std::istream& in);

// Token used for a course in exported files, e.g. "Public_Policy:C103".
std::string course_token(const CourseKey& key);

void save_skipgram(std::ostream& out, const SkipGramModel& model);
SkipGramModel load_skipgram(std::istream& in);

}  // namespace enrollrec
