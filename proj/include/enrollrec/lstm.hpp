#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "enrollrec/adam.hpp"
#include "enrollrec/enrollment.hpp"
#include "enrollrec/linalg.hpp"
#include "enrollrec/prediction.hpp"
#include "enrollrec/text.hpp"

namespace enrollrec {

constexpr std::size_t kGpaBins = 9;         // 8 half-point bins + missing
constexpr std::size_t kMissingGpaBin = 8;
constexpr std::size_t kEntryTypes = 2;

struct LstmConfig {
    std::size_t hidden = 256;
    std::size_t layers = 1;
    bool use_major = true;
    bool use_entry_type = true;
    bool use_gpa = true;
    AdamConfig adam;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    bool aux_head = false;
    // Weight of the keyword loss. Unset means: choose it once before the first
    // epoch so that weighted keyword loss equals course loss, then keep it.
    std::optional<double> aux_weight;

    void validate() const;
};

nlohmann::json to_json(const LstmConfig& config);
LstmConfig lstm_config_from_json(const nlohmann::json& j);

// 1 at each listed index. Throws on index >= size.
Vector encode_multihot(std::span<const std::size_t> indices, std::size_t size);
// [0,0.5) -> 0 ... [3.5,4.0] -> 7, missing -> 8. Throws outside [0, 4].
std::size_t gpa_bin_index(std::optional<double> gpa);
Vector encode_gpa_bin(std::optional<double> gpa);

// Gate rows are stacked in the order forget, input, candidate, output.
struct LstmLayer {
    Matrix wx;  // 4H x input
    Matrix wh;  // 4H x H
    Vector b;   // 4H
};

struct LstmParams {
    std::vector<LstmLayer> layers;
    Vector bos;       // 4H, added to the first layer's gates at the start step
    Matrix w_out;     // V x H
    Vector b_out;     // V
    Matrix w_major;   // V x majors (0 columns when disabled)
    Matrix w_entry;   // V x 2 (0 columns when disabled)
    Matrix w_gpa;     // V x 9 (0 columns when disabled)
    Matrix w_bow;     // B x H (0 rows without aux head)
    Vector b_bow;     // B

    // Visits every weight block in a fixed order as (name, Eigen object).
    template <typename F>
    void for_each(F&& f) { visit(*this, f); }
    template <typename F>
    void for_each(F&& f) const { visit(*this, f); }

    LstmParams zeros_like() const;
    std::vector<std::span<double>> blocks();

private:
    template <typename Self, typename F>
    static void visit(Self& self, F& f) {
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            f(p + "wx", self.layers[l].wx);
            f(p + "wh", self.layers[l].wh);
            f(p + "b", self.layers[l].b);
        }
        f(std::string("bos"), self.bos);
        f(std::string("w_out"), self.w_out);
        f(std::string("b_out"), self.b_out);
        f(std::string("w_major"), self.w_major);
        f(std::string("w_entry"), self.w_entry);
        f(std::string("w_gpa"), self.w_gpa);
        // keyword head last, so a zero keyword gradient adds exactly nothing
        // to the global norm
        f(std::string("w_bow"), self.w_bow);
        f(std::string("b_bow"), self.b_bow);
    }
};

struct GateValues {
    Vector f, i, g, o;
};

struct CellStep {
    Vector h;
    Vector c;
    GateValues gates;
};

// One recurrent step. `extra` (optional, 4H) is added to the gate pre-activations.
CellStep lstm_cell_step(const LstmLayer& layer, const Vector& x, const Vector& h_prev,
                        const Vector& c_prev, const Vector* extra = nullptr);

// Output-layer features for one prediction step.
struct StepFeatures {
    int major = -1;  // index into the model's major list, -1 = unknown
    int entry = -1;  // EntryType as int, -1 = unknown
    std::size_t gpa_bin = kMissingGpaBin;
};

// A student fed to the network. Step 0 is the start step with no course input;
// step k >= 1 consumes inputs[k-1]. Output step k predicts targets[k]
// (empty = no target). inputs.size() + 1 == features.size() == targets.size().
struct LstmSequence {
    std::string student;
    std::vector<std::vector<std::size_t>> inputs;
    std::vector<StepFeatures> features;
    std::vector<std::vector<std::size_t>> targets;

    std::size_t steps() const { return features.size(); }
    void validate(std::size_t vocab) const;
};

struct LstmModel {
    LstmConfig config;
    std::vector<std::string> courses;    // vocabulary tokens
    std::vector<std::string> majors;     // sorted
    std::vector<std::string> bow_stems;  // keyword vocabulary (aux head only)
    LstmParams params;
    double aux_weight = 0.0;  // resolved keyword loss weight

    std::size_t vocab_size() const { return courses.size(); }
    bool has_aux() const { return config.aux_head; }
    int major_index(const std::string& major) const;
};

// Glorot-uniform weights, zero biases. Keyword-head weights come from a separate
// RNG stream so that enabling the head leaves the other weights unchanged.
LstmModel init_lstm(const LstmConfig& config, std::vector<std::string> courses,
                    std::vector<std::string> majors, std::vector<std::string> bow_stems = {});

// Every semester of `history` becomes an input and a target; the final output
// step has no target. Its features use `next_major` when given (else the last
// major) and the GPA of the last semester.
LstmSequence make_sequence(const StudentHistory& history, const LstmModel& model,
                           const std::optional<std::string>& next_major = std::nullopt);
// History truncated to its first `semesters` semesters.
LstmSequence make_prefix_sequence(const StudentHistory& history, std::size_t semesters,
                                  const LstmModel& model,
                                  const std::optional<std::string>& next_major = std::nullopt);

struct LstmStepOutput {
    Vector courses;  // softmax over the course vocabulary
    Vector bow;      // softmax over keywords (empty without aux head)
    Vector hidden;   // top-layer h_t
};

std::vector<LstmStepOutput> lstm_forward(const LstmModel& model, const LstmSequence& sequence);

// Final-step course distributions for many students, batched.
std::vector<Vector> final_distributions(const LstmModel& model,
                                        const std::vector<LstmSequence>& sequences);

// -sum_{j in target} log max(y_j, 1e-12)
double cross_entropy(const Vector& y, std::span<const std::size_t> target);

struct LstmLoss {
    double total = 0.0;
    double course = 0.0;
    double bow = 0.0;
};

// Per student: mean over steps with a target; then mean over students.
// total = course + aux_weight * bow. When `grad` is given it receives dtotal/dparams
// (reshaped like model.params). `course_bow` maps course index -> keyword bits
// and is required when the model has an aux head.
LstmLoss lstm_loss(const LstmModel& model, const std::vector<LstmSequence>& sequences,
                   const std::vector<BowVector>& course_bow, LstmParams* grad = nullptr);

// Max relative error of analytic vs central-difference gradients over every weight.
double lstm_gradient_check(const LstmModel& model, const std::vector<LstmSequence>& sequences,
                           const std::vector<BowVector>& course_bow, double h = 1e-5);

struct LstmTrainResult {
    LstmModel model;
    LstmLoss initial_loss;
    std::vector<double> epoch_loss;  // mean per-student total loss seen during each epoch
    std::vector<std::string> warnings;
};

LstmTrainResult train_lstm(LstmModel model, const std::vector<LstmSequence>& sequences,
                           const std::vector<BowVector>& course_bow);

// Fit each candidate on the sub-training data, score it on validation (higher is
// better, ties to the earlier candidate), then refit the winner on full training.
struct LstmSelection {
    std::size_t best = 0;
    std::vector<double> scores;
    LstmTrainResult refit;
};
LstmSelection select_and_refit(const std::vector<LstmConfig>& candidates,
                               const std::function<LstmModel(const LstmConfig&)>& make_model,
                               const std::vector<LstmSequence>& sub_training,
                               const std::function<double(const LstmModel&)>& validation_score,
                               const std::vector<LstmSequence>& full_training,
                               const std::vector<BowVector>& course_bow);

// Masked distribution at the final step of `sequence`.
Prediction predict_next(const LstmModel& model, const LstmSequence& sequence,
                        std::span<const std::size_t> offered, std::size_t k = 10);

// k most probable keyword stems per output step; ties by stem.
std::vector<std::vector<std::string>> top_keywords(const LstmModel& model,
                                                   const LstmSequence& sequence, std::size_t k);

// Top-layer hidden state at the final step (feature one-hots not included).
Vector extract_hidden_state(const LstmModel& model, const LstmSequence& sequence);

void save_lstm(std::ostream& out, const LstmModel& model);
LstmModel load_lstm(std::istream& in);

}  // namespace enrollrec
