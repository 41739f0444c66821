#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "enrollrec/catalog.hpp"
#include "enrollrec/enrollment.hpp"

namespace enrollrec {

// Synthetic corpus parameters. Subjects are laid out as one core subject per
// major, one minor subject per major and `gen_ed_subjects` general subjects;
// courses are dealt round-robin over them. Majors are grouped into clusters of
// `cluster_size` that share their minor subjects.
// Non-general subjects split into prerequisite chains of `chain_length`
// consecutive courses.
struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t students = 2000;
    std::size_t courses = 200;
    std::size_t majors = 8;
    std::size_t gen_ed_subjects = 4;
    int first_year = 1;
    int last_year = 6;
    double transfer_rate = 0.2;
    double spring_entry_rate = 0.2;
    double summer_rate = 0.05;
    std::size_t freshman_semesters = 8;
    std::size_t transfer_semesters = 4;
    double semester_sd = 1.5;
    std::size_t chain_length = 4;
    std::size_t cluster_size = 2;
    double depth_decay = 0.6;  // affinity factor per step into a chain
    std::size_t transfer_credit = 1;  // leading courses of each home chain credited to transfers
    // course load -> weight; median 4
    std::map<std::size_t, double> load_weights{{3, 0.25}, {4, 0.45}, {5, 0.30}};
    // default affinity tiers
    double core_affinity = 1.0;
    double minor_affinity = 0.5;
    double gen_ed_affinity = 0.05;
    double other_affinity = 0.02;
    double track_bias = 2.0;  // per-student multiplier on one of the two minors
    std::size_t planted_pairs = 8;
    double substitution_rate = 0.5;
    double pass_fail_rate = 0.05;
    double grade_noise = 0.5;
    // Optional explicit majors x courses affinity matrix; replaces the tiers.
    std::optional<std::vector<std::vector<double>>> affinity;

    void validate() const;
};

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct SynthCluster {
    std::vector<std::string> subjects;
    std::vector<CourseKey> courses;  // sorted
};

struct SynthTruth {
    std::vector<std::string> majors;
    std::map<std::string, std::string> major_college;
    std::map<std::string, std::string> major_core;  // major -> core subject
    std::vector<EquivalencyPair> planted_pairs;
    std::map<std::string, std::vector<CourseKey>> subjects;  // subject -> its courses
    std::vector<SynthCluster> clusters;
    std::vector<std::pair<CourseKey, CourseKey>> prerequisites;  // (required, course)
    std::vector<std::vector<double>> affinity;  // majors x courses
    std::map<std::string, std::vector<CourseKey>> popularity_order;  // by descending affinity
};

nlohmann::json to_json(const SynthTruth& truth);

struct SynthData {
    EnrollmentTable enrollments;
    Catalog catalog;
    std::vector<EquivalencyPair> equivalencies;
    SynthTruth truth;
};

// Deterministic for a config. Throws on infeasible configs.
SynthData generate(const SynthConfig& config);

// For every (student, semester) holding exactly one member of a pair, swaps it
// for the other member with probability `rate`.
EnrollmentTable plant_equivalents(const EnrollmentTable& table, const std::vector<EquivalencyPair>& pairs,
                                  double rate, std::uint64_t seed);

// enrollments.csv, catalog.csv, equivalencies.csv, majors.csv, truth.json
void write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace enrollrec
