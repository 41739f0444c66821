#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "enrollrec/catalog.hpp"
#include "enrollrec/embedding_space.hpp"
#include "enrollrec/enrollment.hpp"

namespace enrollrec {

enum class FilterKind { Offered, NotTaken, NoCreditRestriction, Department, RequirementList, OpenSeats, RegistrarList };

struct Filter {
    FilterKind kind = FilterKind::Offered;
    std::string name;  // Department and RequirementList only

    auto operator<=>(const Filter&) const = default;
};

std::string filter_key(FilterKind kind);
const std::vector<std::string>& filter_keys();

struct QuerySpec {
    std::optional<std::string> interest;     // subject a
    std::optional<std::string> disinterest;  // subject b
    bool use_collaborative = false;
    double collaborative_weight = 1.0;       // w_r
    std::vector<Filter> filters;

    bool has_sort() const { return interest || disinterest || use_collaborative; }
    void validate() const;
};

// Reads interest, disinterest, use_collaborative, collaborative_weight and a
// "filters" object such as {"offered":true,"department":"Economics"}. Unknown
// filter keys throw with the list of valid keys.
QuerySpec query_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuerySpec& spec);

// Everything the filters consult, indexed by vocabulary position.
struct QueryContext {
    const CourseVocabulary* vocab = nullptr;
    const Catalog* catalog = nullptr;  // optional
    std::vector<std::pair<std::size_t, std::size_t>> equivalencies;
    std::set<std::size_t> offered;
    std::map<std::string, std::set<std::size_t>> requirement_lists;
    std::set<std::size_t> registrar_list;
    std::map<std::size_t, long> enrollment;  // current head count for OpenSeats

    // Catalog department, or the subject when the catalog has none.
    std::string department(std::size_t course) const;
    std::vector<std::string> departments() const;
    std::optional<long> capacity(std::size_t course) const;
};

// Conjunction of the spec's filters over `candidates` (kept in input order).
// `taken` is the student's course history. Unknown department or list names
// throw with the valid names.
std::vector<std::size_t> apply_filters(std::span<const std::size_t> candidates, const std::vector<Filter>& filters,
                                       const QueryContext& context, const std::set<std::size_t>& taken);

// Euclidean distances to `point` over `candidates`, min-max scaled to [0, 1]
// (all zero when every distance is equal).
std::vector<double> normalized_distances(const EmbeddingSpace& space, std::span<const std::size_t> candidates,
                                         std::span<const double> point);

// -d'(v_i, v_a) + d'(v_i, v_b) for every candidate; an absent centroid
// contributes 0. Throws on an empty candidate set.
std::vector<double> preference_scores(const EmbeddingSpace& space, std::span<const std::size_t> candidates,
                                      const std::optional<std::vector<double>>& centroid_a,
                                      const std::optional<std::vector<double>>& centroid_b);

struct ScoredCourse {
    std::size_t course = 0;
    double score = 0.0;
    double interest_distance = 0.0;     // d'(v_i, v_a), 0 without interest
    double disinterest_distance = 0.0;  // d'(v_i, v_b), 0 without disinterest
    double collaborative = 0.0;         // p'_i, 0 without collaborative term
};

// Natural order of course numbers: digit runs compare numerically.
bool natural_less(const std::string& a, const std::string& b);

// Ranks `filtered`. With no sort criteria the order is alphabetical by
// department, then course number. Otherwise descending score, ties by index.
// `rnn` is the full-vocabulary distribution and is required when the spec uses
// the collaborative term.
std::vector<ScoredCourse> rank_courses(std::span<const std::size_t> filtered, const QuerySpec& spec,
                                       const QueryContext& context, const EmbeddingSpace* space,
                                       std::span<const double> rnn = {});

// Filters over every vocabulary course, then ranks and truncates to k.
std::vector<ScoredCourse> run_query(const QuerySpec& spec, const QueryContext& context, const EmbeddingSpace* space,
                                    const std::set<std::size_t>& taken, std::span<const double> rnn,
                                    std::size_t k);

}  // namespace enrollrec
