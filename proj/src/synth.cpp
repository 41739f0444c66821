#include "enrollrec/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

const std::vector<std::string> kCoreNames = {"Public Policy", "Economics",  "Statistics", "Computer Science",
                                             "Biology",       "Psychology", "History",    "English"};
const std::vector<std::string> kMinorNames = {"Political Science", "Business",     "Data Science", "Mathematics",
                                              "Chemistry",         "Neuroscience", "Philosophy",   "Art History"};
const std::vector<std::string> kGenEdNames = {"Writing", "Languages", "Art", "Music"};
const std::vector<std::string> kCoreColleges = {"Public Policy School", "Social Sciences",  "Letters and Science",
                                                "Engineering",          "Natural Sciences", "Social Sciences",
                                                "Humanities",           "Humanities"};

const std::map<std::string, std::vector<std::string>> kWordPools = {
    {"Public Policy", {"policy", "government", "regulation", "welfare", "budget", "reform", "legislation", "public", "governance", "advocacy"}},
    {"Statistics", {"probability", "inference", "regression", "sampling", "variance", "estimation", "bayesian", "hypothesis", "distribution", "likelihood"}},
    {"Economics", {"markets", "prices", "trade", "growth", "monetary", "labor", "firms", "equilibrium", "income", "consumers"}},
    {"Computer Science", {"algorithms", "programming", "software", "compilers", "networks", "databases", "computation", "systems", "graphics", "security"}},
    {"Biology", {"cells", "genetics", "evolution", "organisms", "ecology", "proteins", "molecular", "physiology", "species", "neurons"}},
    {"History", {"empires", "revolution", "medieval", "colonial", "war", "archives", "dynasties", "migration", "nations", "modernity"}},
    {"Mathematics", {"algebra", "calculus", "topology", "proofs", "geometry", "matrices", "integrals", "groups", "manifolds", "number"}},
    {"Psychology", {"cognition", "behavior", "memory", "perception", "emotion", "personality", "development", "learning", "attention", "therapy"}},
    {"Political Science", {"elections", "democracy", "parties", "voting", "institutions", "congress", "diplomacy", "sovereignty", "constitution", "power"}},
    {"Data Science", {"data", "visualization", "prediction", "datasets", "pipelines", "modeling", "clustering", "features", "experiments", "dashboards"}},
    {"Business", {"management", "marketing", "accounting", "finance", "strategy", "entrepreneurship", "negotiation", "leadership", "operations", "investment"}},
    {"English", {"novels", "poetry", "shakespeare", "fiction", "drama", "narrative", "authors", "romanticism", "criticism", "victorian"}},
    {"Neuroscience", {"brain", "synapses", "cortex", "neural", "imaging", "plasticity", "circuits", "sensory", "motor", "neurotransmitters"}},
    {"Art History", {"renaissance", "baroque", "architecture", "iconography", "paintings", "modernism", "patrons", "galleries", "sculpture", "impressionism"}},
    {"Chemistry", {"molecules", "reactions", "bonds", "organic", "spectroscopy", "catalysis", "acids", "polymers", "kinetics", "synthesis"}},
    {"Philosophy", {"ethics", "logic", "metaphysics", "epistemology", "virtue", "existence", "reason", "mind", "justice", "language"}},
    {"Writing", {"essays", "composition", "rhetoric", "argument", "drafting", "revision", "prose", "style", "research", "citation"}},
    {"Languages", {"spanish", "french", "conversation", "vocabulary", "translation", "reading", "culture", "grammar", "speaking", "literature"}},
    {"Art", {"painting", "drawing", "sculpture", "studio", "color", "design", "portfolio", "museums", "visual", "criticism"}},
    {"Music", {"harmony", "rhythm", "composition", "orchestra", "melody", "performance", "jazz", "instruments", "listening", "theory"}},
};
const std::vector<std::string> kLevelWords = {"introduction", "foundations", "intermediate", "methods",
                                              "advanced",     "topics",      "seminar",      "research"};

enum class Role { Core, Minor, GenEd };

struct Layout {
    std::vector<std::string> subjects;
    std::vector<Role> roles;
    std::vector<std::vector<std::size_t>> members;  // subject -> generation indices in chain order
    std::vector<std::size_t> subject_of;            // course -> subject
    std::vector<std::size_t> position;              // course -> index within subject
    std::vector<CourseKey> keys;
    std::vector<std::string> majors;
    std::vector<std::size_t> core;                   // major -> subject
    std::vector<std::array<std::size_t, 2>> minors;  // major -> subjects
    std::vector<std::vector<std::size_t>> clusters;  // subject groups shared by a set of majors
};

std::string numbered(const std::string& stem, std::size_t i) { return stem + " " + std::to_string(i + 1); }

std::string course_number(std::size_t k) {
    if (k < 7) return std::to_string(10 * (k + 1) + 1);
    return "C" + std::to_string(100 + 10 * (k + 1) + 1);
}

Layout make_layout(const SynthConfig& c) {
    Layout l;
    const std::size_t m = c.majors;
    const std::size_t wanted = 2 * m + c.gen_ed_subjects;
    const std::size_t s_count = std::min(wanted, c.courses);
    for (std::size_t s = 0; s < s_count; ++s) {
        if (s < m) {
            l.subjects.push_back(s < kCoreNames.size() && m <= kCoreNames.size() ? kCoreNames[s] : numbered("Core", s));
            l.roles.push_back(Role::Core);
        } else if (s < 2 * m) {
            l.subjects.push_back(m <= kMinorNames.size() ? kMinorNames[s - m] : numbered("Minor", s - m));
            l.roles.push_back(Role::Minor);
        } else {
            std::size_t g = s - 2 * m;
            l.subjects.push_back(g < kGenEdNames.size() ? kGenEdNames[g] : numbered("General", g));
            l.roles.push_back(Role::GenEd);
        }
    }
    l.members.resize(s_count);
    for (std::size_t i = 0; i < c.courses; ++i) {
        std::size_t s = i % s_count;
        l.subject_of.push_back(s);
        l.position.push_back(l.members[s].size());
        l.members[s].push_back(i);
        l.keys.push_back({l.subjects[s], course_number(l.position.back())});
    }
    // majors are grouped into clusters of cluster_size; a cluster's majors
    // share its minor subjects
    const std::size_t cs = c.cluster_size;
    for (std::size_t j = 0; j < m; ++j) {
        l.majors.push_back(m <= kCoreNames.size() ? kCoreNames[j] : numbered("Major", j));
        l.core.push_back(j % s_count);
        const std::size_t first = (j / cs) * cs;
        const std::size_t size = std::min(m, first + cs) - first;
        const std::size_t r = j - first;
        l.minors.push_back({(m + first + r) % s_count, (m + first + (r + 1) % size) % s_count});
    }
    for (std::size_t first = 0; first < m; first += cs) {
        std::set<std::size_t> group;
        for (std::size_t j = first; j < std::min(m, first + cs); ++j) {
            group.insert(l.core[j]);
            group.insert(l.minors[j][0]);
            group.insert(l.minors[j][1]);
        }
        l.clusters.emplace_back(group.begin(), group.end());
    }
    return l;
}

bool is_chain(const Layout& l, std::size_t course) { return l.roles[l.subject_of[course]] != Role::GenEd; }

// Course required before `course`, if any: the previous course of its chain.
std::optional<std::size_t> prerequisite(const Layout& l, std::size_t course, std::size_t chain_length) {
    if (!is_chain(l, course)) return std::nullopt;
    const std::size_t k = l.position[course];
    if (k % chain_length == 0) return std::nullopt;
    return l.members[l.subject_of[course]][k - 1];
}

std::vector<std::vector<double>> default_affinity(const SynthConfig& c, const Layout& l) {
    std::vector<std::vector<double>> a(c.majors, std::vector<double>(c.courses, 0.0));
    for (std::size_t j = 0; j < c.majors; ++j) {
        for (std::size_t i = 0; i < c.courses; ++i) {
            const std::size_t s = l.subject_of[i];
            const double k = static_cast<double>(l.position[i]);
            double tier = c.other_affinity;
            if (l.roles[s] == Role::GenEd) tier = c.gen_ed_affinity / (1.0 + 0.25 * k);
            if (s == l.minors[j][0] || s == l.minors[j][1]) tier = std::max(tier, c.minor_affinity);
            if (s == l.core[j]) tier = std::max(tier, c.core_affinity);
            if (l.roles[s] != Role::GenEd) {
                tier *= std::max(0.1, 1.0 - 0.03 * k) *
                        std::pow(c.depth_decay, static_cast<double>(l.position[i] % c.chain_length));
            }
            a[j][i] = tier;
        }
    }
    return a;
}

std::string letter_for(double score) {
    static const std::vector<std::pair<double, std::string>> letters = {
        {4.0, "A"}, {3.7, "A-"}, {3.3, "B+"}, {3.0, "B"}, {2.7, "B-"}, {2.3, "C+"}, {2.0, "C"},
        {1.7, "C-"}, {1.3, "D+"}, {1.0, "D"}, {0.7, "D-"}, {0.0, "F"}};
    const std::pair<double, std::string>* best = &letters.front();
    for (const auto& p : letters) {
        if (std::abs(p.first - score) < std::abs(best->first - score)) best = &p;
    }
    return best->second;
}

std::vector<std::string> syllable_words(std::size_t subject, std::size_t n) {
    static const char* syl[] = {"ka", "lo", "mer", "tin", "sa", "vor", "pel", "dri", "nu", "gan"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(std::string(syl[(subject + i) % 10]) + syl[(subject * 3 + i * 7) % 10] + syl[i % 10] + "ics");
    }
    return out;
}

Catalog make_catalog(const Layout& l, const SynthConfig& c, std::mt19937_64& rng) {
    std::vector<CatalogEntry> entries;
    for (std::size_t i = 0; i < c.courses; ++i) {
        const std::size_t s = l.subject_of[i];
        const std::size_t k = l.position[i];
        auto pool_it = kWordPools.find(l.subjects[s]);
        auto pool = pool_it != kWordPools.end() ? pool_it->second : syllable_words(s, 10);
        std::vector<std::string> words;
        for (std::size_t w = 0; w < 4; ++w) words.push_back(pool[(k + 3 * w) % pool.size()]);
        const std::string& level = kLevelWords[std::min(k / 2, kLevelWords.size() - 1)];
        CatalogEntry e;
        e.course = l.keys[i];
        std::string topic = words[0];
        topic[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(topic[0])));
        e.title = l.subjects[s] + ": " + topic;
        e.description = level + " course on " + words[0] + " and " + words[1] + ", with readings on " + words[2] +
                        " and " + words[3] + ".";
        e.department = l.subjects[s];
        e.division = k < 4 ? "Lower Division" : "Upper Division";
        e.college = "Letters and Science";
        for (std::size_t j = 0; j < l.majors.size(); ++j) {
            if (l.core[j] == s && j < kCoreColleges.size()) e.college = kCoreColleges[j];
        }
        e.capacity = 40 + static_cast<long>(rng() % 200);
        entries.push_back(std::move(e));
    }
    return Catalog(std::move(entries));
}

std::vector<std::pair<std::size_t, std::size_t>> choose_pairs(const SynthConfig& c, const Layout& l) {
    // subjects of the first two clusters are left intact for subject-preference
    // demos unless nothing else is available
    std::vector<std::size_t> subjects, reserved;
    std::set<std::size_t> demo;
    for (std::size_t g = 0; g < std::min<std::size_t>(2, l.clusters.size()); ++g) {
        demo.insert(l.clusters[g].begin(), l.clusters[g].end());
    }
    for (std::size_t s = 0; s < l.subjects.size(); ++s) {
        if (l.roles[s] == Role::GenEd) continue;
        (demo.count(s) ? reserved : subjects).push_back(s);
    }
    if (subjects.size() < 2) subjects.insert(subjects.end(), reserved.begin(), reserved.end());
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (c.planted_pairs == 0) return out;
    std::set<std::size_t> used;
    const std::size_t n = subjects.size();
    for (std::size_t p = 0; out.size() < c.planted_pairs && n >= 2 && p < 64 * c.planted_pairs; ++p) {
        const std::size_t a = subjects[(2 * p) % n], b = subjects[(2 * p + 1) % n];
        const std::size_t k = c.chain_length * ((2 * p) / n + 1);
        if (a == b || k >= l.members[a].size() || k >= l.members[b].size()) continue;
        const std::size_t x = l.members[a][k], y = l.members[b][k];
        if (used.count(x) || used.count(y)) continue;
        used.insert(x);
        used.insert(y);
        out.emplace_back(x, y);
    }
    if (out.size() < c.planted_pairs) {
        throw Error("cannot plant " + std::to_string(c.planted_pairs) + " equivalent pairs in " +
                    std::to_string(c.courses) + " courses");
    }
    return out;
}

// Weighted draw without replacement of up to `count` items with positive weight.
std::vector<std::size_t> draw(std::vector<std::pair<std::size_t, double>> items, std::size_t count,
                              std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    std::erase_if(items, [](const auto& p) { return !(p.second > 0.0); });
    while (out.size() < count && !items.empty()) {
        double total = 0.0;
        for (const auto& p : items) total += p.second;
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = items.size() - 1;
        for (std::size_t i = 0; i < items.size(); ++i) {
            u -= items[i].second;
            if (u < 0.0) {
                pick = i;
                break;
            }
        }
        out.push_back(items[pick].first);
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

}  // namespace

void SynthConfig::validate() const {
    if (students < 1) throw Error("synth: students must be >= 1");
    if (courses < 1) throw Error("synth: courses must be >= 1");
    if (majors < 1) throw Error("synth: majors must be >= 1");
    if (courses < majors) {
        throw Error("synth: " + std::to_string(courses) + " courses cannot give " + std::to_string(majors) +
                    " majors a core subject each");
    }
    if (first_year > last_year) throw Error("synth: first_year after last_year");
    for (double r : {transfer_rate, spring_entry_rate, summer_rate, substitution_rate, pass_fail_rate}) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error("synth: rates must lie in [0, 1]");
    }
    if (!(depth_decay > 0.0 && depth_decay <= 1.0)) throw Error("synth: depth_decay must lie in (0, 1]");
    if (cluster_size < 1) throw Error("synth: cluster_size must be >= 1");
    if (chain_length < 1) throw Error("synth: chain_length must be >= 1");
    if (freshman_semesters < 2 || transfer_semesters < 2 || freshman_semesters > 12 || transfer_semesters > 12) {
        throw Error("synth: planned semesters must lie in [2, 12]");
    }
    if (!(semester_sd >= 0.0) || !(grade_noise >= 0.0) || !(track_bias > 0.0)) {
        throw Error("synth: semester_sd and grade_noise must be >= 0, track_bias > 0");
    }
    if (load_weights.empty()) throw Error("synth: load_weights is empty");
    for (const auto& [load, w] : load_weights) {
        if (load < 1 || !(w > 0.0)) throw Error("synth: load weights need load >= 1 and weight > 0");
    }
    for (double a : {core_affinity, minor_affinity, gen_ed_affinity, other_affinity}) {
        if (!(a >= 0.0)) throw Error("synth: affinities must be >= 0");
    }
    if (affinity) {
        if (affinity->size() != majors) throw Error("synth: affinity needs one row per major");
        for (const auto& row : *affinity) {
            if (row.size() != courses) throw Error("synth: affinity rows need one entry per course");
            double sum = 0.0;
            for (double x : row) {
                if (!(x >= 0.0) || !std::isfinite(x)) throw Error("synth: affinity entries must be finite and >= 0");
                sum += x;
            }
            if (!(sum > 0.0)) throw Error("synth: every major needs a course with positive affinity");
        }
    }
}

nlohmann::json to_json(const SynthConfig& c) {
    nlohmann::json loads = nlohmann::json::object();
    for (const auto& [load, w] : c.load_weights) loads[std::to_string(load)] = w;
    nlohmann::json j = {{"seed", c.seed},
                        {"students", c.students},
                        {"courses", c.courses},
                        {"majors", c.majors},
                        {"gen_ed_subjects", c.gen_ed_subjects},
                        {"first_year", c.first_year},
                        {"last_year", c.last_year},
                        {"transfer_rate", c.transfer_rate},
                        {"spring_entry_rate", c.spring_entry_rate},
                        {"summer_rate", c.summer_rate},
                        {"freshman_semesters", c.freshman_semesters},
                        {"transfer_semesters", c.transfer_semesters},
                        {"semester_sd", c.semester_sd},
                        {"transfer_credit", c.transfer_credit},
                        {"chain_length", c.chain_length},
                        {"cluster_size", c.cluster_size},
                        {"depth_decay", c.depth_decay},
                        {"load_weights", loads},
                        {"core_affinity", c.core_affinity},
                        {"minor_affinity", c.minor_affinity},
                        {"gen_ed_affinity", c.gen_ed_affinity},
                        {"other_affinity", c.other_affinity},
                        {"track_bias", c.track_bias},
                        {"planted_pairs", c.planted_pairs},
                        {"substitution_rate", c.substitution_rate},
                        {"pass_fail_rate", c.pass_fail_rate},
                        {"grade_noise", c.grade_noise}};
    if (c.affinity) j["affinity"] = *c.affinity;
    return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("synth config must be a JSON object");
    static const std::set<std::string> known = {
        "seed",          "students",        "courses",        "majors",          "gen_ed_subjects",
        "first_year",    "last_year",       "transfer_rate",  "spring_entry_rate", "summer_rate",
        "freshman_semesters", "transfer_semesters", "semester_sd", "transfer_credit", "chain_length", "cluster_size", "depth_decay", "load_weights",
        "core_affinity", "minor_affinity",  "gen_ed_affinity", "other_affinity", "track_bias",
        "planted_pairs", "substitution_rate", "pass_fail_rate", "grade_noise",   "affinity"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw Error("synth config: unknown key '" + key + "'");
    }
    SynthConfig c;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
        };
        get("seed", c.seed);
        get("students", c.students);
        get("courses", c.courses);
        get("majors", c.majors);
        get("gen_ed_subjects", c.gen_ed_subjects);
        get("first_year", c.first_year);
        get("last_year", c.last_year);
        get("transfer_rate", c.transfer_rate);
        get("spring_entry_rate", c.spring_entry_rate);
        get("summer_rate", c.summer_rate);
        get("freshman_semesters", c.freshman_semesters);
        get("transfer_semesters", c.transfer_semesters);
        get("semester_sd", c.semester_sd);
        get("transfer_credit", c.transfer_credit);
        get("chain_length", c.chain_length);
        get("cluster_size", c.cluster_size);
        get("depth_decay", c.depth_decay);
        get("core_affinity", c.core_affinity);
        get("minor_affinity", c.minor_affinity);
        get("gen_ed_affinity", c.gen_ed_affinity);
        get("other_affinity", c.other_affinity);
        get("track_bias", c.track_bias);
        get("planted_pairs", c.planted_pairs);
        get("substitution_rate", c.substitution_rate);
        get("pass_fail_rate", c.pass_fail_rate);
        get("grade_noise", c.grade_noise);
        if (j.contains("load_weights")) {
            c.load_weights.clear();
            for (const auto& [key, value] : j["load_weights"].items()) {
                c.load_weights[static_cast<std::size_t>(std::stoul(key))] = value.get<double>();
            }
        }
        if (j.contains("affinity") && !j["affinity"].is_null()) {
            c.affinity = j["affinity"].get<std::vector<std::vector<double>>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("synth config: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw Error("synth config: load_weights keys must be integers");
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const SynthTruth& t) {
    auto key_json = [](const CourseKey& k) { return k.to_string(); };
    nlohmann::json j;
    j["majors"] = t.majors;
    j["major_college"] = t.major_college;
    j["major_core"] = t.major_core;
    j["planted_pairs"] = nlohmann::json::array();
    for (const auto& [a, b] : t.planted_pairs) j["planted_pairs"].push_back({key_json(a), key_json(b)});
    j["subjects"] = nlohmann::json::object();
    for (const auto& [subject, keys] : t.subjects) {
        auto& arr = j["subjects"][subject] = nlohmann::json::array();
        for (const auto& k : keys) arr.push_back(key_json(k));
    }
    j["clusters"] = nlohmann::json::array();
    for (const auto& c : t.clusters) {
        nlohmann::json cj;
        cj["subjects"] = c.subjects;
        cj["courses"] = nlohmann::json::array();
        for (const auto& k : c.courses) cj["courses"].push_back(key_json(k));
        j["clusters"].push_back(cj);
    }
    j["prerequisites"] = nlohmann::json::array();
    for (const auto& [a, b] : t.prerequisites) j["prerequisites"].push_back({key_json(a), key_json(b)});
    j["popularity_order"] = nlohmann::json::object();
    for (const auto& [major, keys] : t.popularity_order) {
        auto& arr = j["popularity_order"][major] = nlohmann::json::array();
        for (const auto& k : keys) arr.push_back(key_json(k));
    }
    return j;
}

SynthData generate(const SynthConfig& config) {
    config.validate();
    const Layout layout = make_layout(config);
    const auto affinity = config.affinity ? *config.affinity : default_affinity(config, layout);
    const auto pairs = choose_pairs(config, layout);
    std::mt19937_64 rng(config.seed);

    SynthData data;
    data.catalog = make_catalog(layout, config, rng);

    // main terms in order: Spring y, Fall y for each year
    std::vector<Semester> mains;
    for (int y = config.first_year; y <= config.last_year; ++y) {
        mains.push_back({y, Term::Spring});
        mains.push_back({y, Term::Fall});
    }
    std::vector<double> load_w;
    std::vector<std::size_t> load_v;
    for (const auto& [load, w] : config.load_weights) {
        load_v.push_back(load);
        load_w.push_back(w);
    }
    std::discrete_distribution<std::size_t> load_dist(load_w.begin(), load_w.end());
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> unit(0.0, 1.0);
    const int width = static_cast<int>(std::to_string(config.students).size());

    for (std::size_t sid = 0; sid < config.students; ++sid) {
        std::string id = std::to_string(sid + 1);
        id = "S" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id;
        const std::size_t major = static_cast<std::size_t>(rng() % config.majors);
        const bool transfer = std::bernoulli_distribution(config.transfer_rate)(rng);
        const double planned_mean =
            static_cast<double>(transfer ? config.transfer_semesters : config.freshman_semesters);
        const double ability = std::clamp(3.1 + 0.5 * unit(rng), 0.0, 4.0);
        std::size_t planned = static_cast<std::size_t>(
            std::clamp(std::lround(planned_mean + config.semester_sd * unit(rng)), 2L, 12L));

        // entry among main terms leaving at least two semesters in the window
        const bool spring = std::bernoulli_distribution(config.spring_entry_rate)(rng);
        std::vector<std::size_t> entries;
        for (std::size_t e = 0; e + 2 <= mains.size(); ++e) {
            if ((mains[e].term == Term::Spring) == spring) entries.push_back(e);
        }
        if (entries.empty()) {
            for (std::size_t e = 0; e + 2 <= mains.size(); ++e) entries.push_back(e);
        }
        const std::size_t entry = entries[rng() % entries.size()];
        std::vector<Semester> terms;
        for (std::size_t e = entry; e < mains.size() && terms.size() < planned; ++e) {
            terms.push_back(mains[e]);
            // optional summer after a spring, while the semester budget allows
            if (mains[e].term == Term::Spring && e + 1 < mains.size() && terms.size() + 1 < planned &&
                std::bernoulli_distribution(config.summer_rate)(rng)) {
                terms.push_back({mains[e].year, Term::Summer});
            }
        }

        std::vector<double> weight = affinity[major];
        const std::size_t track = coin(rng) ? 0 : 1;
        if (!config.affinity) {
            for (std::size_t i = 0; i < config.courses; ++i) {
                const std::size_t s = layout.subject_of[i];
                if (s == layout.core[major]) continue;
                if (s == layout.minors[major][track]) weight[i] *= config.track_bias;
                else if (s == layout.minors[major][1 - track]) weight[i] /= config.track_bias;
            }
        }
        std::vector<bool> taken(config.courses, false);
        if (transfer) {
            for (std::size_t s : {layout.core[major], layout.minors[major][0], layout.minors[major][1]}) {
                for (std::size_t k = 0; k < layout.members[s].size(); ++k) {
                    if (k % config.chain_length < config.transfer_credit) taken[layout.members[s][k]] = true;
                }
            }
        }

        for (const auto& sem : terms) {
            std::size_t load = load_v[load_dist(rng)];
            if (sem.term == Term::Summer) load = 1 + rng() % 2;
            std::vector<std::pair<std::size_t, double>> eligible;
            for (std::size_t i = 0; i < config.courses; ++i) {
                if (taken[i]) continue;
                auto pre = prerequisite(layout, i, config.chain_length);
                if (!pre || taken[*pre]) eligible.emplace_back(i, weight[i]);
            }
            auto chosen = draw(eligible, load, rng);
            if (chosen.size() < load) {
                // nothing new left: repeat courses the major takes
                std::vector<std::pair<std::size_t, double>> repeats;
                for (std::size_t i = 0; i < config.courses; ++i) {
                    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) repeats.emplace_back(i, weight[i]);
                }
                auto more = draw(repeats, load - chosen.size(), rng);
                chosen.insert(chosen.end(), more.begin(), more.end());
            }
            std::sort(chosen.begin(), chosen.end());
            for (auto i : chosen) {
                taken[i] = true;
                EnrollmentRecord r;
                r.semester = sem;
                r.student = id;
                r.major = layout.majors[major];
                r.entry_type = transfer ? EntryType::Transfer : EntryType::NewFreshman;
                r.course = layout.keys[i];
                if (!std::bernoulli_distribution(config.pass_fail_rate)(rng)) {
                    r.grade = letter_for(std::clamp(ability + config.grade_noise * unit(rng), 0.0, 4.0));
                }
                data.enrollments.records.push_back(std::move(r));
            }
        }
    }

    std::vector<EquivalencyPair> key_pairs;
    for (const auto& [a, b] : pairs) key_pairs.emplace_back(layout.keys[a], layout.keys[b]);
    data.enrollments = plant_equivalents(data.enrollments, key_pairs, config.substitution_rate, config.seed ^ 0x5eedULL);
    data.equivalencies = key_pairs;

    auto& t = data.truth;
    t.majors = layout.majors;
    for (std::size_t j = 0; j < config.majors; ++j) {
        t.major_college[layout.majors[j]] = j < kCoreColleges.size() ? kCoreColleges[j] : "Letters and Science";
        t.major_core[layout.majors[j]] = layout.subjects[layout.core[j]];
    }
    t.planted_pairs = key_pairs;
    for (const auto& group : layout.clusters) {
        SynthCluster cluster;
        for (auto s : group) {
            cluster.subjects.push_back(layout.subjects[s]);
            for (auto i : layout.members[s]) cluster.courses.push_back(layout.keys[i]);
        }
        std::sort(cluster.courses.begin(), cluster.courses.end());
        t.clusters.push_back(std::move(cluster));
    }
    for (std::size_t s = 0; s < layout.subjects.size(); ++s) {
        auto& subject = t.subjects[layout.subjects[s]];
        for (auto i : layout.members[s]) subject.push_back(layout.keys[i]);
        for (auto i : layout.members[s]) {
            if (auto pre = prerequisite(layout, i, config.chain_length)) {
                t.prerequisites.emplace_back(layout.keys[*pre], layout.keys[i]);
            }
        }
    }
    t.affinity = affinity;
    for (std::size_t j = 0; j < config.majors; ++j) {
        std::vector<std::size_t> order(config.courses);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return affinity[j][x] > affinity[j][y]; });
        auto& keys = t.popularity_order[layout.majors[j]];
        for (auto i : order) keys.push_back(layout.keys[i]);
    }
    return data;
}

EnrollmentTable plant_equivalents(const EnrollmentTable& table, const std::vector<EquivalencyPair>& pairs,
                                  double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error("substitution rate must lie in [0, 1]");
    std::map<CourseKey, CourseKey> partner;
    for (const auto& [a, b] : pairs) {
        if (a == b) throw Error("equivalent pair with identical members: " + a.to_string());
        if (partner.count(a) || partner.count(b)) throw Error("course appears in two planted pairs");
        partner[a] = b;
        partner[b] = a;
    }
    EnrollmentTable out = table;
    if (partner.empty()) return out;
    // present courses per (student, semester)
    std::map<std::pair<std::string, int>, std::set<CourseKey>> present;
    for (const auto& r : table.records) present[{r.student, r.semester.ordinal()}].insert(r.course);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution flip(rate);
    for (auto& r : out.records) {
        auto it = partner.find(r.course);
        if (it == partner.end()) continue;
        if (present[{r.student, r.semester.ordinal()}].count(it->second)) continue;
        if (flip(rng)) r.course = it->second;
    }
    return out;
}

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw Error("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("enrollments.csv");
        write_enrollments(out, data.enrollments);
    }
    {
        auto out = open("catalog.csv");
        write_catalog(out, data.catalog);
    }
    {
        auto out = open("equivalencies.csv");
        write_equivalencies(out, data.equivalencies);
    }
    {
        auto out = open("majors.csv");
        write_major_colleges(out, data.truth.major_college);
    }
    {
        auto out = open("truth.json");
        out << to_json(data.truth).dump(2) << "\n";
    }
}

}  // namespace enrollrec
