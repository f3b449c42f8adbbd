#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "semloft/gridmap.hpp"
#include "semloft/mln.hpp"
#include "semloft/world.hpp"

namespace semloft {

/// p(C_M | C_W), indexed [world state][map state] by CellState codes.
struct LookupTable {
    std::array<std::array<double, kCellStates>, kCellStates> p{{{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}};

    /// Throws Config unless entries lie in (0,1] and rows sum to 1.
    void validate() const;
};

struct ScoringParams {
    double psi = 0.5;
    LookupTable lookup;
    double gaussian_sigma = 5.0;
    double theta_threshold = 0.5;
    bool squared_distance = false;
    ClassifyThresholds classify;
    WorldRasterParams raster;
    RelationParams relations;
    UnitClassThresholds unit_classes;
    mln::KnowledgeBase kb = mln::kb_same_length();

    void validate() const;
};

/// Joint histogram of (world state, map state) plus the summed overlap excess.
struct LikelihoodCounts {
    std::array<std::array<std::int64_t, kCellStates>, kCellStates> n{};
    std::int64_t gamma = 0;  ///< sum over cells of max(sigma - 1, 0)
    std::int64_t overlap_cells = 0;  ///< cells with sigma >= 2

    std::int64_t matches() const { return n[0][0] + n[1][1] + n[2][2]; }
    std::int64_t total() const;
    bool operator==(const LikelihoodCounts&) const = default;
};

/// Terms sharing a lookup value are summed as integer counts first, so worlds with equal
/// count profiles score bit-identically regardless of cell arrangement.
double log_likelihood_from_counts(const LikelihoodCounts& counts, const LookupTable& lookup, double psi);

LikelihoodCounts likelihood_counts(const ClassifiedGrid& map_c, const SemanticWorld& world, int wall_thickness);

double likelihood_log(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params);

/// Types from world.types when present, otherwise classify_unit per unit.
std::vector<UnitType> unit_types(const SemanticWorld& world, const ScoringParams& params);

/// Evidence from types and relations, exact inference over the knowledge base, threshold.
ThetaMatrix compute_theta(const std::vector<UnitType>& types, const RelationMatrix& relations,
                          const ScoringParams& params);
/// Uses world.types / world.relations, computing whichever is absent.
ThetaMatrix compute_theta(const SemanticWorld& world, const ScoringParams& params);

struct NeighbourWalls {
    Side side_p = Side::Right;
    Side side_q = Side::Left;
    int length_p = 0;
    int length_q = 0;
    int distance = 0;  ///< perpendicular distance between the supporting lines
    int length_difference() const { return length_p > length_q ? length_p - length_q : length_q - length_p; }
};

/// Opposite-facing walls with the nearest supporting lines; ties go to the larger overlap of
/// the projections, then to the fixed side order Right/Left, Left/Right, Top/Bottom, Bottom/Top.
NeighbourWalls neighbour_walls(const Rect& p, const Rect& q);

struct PairTerm {
    int p = 0;
    int q = 0;
    int d = 0;
    double log_b = 0.0;
};

/// Per ordered pair with theta true.
std::vector<PairTerm> prior_terms(const SemanticWorld& world, const ThetaMatrix& theta, const ScoringParams& params);
double prior_log(const SemanticWorld& world, const ThetaMatrix& theta, const ScoringParams& params);

struct PosteriorScore {
    double log_likelihood = 0.0;
    double log_prior = 0.0;
    double log_posterior = 0.0;
    LikelihoodCounts counts;
    double overlap_penalty = 0.0;  ///< gamma * ln psi
    double match_total = 0.0;      ///< lookup part of the likelihood
    std::vector<PairTerm> pairs;
};

PosteriorScore posterior_log(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params);

double cell_prediction_rate(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params);

/// Types, relations and theta filled in from the geometry.
void annotate(SemanticWorld& world, const ScoringParams& params, bool keep_types = false);

/// Memoizes compute_theta, which depends only on (T, R). Thread-safe.
class ThetaCache {
public:
    explicit ThetaCache(std::size_t capacity = 4096) : capacity_(capacity) {}

    ThetaMatrix get(const std::vector<UnitType>& types, const RelationMatrix& relations, const ScoringParams& params);

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::map<std::vector<std::uint8_t>, ThetaMatrix> entries_;
};

/// Likelihood counts that follow a world through local edits. A proposal is evaluated
/// against dirty rectangles and either committed or dropped.
class IncrementalLikelihood {
public:
    IncrementalLikelihood(const ClassifiedGrid& map_c, const SemanticWorld& world, int wall_thickness);

    const LikelihoodCounts& counts() const { return counts_; }
    const std::vector<CellState>& prediction() const { return states_; }

    /// Counts for `world`, assumed to differ from the tracked world only inside `dirty`.
    LikelihoodCounts evaluate(const SemanticWorld& world, const std::vector<Rect>& dirty);
    /// Adopts the last evaluated world.
    void commit();

private:
    struct Patch {
        std::size_t cell;
        CellState state;
        std::uint16_t overlap;
    };

    const ClassifiedGrid* map_;
    int wall_thickness_;
    std::vector<CellState> states_;
    std::vector<std::uint16_t> overlap_;
    LikelihoodCounts counts_;
    LikelihoodCounts pending_counts_;
    std::vector<Patch> pending_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
    std::vector<CellState> scratch_states_;
    std::vector<std::uint16_t> scratch_overlap_;
};

/// Rectangles covering every cell whose prediction can differ between the two worlds.
std::vector<Rect> dirty_between(const SemanticWorld& before, const SemanticWorld& after, int wall_thickness);

}  // namespace semloft
