#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "semloft/detectors.hpp"
#include "semloft/scoring.hpp"
#include "semloft/world.hpp"

namespace semloft {

enum class KernelKind : std::uint8_t { Add, Remove, Split, Merge, Shrink, Dilate, AllocateDoor, DeleteDoor, Interchange };

constexpr int kKernelCount = 9;

std::string_view to_string(KernelKind kind);
KernelKind inverse(KernelKind kind);

enum class InitMode : std::uint8_t { Random, Detected };

struct ChainConfig {
    /// Indexed by KernelKind.
    std::array<double, kKernelCount> kernel_weights{0.15, 0.15, 0.1, 0.1, 0.15, 0.15, 0.075, 0.075, 0.05};
    long max_iterations = 20000;
    long burn_in = 0;
    std::uint64_t seed = 1;
    InitMode init = InitMode::Detected;
    bool anneal = true;
    double t0 = 5.0;
    double decay = 0.999;
    long record_every = 0;  ///< 0 records nothing
    double p_geo = 0.5;
    int max_step = 32;
    /// Inclusion probability of each door option in composite Add and Split moves.
    double p_attach = 0.5;
    /// Mixture weight of the uniform random rectangle in Add.
    double random_add = 0.1;
    /// A candidate is eligible for Add while its overlap with existing units stays at or below
    /// this fraction of its area.
    double add_overlap_max = 0.2;
    int chains = 1;

    double temperature(long iteration) const;
    void validate() const;
};

/// Door described by the rectangles of its two units rather than by indices.
struct DoorSpec {
    Rect a;
    Rect b;
    Axis axis = Axis::Horizontal;
    int start = 0;
    int end = 0;

    friend auto operator<=>(const DoorSpec&, const DoorSpec&) = default;
};

/// One concrete move. Units are named by their rectangles (unique within a valid world).
///   Add: rect, doors        Remove: rect
///   Split: rect, axis (axis of the new wall), cut, doors (between the two parts)
///   Merge: rect, other (abutting pair, rect first)
///   Shrink/Dilate: rect, side, step
///   AllocateDoor/DeleteDoor: door
///   Interchange: rect, other (rect lower/left), axis (axis of the shared wall), cut (signed shift)
struct Move {
    KernelKind kind = KernelKind::Add;
    Rect rect;
    Rect other;
    Axis axis = Axis::Horizontal;
    int cut = 0;
    Side side = Side::Left;
    int step = 0;
    DoorSpec door;
    std::vector<DoorSpec> doors;

    bool operator==(const Move&) const = default;
};

struct Proposal {
    Move move;
    SemanticWorld new_world;
    double log_q_forward = 0.0;  ///< includes the kernel selection probability
    double log_q_reverse = 0.0;
};

/// Shared, immutable context of a chain.
struct ChainContext {
    const ClassifiedGrid* map = nullptr;
    ScoringParams scoring;
    WorldRules rules;
    ChainConfig config;
    Detections detections;

    int width() const { return map->width; }
    int height() const { return map->height; }
};

/// Proposal machinery for the nine kernels. Worlds handed in must be canonical and carry
/// relations (see prepare_world).
class Kernels {
public:
    explicit Kernels(const ChainContext& ctx);

    bool applicable(KernelKind kind, const SemanticWorld& world) const;
    /// log Phi(kind | world): weight renormalized over applicable kernels; -inf if inapplicable.
    double log_select(KernelKind kind, const SemanticWorld& world) const;

    Move sample(KernelKind kind, const SemanticWorld& world, std::mt19937_64& rng) const;
    /// Log probability that sample(kind, world) yields `move`; -inf if it never can.
    double log_prob(const SemanticWorld& world, const Move& move) const;
    /// The resulting canonical world with relations, or nullopt if the move breaks a constraint.
    std::optional<SemanticWorld> apply(const SemanticWorld& world, const Move& move) const;
    /// Move that takes `after` back to `before`.
    Move inverse(const SemanticWorld& before, const Move& move) const;

    /// Full proposal: kernel already chosen; nullopt if the sampled move is invalid.
    std::optional<Proposal> propose(KernelKind kind, const SemanticWorld& world, std::mt19937_64& rng) const;

    // Enumerations shared with tests.
    std::vector<DoorSpec> add_door_options(const SemanticWorld& world, const Rect& rect) const;
    std::vector<DoorSpec> split_door_options(const SemanticWorld& world, const Rect& a, const Rect& b) const;
    /// Allocate options with their total gap support.
    std::vector<std::pair<DoorSpec, double>> allocate_options(const SemanticWorld& world) const;
    /// Abutting unit pairs with identical perpendicular extent, as (lower/left, upper/right).
    std::vector<std::pair<int, int>> abutting_pairs(const SemanticWorld& world) const;
    std::vector<int> eligible_candidates(const SemanticWorld& world) const;
    /// Units, abutting pairs and doors whose removal the paired kernel can propose back.
    /// Remove, Merge and DeleteDoor draw uniformly from these.
    std::vector<int> removable_units(const SemanticWorld& world) const;
    std::vector<std::pair<int, int>> mergeable_pairs(const SemanticWorld& world) const;
    std::vector<int> deletable_doors(const SemanticWorld& world) const;
    double log_random_rect() const;
    double log_step(int step) const;

    const ChainContext& context() const { return *ctx_; }

private:
    double log_prob_add(const SemanticWorld& world, const Move& move) const;
    double log_doors_subset(const std::vector<DoorSpec>& options, const std::vector<DoorSpec>& chosen) const;
    std::vector<DoorSpec> sample_subset(const std::vector<DoorSpec>& options, std::mt19937_64& rng) const;
    int splittable_axes(const Rect& r) const;

    const ChainContext* ctx_;
};

/// Canonical order plus types and relations.
void prepare_world(SemanticWorld& world, const ScoringParams& params);

DoorSpec door_spec(const SemanticWorld& world, const Door& door);
/// Index-based door for a spec, or nullopt if a rectangle is missing.
std::optional<Door> resolve_door(const SemanticWorld& world, const DoorSpec& spec);

/// Posterior of a prepared world: incremental-free reference evaluation.
double score_world(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params,
                   ThetaCache* cache = nullptr);

/// min(1, exp(delta / T + log_q_reverse - log_q_forward)), with NaN-free handling of -inf.
double acceptance_probability(double log_post_new, double log_post_old, double log_q_forward, double log_q_reverse,
                              double temperature);

struct KernelStats {
    long selected = 0;
    long invalid = 0;
    long accepted = 0;
};

struct TraceSample {
    long iteration = 0;
    double log_posterior = 0.0;
    SemanticWorld world;
};

struct ChainTrace {
    std::vector<TraceSample> samples;
    SemanticWorld best_world;
    double best_score = -std::numeric_limits<double>::infinity();
    long best_iteration = 0;
    SemanticWorld final_world;
    double final_score = 0.0;
    std::array<KernelStats, kKernelCount> kernels{};
    std::uint64_t seed = 0;
    int chain_index = 0;

    double acceptance_rate() const;
};

struct RunOptions {
    /// Starting world instead of the configured initialization.
    std::optional<SemanticWorld> initial;
    /// Proposals whose result fails this predicate are rejected.
    std::function<bool(const SemanticWorld&)> admissible;
    /// Called after every iteration with the current state.
    std::function<void(long iteration, const SemanticWorld& world, double log_posterior)> observer;
};

/// Greedy initialization from unit candidates, then door options, while the posterior improves.
SemanticWorld detected_init(const ChainContext& ctx);
SemanticWorld random_init(const ChainContext& ctx, std::mt19937_64& rng);

/// One chain with config.seed.
ChainTrace run_chain(const ChainContext& ctx, const RunOptions& options = {});

/// config.chains independent chains with seeds seed, seed+1, ...; returns the best trace
/// (lowest chain index on ties).
ChainTrace run(const ChainContext& ctx, const RunOptions& options = {});

struct ExactPosterior {
    std::vector<SemanticWorld> worlds;
    std::vector<double> log_posterior;
    std::vector<double> probability;
    std::size_t argmax = 0;
};

/// Exact normalized posterior over a finite family (at most `limit` worlds, Capacity otherwise).
ExactPosterior enumerate_posterior(const ClassifiedGrid& map_c, std::vector<SemanticWorld> family,
                                   const ScoringParams& params, std::size_t limit = 10000);

/// Single-unit worlds whose corners range over [lo, hi] per coordinate (inclusive), keeping
/// only rectangles with both sides at least min_side.
std::vector<SemanticWorld> single_unit_family(const Rect& lo, const Rect& hi, int min_side);

}  // namespace semloft
