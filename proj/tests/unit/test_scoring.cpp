#include <doctest.h>

#include <cmath>
#include <random>

#include "semloft/error.hpp"
#include "semloft/scoring.hpp"

using namespace semloft;

namespace {

ScoringParams params_for(int width, int height)
{
    ScoringParams p;
    p.raster = {2, width, height};
    return p;
}

SemanticWorld pair_world(const Rect& a, const Rect& b)
{
    SemanticWorld w;
    w.units = {{a}, {b}};
    w.types = {UnitType::Room, UnitType::Room};
    return w;
}

Rect random_rect(std::mt19937_64& rng, int width, int height)
{
    std::uniform_int_distribution<int> wx(6, 40), wy(6, 30);
    const int w = wx(rng), h = wy(rng);
    const int x = std::uniform_int_distribution<int>(0, width - w)(rng);
    const int y = std::uniform_int_distribution<int>(0, height - h)(rng);
    return {x, y, x + w, y + h};
}

}  // namespace

TEST_CASE("likelihood: a perfect match scores N ln 0.8 and one flip costs ln 0.1 - ln 0.8")
{
    const SemanticWorld w = pair_world({5, 5, 40, 40}, {40, 5, 70, 40});
    const ScoringParams p = params_for(80, 50);
    ClassifiedGrid map = rasterize(w, p.raster);
    const double n = double(map.size());
    CHECK(likelihood_log(map, w, p) == n * std::log(0.8));

    map.at(20, 20) = CellState::Occupied;  // predicted free
    CHECK(std::abs(likelihood_log(map, w, p) - (n - 1) * std::log(0.8) - std::log(0.1)) < 1e-9);
}

TEST_CASE("likelihood: overlap excess is charged per extra unit")
{
    SemanticWorld w;
    w.units = {{{0, 0, 10, 10}}, {{9, 9, 20, 20}}, {{9, 0, 20, 10}}};
    const ScoringParams p = params_for(30, 30);
    const LikelihoodCounts c = likelihood_counts(rasterize(w, p.raster), w, 2);
    // (9,9) is covered three times; the rest of the shared strips twice.
    CHECK(c.overlap_cells == 1 + 9 + 10);
    CHECK(c.gamma == 2 + 9 + 10);
    LikelihoodCounts only_overlap;
    only_overlap.gamma = 2;
    CHECK(log_likelihood_from_counts(only_overlap, p.lookup, 0.5) == doctest::Approx(2.0 * std::log(0.5)));
}

TEST_CASE("likelihood: mismatched dimensions are rejected")
{
    const ScoringParams p = params_for(30, 30);
    CHECK_THROWS_AS(likelihood_log(ClassifiedGrid(20, 30), SemanticWorld{}, p), Error);
}

TEST_CASE("lookup table validation")
{
    LookupTable t;
    CHECK_NOTHROW(t.validate());
    t.p[0][0] = 0.7;
    CHECK_THROWS_AS(t.validate(), Error);
    t.p[0] = {0.0, 0.5, 0.5};
    CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("theta: four-unit layout activates only the room pair")
{
    SemanticWorld w;
    w.units = {{{0, 42, 40, 80}}, {{40, 42, 80, 80}}, {{0, 30, 100, 42}}, {{60, 0, 100, 30}}};
    w.types = {UnitType::Room, UnitType::Room, UnitType::Corridor, UnitType::Room};
    const ScoringParams p = params_for(100, 80);
    const ThetaMatrix theta = compute_theta(w, p);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            CHECK(theta.at(a, b) == ((a == 0 && b == 1) || (a == 1 && b == 0)));
}

TEST_CASE("theta: single unit and threshold sweep")
{
    ScoringParams p = params_for(60, 40);
    SemanticWorld one;
    one.units = {{{0, 0, 20, 20}}};
    one.types = {UnitType::Room};
    const ThetaMatrix t1 = compute_theta(one, p);
    CHECK(t1.n == 1);
    CHECK_FALSE(t1.at(0, 0));

    const SemanticWorld w = pair_world({0, 0, 20, 20}, {20, 0, 40, 20});
    CHECK(compute_theta(w, p).at(0, 1));
    p.theta_threshold = 0.99;
    CHECK_FALSE(compute_theta(w, p).at(0, 1));
}

TEST_CASE("theta cache agrees with direct inference")
{
    const ScoringParams p = params_for(60, 40);
    const SemanticWorld w = pair_world({0, 0, 20, 20}, {20, 0, 40, 20});
    const RelationMatrix r = detect_relations(w, p.relations);
    ThetaCache cache;
    CHECK(cache.get(w.types, r, p) == compute_theta(w.types, r, p));
    CHECK(cache.get(w.types, r, p) == compute_theta(w.types, r, p));
}

TEST_CASE("neighbour walls pick the facing sides")
{
    const NeighbourWalls nw = neighbour_walls({0, 0, 20, 30}, {20, 0, 40, 40});
    CHECK(nw.side_p == Side::Right);
    CHECK(nw.side_q == Side::Left);
    CHECK(nw.length_p == 30);
    CHECK(nw.length_q == 40);
    CHECK(nw.length_difference() == 10);
    CHECK(nw.distance == 0);

    const NeighbourWalls above = neighbour_walls({0, 20, 30, 40}, {0, 0, 25, 20});
    CHECK(above.side_p == Side::Bottom);
    CHECK(above.side_q == Side::Top);
    CHECK(above.length_difference() == 5);
}

TEST_CASE("prior: empty, matched and mismatched pairs")
{
    const ScoringParams p = params_for(60, 50);
    const SemanticWorld matched = pair_world({0, 0, 20, 30}, {20, 0, 40, 30});
    ThetaMatrix none(2);
    CHECK(prior_log(matched, none, p) == 0.0);

    ThetaMatrix on(2);
    on.set(0, 1, true);
    on.set(1, 0, true);
    CHECK(prior_log(matched, on, p) == 0.0);

    const SemanticWorld uneven = pair_world({0, 0, 20, 30}, {20, 0, 40, 40});
    const auto terms = prior_terms(uneven, on, p);
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].d == 10);
    CHECK(terms[0].log_b == doctest::Approx(-0.2));
    CHECK(prior_log(uneven, on, p) == doctest::Approx(-0.4));
}

TEST_CASE("posterior: composition, overlap and the knowledge term")
{
    const ScoringParams p = params_for(80, 50);
    SemanticWorld w;
    w.units = {{{5, 5, 30, 40}}, {{50, 5, 75, 40}}};  // apart, so no theta pairs
    const ClassifiedGrid map = rasterize(w, p.raster);
    const PosteriorScore s = posterior_log(map, w, p);
    CHECK(s.log_prior == 0.0);
    CHECK(s.log_posterior == double(map.size()) * std::log(0.8));

    SemanticWorld crowded = w;
    crowded.units[1].rect = {29, 5, 54, 40};
    CHECK(posterior_log(map, crowded, p).log_posterior < s.log_posterior);

    // Same area and perimeter, so equal count profiles on a flat map; only the prior differs.
    const ClassifiedGrid flat(80, 50, CellState::Unknown);
    const SemanticWorld even = pair_world({0, 0, 20, 30}, {20, 0, 40, 30});
    const SemanticWorld odd = pair_world({0, 0, 20, 30}, {20, 0, 50, 20});
    const PosteriorScore se = posterior_log(flat, even, p);
    const PosteriorScore so = posterior_log(flat, odd, p);
    CHECK(se.log_likelihood == so.log_likelihood);
    CHECK(se.log_posterior > so.log_posterior);
}

TEST_CASE("cell prediction rate")
{
    const ScoringParams p = params_for(40, 30);
    SemanticWorld w;
    w.units = {{{5, 5, 30, 25}}};
    CHECK(cell_prediction_rate(rasterize(w, p.raster), w, p) == 1.0);

    ClassifiedGrid map(40, 30, CellState::Free);
    for (std::size_t i = 0; i < map.size(); i += 10)
        for (std::size_t k = 0; k < 3; ++k)
            map.cells[i + k] = CellState::Unknown;
    CHECK(cell_prediction_rate(map, SemanticWorld{}, p) == doctest::Approx(0.30));
}

TEST_CASE("incremental counts equal a full rescore after every edit")
{
    std::mt19937_64 rng(5);
    const int width = 120, height = 90;
    ClassifiedGrid map(width, height);
    std::uniform_int_distribution<int> state(0, 2);
    for (CellState& c : map.cells)
        c = CellState(state(rng));

    SemanticWorld world;
    for (int i = 0; i < 4; ++i)
        world.units.push_back({random_rect(rng, width, height)});
    IncrementalLikelihood inc(map, world, 2);
    CHECK(inc.counts() == likelihood_counts(map, world, 2));

    for (int step = 0; step < 300; ++step) {
        SemanticWorld next = world;
        const int roll = std::uniform_int_distribution<int>(0, 3)(rng);
        if (roll == 0 || next.units.empty()) {
            next.units.push_back({random_rect(rng, width, height)});
        } else if (roll == 1 && next.units.size() > 1) {
            next.units.erase(next.units.begin() + std::ptrdiff_t(rng() % next.units.size()));
        } else {
            Rect& r = next.units[rng() % next.units.size()].rect;
            const Rect moved = random_rect(rng, width, height);
            r = roll == 2 ? Rect{moved.x0, r.y0, std::max(moved.x0 + 6, std::min(r.x1, width)), r.y1} : moved;
            if (r.x1 > width)
                r = moved;
        }
        next.doors.clear();
        const LikelihoodCounts got = inc.evaluate(next, dirty_between(world, next, 2));
        const LikelihoodCounts full = likelihood_counts(map, next, 2);
        REQUIRE(got == full);
        if (step % 3 != 0) {  // also exercise dropped proposals
            inc.commit();
            world = next;
        }
    }
}

TEST_CASE("incremental counts follow door edits")
{
    std::mt19937_64 rng(9);
    ClassifiedGrid map(80, 60);
    std::uniform_int_distribution<int> state(0, 2);
    for (CellState& c : map.cells)
        c = CellState(state(rng));
    SemanticWorld world;
    world.units = {{{5, 5, 40, 50}}, {{40, 5, 75, 50}}};
    IncrementalLikelihood inc(map, world, 2);
    for (int step = 0; step < 100; ++step) {
        SemanticWorld next = world;
        if (!next.doors.empty() && rng() % 3 == 0) {
            next.doors.clear();
        } else {
            const int start = std::uniform_int_distribution<int>(7, 40)(rng);
            next.doors = {{0, 1, Axis::Vertical, start, start + int(rng() % 6) + 2}};
        }
        REQUIRE(inc.evaluate(next, dirty_between(world, next, 2)) == likelihood_counts(map, next, 2));
        inc.commit();
        world = next;
    }
}
