#include "semloft/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semloft/error.hpp"

namespace semloft {

void LookupTable::validate() const
{
    for (const auto& row : p) {
        double sum = 0.0;
        for (double v : row) {
            if (!(v > 0.0 && v <= 1.0))
                throw Error(ErrorKind::Config, "lookup entries must lie in (0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error(ErrorKind::Config, "lookup rows must sum to 1");
    }
}

void ScoringParams::validate() const
{
    if (!(psi > 0.0 && psi < 1.0))
        throw Error(ErrorKind::Config, "psi must lie in (0,1)");
    if (!(gaussian_sigma > 0.0))
        throw Error(ErrorKind::Config, "gaussian sigma must be positive");
    if (!(theta_threshold > 0.0 && theta_threshold < 1.0))
        throw Error(ErrorKind::Config, "theta threshold must lie in (0,1)");
    lookup.validate();
    classify.validate();
    if (raster.wall_thickness < 1)
        throw Error(ErrorKind::Config, "wall thickness must be at least 1 cell");
    if (relations.dilation_radius < 0 || relations.overlap_min_cells < 1)
        throw Error(ErrorKind::Config, "relation detection parameters out of range");
    if (!(unit_classes.area_big > 0.0 && unit_classes.ratio_big >= 1.0))
        throw Error(ErrorKind::Config, "unit class thresholds out of range");
}

std::int64_t LikelihoodCounts::total() const
{
    std::int64_t t = 0;
    for (const auto& row : n)
        for (auto v : row)
            t += v;
    return t;
}

double log_likelihood_from_counts(const LikelihoodCounts& counts, const LookupTable& lookup, double psi)
{
    std::map<double, std::int64_t> grouped;
    for (int w = 0; w < kCellStates; ++w)
        for (int m = 0; m < kCellStates; ++m)
            if (counts.n[w][m] != 0)
                grouped[lookup.p[w][m]] += counts.n[w][m];
    double total = 0.0;
    for (const auto& [value, count] : grouped)
        total += double(count) * std::log(value);
    if (counts.gamma != 0)
        total += double(counts.gamma) * std::log(psi);
    return total;
}

namespace {

void check_dims(const ClassifiedGrid& map_c, int width, int height)
{
    if (map_c.width != width || map_c.height != height)
        throw Error(ErrorKind::Geometry, "map and world raster dimensions differ");
}

}  // namespace

LikelihoodCounts likelihood_counts(const ClassifiedGrid& map_c, const SemanticWorld& world, int wall_thickness)
{
    WorldRasterParams raster{wall_thickness, map_c.width, map_c.height};
    const ClassifiedGrid pred = rasterize(world, raster);
    const auto sigma = overlap_count_field(world, map_c.width, map_c.height);
    LikelihoodCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++c.n[int(pred.cells[i])][int(map_c.cells[i])];
        if (sigma[i] >= 2) {
            c.gamma += sigma[i] - 1;
            ++c.overlap_cells;
        }
    }
    return c;
}

double likelihood_log(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params)
{
    check_dims(map_c, params.raster.width, params.raster.height);
    return log_likelihood_from_counts(likelihood_counts(map_c, world, params.raster.wall_thickness), params.lookup,
                                      params.psi);
}

std::vector<UnitType> unit_types(const SemanticWorld& world, const ScoringParams& params)
{
    if (world.types.size() == world.units.size())
        return world.types;
    std::vector<UnitType> types;
    types.reserve(world.units.size());
    for (const Unit& u : world.units)
        types.push_back(classify_unit(u, params.unit_classes));
    return types;
}

ThetaMatrix compute_theta(const std::vector<UnitType>& types, const RelationMatrix& relations,
                          const ScoringParams& params)
{
    const int n = int(types.size());
    if (relations.n != n)
        throw Error(ErrorKind::Geometry, "relation matrix size differs from the unit count");
    ThetaMatrix theta(n);
    if (n == 0)
        return theta;
    const mln::KnowledgeBase& kb = params.kb;
    std::vector<std::string> constants;
    constants.reserve(n);
    for (int i = 0; i < n; ++i)
        constants.push_back("U" + std::to_string(i));
    mln::Evidence ev(kb, n);
    const int room = kb.predicate_index("Room");
    const int corr = kb.predicate_index("Corr");
    const int hall = kb.predicate_index("Hall");
    const int adj = kb.predicate_index("Adj");
    const int irr = kb.predicate_index("Irr");
    const int sale = kb.predicate_index("SaLe");
    if (room < 0 || corr < 0 || hall < 0 || adj < 0 || irr < 0 || sale < 0)
        throw Error(ErrorKind::Config, "knowledge base lacks the Room/Corr/Hall/Adj/Irr/SaLe predicates");
    for (int i = 0; i < n; ++i) {
        const int p = types[i] == UnitType::Room ? room : types[i] == UnitType::Corridor ? corr : hall;
        ev.set(p, {i});
    }
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            ev.set(relations.adjacent(p, q) ? adj : irr, {p, q});
    const mln::GroundNetwork net = mln::ground(kb, constants, ev);
    const mln::QueryResult res = mln::infer_exact(net);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            if (p != q)
                theta.set(p, q, res.probability(net, {sale, {p, q}}) > params.theta_threshold);
    return theta;
}

ThetaMatrix compute_theta(const SemanticWorld& world, const ScoringParams& params)
{
    const RelationMatrix rel = world.relations && world.relations->n == world.size()
                                   ? *world.relations
                                   : detect_relations(world, params.relations);
    return compute_theta(unit_types(world, params), rel, params);
}

NeighbourWalls neighbour_walls(const Rect& p, const Rect& q)
{
    auto span_overlap = [](int a0, int a1, int b0, int b1) { return std::max(0, std::min(a1, b1) - std::max(a0, b0)); };
    struct Candidate {
        NeighbourWalls walls;
        int overlap;
    };
    const Candidate cands[4] = {
        {{Side::Right, Side::Left, p.height(), q.height(), std::abs(p.x1 - q.x0)}, span_overlap(p.y0, p.y1, q.y0, q.y1)},
        {{Side::Left, Side::Right, p.height(), q.height(), std::abs(p.x0 - q.x1)}, span_overlap(p.y0, p.y1, q.y0, q.y1)},
        {{Side::Top, Side::Bottom, p.width(), q.width(), std::abs(p.y1 - q.y0)}, span_overlap(p.x0, p.x1, q.x0, q.x1)},
        {{Side::Bottom, Side::Top, p.width(), q.width(), std::abs(p.y0 - q.y1)}, span_overlap(p.x0, p.x1, q.x0, q.x1)},
    };
    const Candidate* best = &cands[0];
    for (const Candidate& c : cands)
        if (c.walls.distance < best->walls.distance ||
            (c.walls.distance == best->walls.distance && c.overlap > best->overlap))
            best = &c;
    return best->walls;
}

std::vector<PairTerm> prior_terms(const SemanticWorld& world, const ThetaMatrix& theta, const ScoringParams& params)
{
    if (theta.n != world.size())
        throw Error(ErrorKind::Geometry, "theta size differs from the unit count");
    std::vector<PairTerm> terms;
    const double denom = 2.0 * params.gaussian_sigma * params.gaussian_sigma;
    for (int p = 0; p < theta.n; ++p)
        for (int q = 0; q < theta.n; ++q) {
            if (p == q || !theta.at(p, q))
                continue;
            const int d = neighbour_walls(world.units[p].rect, world.units[q].rect).length_difference();
            const double dd = params.squared_distance ? double(d) * double(d) : double(d);
            terms.push_back({p, q, d, -dd / denom});
        }
    return terms;
}

double prior_log(const SemanticWorld& world, const ThetaMatrix& theta, const ScoringParams& params)
{
    double total = 0.0;
    for (const PairTerm& t : prior_terms(world, theta, params))
        total += t.log_b;
    return total;
}

PosteriorScore posterior_log(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params)
{
    check_dims(map_c, params.raster.width, params.raster.height);
    PosteriorScore s;
    s.counts = likelihood_counts(map_c, world, params.raster.wall_thickness);
    s.log_likelihood = log_likelihood_from_counts(s.counts, params.lookup, params.psi);
    s.overlap_penalty = s.counts.gamma != 0 ? double(s.counts.gamma) * std::log(params.psi) : 0.0;
    LikelihoodCounts matches_only = s.counts;
    matches_only.gamma = 0;
    s.match_total = log_likelihood_from_counts(matches_only, params.lookup, params.psi);
    const ThetaMatrix theta = world.theta && world.theta->n == world.size() ? *world.theta : compute_theta(world, params);
    s.pairs = prior_terms(world, theta, params);
    for (const PairTerm& t : s.pairs)
        s.log_prior += t.log_b;
    s.log_posterior = s.log_likelihood + s.log_prior;
    return s;
}

double cell_prediction_rate(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params)
{
    check_dims(map_c, params.raster.width, params.raster.height);
    const ClassifiedGrid pred = rasterize(world, params.raster);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        hits += pred.cells[i] == map_c.cells[i];
    return pred.size() == 0 ? 0.0 : double(hits) / double(pred.size());
}

void annotate(SemanticWorld& world, const ScoringParams& params, bool keep_types)
{
    if (!keep_types || world.types.size() != world.units.size()) {
        world.types.clear();
        world.types = unit_types(world, params);
    }
    world.relations = detect_relations(world, params.relations);
    world.theta = compute_theta(world.types, *world.relations, params);
}

ThetaMatrix ThetaCache::get(const std::vector<UnitType>& types, const RelationMatrix& relations,
                            const ScoringParams& params)
{
    std::vector<std::uint8_t> key;
    key.reserve(types.size() + relations.entries.size());
    for (UnitType t : types)
        key.push_back(std::uint8_t(t));
    for (Relation r : relations.entries)
        key.push_back(std::uint8_t(r));
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end())
            return it->second;
    }
    ThetaMatrix theta = compute_theta(types, relations, params);
    std::lock_guard lock(mutex_);
    if (entries_.size() >= capacity_)
        entries_.clear();
    entries_.emplace(std::move(key), theta);
    return theta;
}

IncrementalLikelihood::IncrementalLikelihood(const ClassifiedGrid& map_c, const SemanticWorld& world, int wall_thickness)
    : map_(&map_c), wall_thickness_(wall_thickness)
{
    const Rect bounds = map_c.bounds();
    states_.resize(map_c.size());
    overlap_.resize(map_c.size());
    rasterize_region(world, wall_thickness, bounds, states_, overlap_);
    for (std::size_t i = 0; i < states_.size(); ++i) {
        ++counts_.n[int(states_[i])][int(map_c.cells[i])];
        if (overlap_[i] >= 2) {
            counts_.gamma += overlap_[i] - 1;
            ++counts_.overlap_cells;
        }
    }
    stamp_.assign(map_c.size(), 0);
    pending_counts_ = counts_;
}

LikelihoodCounts IncrementalLikelihood::evaluate(const SemanticWorld& world, const std::vector<Rect>& dirty)
{
    pending_.clear();
    pending_counts_ = counts_;
    if (++epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        epoch_ = 1;
    }
    const Rect bounds = map_->bounds();
    const int width = map_->width;
    for (const Rect& raw : dirty) {
        const Rect r = intersect(raw, bounds);
        if (r.empty())
            continue;
        const std::size_t area = std::size_t(r.area());
        scratch_states_.resize(area);
        scratch_overlap_.resize(area);
        rasterize_region(world, wall_thickness_, r, scratch_states_, scratch_overlap_);
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x) {
                const std::size_t cell = std::size_t(y) * width + x;
                if (stamp_[cell] == epoch_)
                    continue;
                stamp_[cell] = epoch_;
                const std::size_t local = std::size_t(y - r.y0) * r.width() + (x - r.x0);
                const CellState ns = scratch_states_[local];
                const std::uint16_t no = scratch_overlap_[local];
                const CellState os = states_[cell];
                const std::uint16_t oo = overlap_[cell];
                if (ns == os && no == oo)
                    continue;
                const int m = int(map_->cells[cell]);
                --pending_counts_.n[int(os)][m];
                ++pending_counts_.n[int(ns)][m];
                if (oo >= 2) {
                    pending_counts_.gamma -= oo - 1;
                    --pending_counts_.overlap_cells;
                }
                if (no >= 2) {
                    pending_counts_.gamma += no - 1;
                    ++pending_counts_.overlap_cells;
                }
                pending_.push_back({cell, ns, no});
            }
    }
    return pending_counts_;
}

void IncrementalLikelihood::commit()
{
    for (const Patch& p : pending_) {
        states_[p.cell] = p.state;
        overlap_[p.cell] = p.overlap;
    }
    pending_.clear();
    counts_ = pending_counts_;
}

namespace {

std::vector<Rect> door_carves(const SemanticWorld& world, int t)
{
    std::vector<Rect> out;
    for (const Door& d : world.doors)
        if (auto c = door_carve(world, d, t))
            out.push_back(*c);
    std::sort(out.begin(), out.end());
    return out;
}

// Elements of a that are not matched in b (multiset difference of sorted ranges).
template <typename T>
std::vector<T> multiset_minus(const std::vector<T>& a, const std::vector<T>& b)
{
    std::vector<T> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

std::vector<Rect> dirty_between(const SemanticWorld& before, const SemanticWorld& after, int t)
{
    std::vector<Rect> ub, ua;
    for (const Unit& u : before.units)
        ub.push_back(u.rect);
    for (const Unit& u : after.units)
        ua.push_back(u.rect);
    std::sort(ub.begin(), ub.end());
    std::sort(ua.begin(), ua.end());
    const auto removed = multiset_minus(ub, ua);
    const auto added = multiset_minus(ua, ub);
    std::vector<Rect> dirty;
    if (removed.size() == added.size()) {
        // Any pairing is sound; pairing by largest intersection keeps the strips small.
        std::vector<std::uint8_t> used(added.size(), 0);
        for (const Rect& r : removed) {
            std::size_t best = 0;
            std::int64_t best_area = -1;
            for (std::size_t j = 0; j < added.size(); ++j)
                if (!used[j] && intersect(r, added[j]).area() > best_area) {
                    best = j;
                    best_area = intersect(r, added[j]).area();
                }
            used[best] = 1;
            const auto strips = changed_region(r, added[best], t);
            dirty.insert(dirty.end(), strips.begin(), strips.end());
        }
    } else {
        dirty.insert(dirty.end(), removed.begin(), removed.end());
        dirty.insert(dirty.end(), added.begin(), added.end());
    }
    const auto cb = door_carves(before, t);
    const auto ca = door_carves(after, t);
    for (const Rect& r : multiset_minus(cb, ca))
        dirty.push_back(r);
    for (const Rect& r : multiset_minus(ca, cb))
        dirty.push_back(r);
    return dirty;
}

}  // namespace semloft
