#include "semloft/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "semloft/error.hpp"

namespace semloft {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neg_inf(double p)
{
    return p > 0.0 ? std::log(p) : kNegInf;
}

int find_unit(const SemanticWorld& w, const Rect& r)
{
    for (int i = 0; i < w.size(); ++i)
        if (w.units[i].rect == r)
            return i;
    return -1;
}

int count_units(const SemanticWorld& w, const Rect& r)
{
    return int(std::count_if(w.units.begin(), w.units.end(), [&](const Unit& u) { return u.rect == r; }));
}

int geometric(double p, int max_step, std::mt19937_64& rng)
{
    // Inverse-CDF draw from the geometric law truncated to {1..max_step}.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double tail = std::pow(1.0 - p, max_step);
    const double u = unit(rng) * (1.0 - tail);
    double cdf = 0.0, pk = p;
    for (int k = 1; k <= max_step; ++k) {
        cdf += pk;
        if (u < cdf)
            return k;
        pk *= 1.0 - p;
    }
    return max_step;
}

template <typename T>
std::size_t pick(std::size_t n, T& rng)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Rect moved_wall(const Rect& r, Side side, int delta)
{
    // Positive delta moves the wall outwards.
    Rect out = r;
    switch (side) {
    case Side::Left: out.x0 -= delta; break;
    case Side::Right: out.x1 += delta; break;
    case Side::Bottom: out.y0 -= delta; break;
    case Side::Top: out.y1 += delta; break;
    }
    return out;
}

std::pair<Rect, Rect> split_rect(const Rect& r, Axis axis, int cut)
{
    if (axis == Axis::Vertical)
        return {{r.x0, r.y0, cut, r.y1}, {cut, r.y0, r.x1, r.y1}};
    return {{r.x0, r.y0, r.x1, cut}, {r.x0, cut, r.x1, r.y1}};
}

std::pair<Rect, Rect> interchanged(const Rect& a, const Rect& b, Axis axis, int shift)
{
    if (axis == Axis::Vertical)
        return {{a.x0, a.y0, a.x1 + shift, a.y1}, {b.x0 + shift, b.y0, b.x1, b.y1}};
    return {{a.x0, a.y0, a.x1, a.y1 + shift}, {b.x0, b.y0 + shift, b.x1, b.y1}};
}

DoorSpec substitute(DoorSpec d, const Rect& from, const Rect& to)
{
    if (d.a == from)
        d.a = to;
    if (d.b == from)
        d.b = to;
    return d;
}

}  // namespace

std::string_view to_string(KernelKind kind)
{
    switch (kind) {
    case KernelKind::Add: return "add";
    case KernelKind::Remove: return "remove";
    case KernelKind::Split: return "split";
    case KernelKind::Merge: return "merge";
    case KernelKind::Shrink: return "shrink";
    case KernelKind::Dilate: return "dilate";
    case KernelKind::AllocateDoor: return "allocate_door";
    case KernelKind::DeleteDoor: return "delete_door";
    case KernelKind::Interchange: return "interchange";
    }
    return "add";
}

KernelKind inverse(KernelKind kind)
{
    switch (kind) {
    case KernelKind::Add: return KernelKind::Remove;
    case KernelKind::Remove: return KernelKind::Add;
    case KernelKind::Split: return KernelKind::Merge;
    case KernelKind::Merge: return KernelKind::Split;
    case KernelKind::Shrink: return KernelKind::Dilate;
    case KernelKind::Dilate: return KernelKind::Shrink;
    case KernelKind::AllocateDoor: return KernelKind::DeleteDoor;
    case KernelKind::DeleteDoor: return KernelKind::AllocateDoor;
    case KernelKind::Interchange: return KernelKind::Interchange;
    }
    return kind;
}

double ChainConfig::temperature(long iteration) const
{
    if (!anneal)
        return 1.0;
    return std::max(1.0, t0 * std::pow(decay, double(iteration)));
}

void ChainConfig::validate() const
{
    double sum = 0.0;
    for (double w : kernel_weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorKind::Config, "kernel weights must be finite and nonnegative");
        sum += w;
    }
    if (!(sum > 0.0))
        throw Error(ErrorKind::Config, "kernel weights must not all be zero");
    if (max_iterations < 0 || burn_in < 0 || (max_iterations > 0 && burn_in >= max_iterations))
        throw Error(ErrorKind::Config, "burn-in must be smaller than the iteration count");
    if (record_every < 0)
        throw Error(ErrorKind::Config, "record interval must be nonnegative");
    if (!(t0 >= 1.0) || !(decay > 0.0 && decay <= 1.0))
        throw Error(ErrorKind::Config, "annealing needs t0 >= 1 and decay in (0,1]");
    if (!(p_geo > 0.0 && p_geo <= 1.0) || max_step < 1)
        throw Error(ErrorKind::Config, "step distribution parameters out of range");
    if (!(p_attach >= 0.0 && p_attach <= 1.0) || !(random_add >= 0.0 && random_add <= 1.0) ||
        !(add_overlap_max >= 0.0 && add_overlap_max <= 1.0))
        throw Error(ErrorKind::Config, "proposal probabilities must lie in [0,1]");
    if (chains < 1)
        throw Error(ErrorKind::Config, "at least one chain is required");
}

void prepare_world(SemanticWorld& world, const ScoringParams& params)
{
    canonicalize(world);
    world.types.clear();
    for (const Unit& u : world.units)
        world.types.push_back(classify_unit(u, params.unit_classes));
    world.relations = detect_relations(world, params.relations);
}

DoorSpec door_spec(const SemanticWorld& world, const Door& door)
{
    return {world.units[door.unit_a].rect, world.units[door.unit_b].rect, door.axis, door.start, door.end};
}

std::optional<Door> resolve_door(const SemanticWorld& world, const DoorSpec& spec)
{
    const int a = find_unit(world, spec.a);
    const int b = find_unit(world, spec.b);
    if (a < 0 || b < 0)
        return std::nullopt;
    return Door{a, b, spec.axis, spec.start, spec.end};
}

double score_world(const ClassifiedGrid& map_c, const SemanticWorld& world, const ScoringParams& params,
                   ThetaCache* cache)
{
    const LikelihoodCounts counts = likelihood_counts(map_c, world, params.raster.wall_thickness);
    const double ll = log_likelihood_from_counts(counts, params.lookup, params.psi);
    const auto types = unit_types(world, params);
    const RelationMatrix rel = world.relations && world.relations->n == world.size()
                                   ? *world.relations
                                   : detect_relations(world, params.relations);
    const ThetaMatrix theta = cache ? cache->get(types, rel, params) : compute_theta(types, rel, params);
    return ll + prior_log(world, theta, params);
}

double acceptance_probability(double log_post_new, double log_post_old, double log_q_forward, double log_q_reverse,
                              double temperature)
{
    if (log_q_reverse == kNegInf || log_post_new == kNegInf)
        return 0.0;
    const double x = (log_post_new - log_post_old) / temperature + log_q_reverse - log_q_forward;
    if (std::isnan(x))
        return 0.0;
    return x >= 0.0 ? 1.0 : std::exp(x);
}

// ---------------------------------------------------------------------------------------------

Kernels::Kernels(const ChainContext& ctx) : ctx_(&ctx) {}

double Kernels::log_step(int step) const
{
    const double p = ctx_->config.p_geo;
    const int k = ctx_->config.max_step;
    if (step < 1 || step > k)
        return kNegInf;
    const double norm = 1.0 - std::pow(1.0 - p, k);
    return std::log(p) + double(step - 1) * std::log1p(-p) - std::log(norm);
}

double Kernels::log_random_rect() const
{
    const int m = ctx_->rules.min_unit_side;
    auto pairs = [m](int extent) {
        const double c = double(extent - m + 1);
        return c <= 0.0 ? 0.0 : c * (c + 1.0) / 2.0;
    };
    const double nx = pairs(ctx_->width());
    const double ny = pairs(ctx_->height());
    if (nx <= 0.0 || ny <= 0.0)
        return kNegInf;
    return -std::log(nx) - std::log(ny);
}

int Kernels::splittable_axes(const Rect& r) const
{
    const int m = ctx_->rules.min_unit_side;
    return int(r.width() >= 2 * m) + int(r.height() >= 2 * m);
}

std::vector<int> Kernels::eligible_candidates(const SemanticWorld& world) const
{
    std::vector<int> out;
    const auto& cands = ctx_->detections.units;
    const Rect bounds{0, 0, ctx_->width(), ctx_->height()};
    const int m = ctx_->rules.min_unit_side;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const Rect& r = cands[i].rect;
        if (r.width() < m || r.height() < m || intersect(r, bounds) != r || !(cands[i].score > 0.0))
            continue;
        std::int64_t overlap = 0;
        for (const Unit& u : world.units)
            overlap += intersect(r, u.rect).area();
        if (double(overlap) <= ctx_->config.add_overlap_max * double(r.area()) && find_unit(world, r) < 0)
            out.push_back(int(i));
    }
    return out;
}

std::vector<DoorSpec> Kernels::add_door_options(const SemanticWorld& world, const Rect& rect) const
{
    SemanticWorld tmp;
    tmp.units = world.units;
    tmp.units.push_back({rect});
    const int n = tmp.size() - 1;
    std::vector<DoorSpec> out;
    for (const DoorCandidate& c : ctx_->detections.doors)
        for (int j = 0; j < n; ++j)
            if (auto d = fit_door(tmp, n, j, c.site, ctx_->scoring.raster.wall_thickness, ctx_->rules))
                out.push_back(door_spec(tmp, *d));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<DoorSpec> Kernels::split_door_options(const SemanticWorld&, const Rect& a, const Rect& b) const
{
    SemanticWorld tmp;
    tmp.units = {{a}, {b}};
    std::vector<DoorSpec> out;
    for (const DoorCandidate& c : ctx_->detections.doors)
        if (auto d = fit_door(tmp, 0, 1, c.site, ctx_->scoring.raster.wall_thickness, ctx_->rules))
            out.push_back(door_spec(tmp, *d));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::pair<DoorSpec, double>> Kernels::allocate_options(const SemanticWorld& world) const
{
    std::map<DoorSpec, double> acc;
    const int n = world.size();
    if (!world.relations || world.relations->n != n)
        throw Error(ErrorKind::Geometry, "allocate options need current relations");
    for (const DoorCandidate& c : ctx_->detections.doors)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (!world.relations->adjacent(i, j))
                    continue;
                auto d = fit_door(world, i, j, c.site, ctx_->scoring.raster.wall_thickness, ctx_->rules);
                if (!d)
                    continue;
                bool occupied = false;
                for (const Door& e : world.doors)
                    if (e.unit_a == d->unit_a && e.unit_b == d->unit_b && e.axis == d->axis && e.start < d->end &&
                        d->start < e.end)
                        occupied = true;
                if (!occupied)
                    acc[door_spec(world, *d)] += c.gap_support;
            }
    return {acc.begin(), acc.end()};
}

std::vector<int> Kernels::removable_units(const SemanticWorld& world) const
{
    std::vector<int> out;
    for (int i = 0; i < world.size(); ++i) {
        const Rect& r = world.units[i].rect;
        SemanticWorld rest;
        Move add;
        add.kind = KernelKind::Add;
        add.rect = r;
        for (int j = 0; j < world.size(); ++j)
            if (j != i)
                rest.units.push_back(world.units[j]);
        for (const Door& d : world.doors)
            if (d.unit_a == i || d.unit_b == i)
                add.doors.push_back(door_spec(world, d));
        if (log_prob_add(rest, add) > kNegInf)
            out.push_back(i);
    }
    return out;
}

std::vector<std::pair<int, int>> Kernels::mergeable_pairs(const SemanticWorld& world) const
{
    std::vector<std::pair<int, int>> out;
    for (const auto& [i, j] : abutting_pairs(world)) {
        std::vector<DoorSpec> between;
        for (const Door& d : world.doors)
            if ((d.unit_a == i && d.unit_b == j) || (d.unit_a == j && d.unit_b == i))
                between.push_back(door_spec(world, d));
        if (between.empty() ||
            log_doors_subset(split_door_options(world, world.units[i].rect, world.units[j].rect), between) > kNegInf)
            out.emplace_back(i, j);
    }
    return out;
}

std::vector<int> Kernels::deletable_doors(const SemanticWorld& world) const
{
    std::vector<int> out;
    const int t = ctx_->scoring.raster.wall_thickness;
    for (int k = 0; k < int(world.doors.size()); ++k) {
        const Door& e = world.doors[k];
        bool blocked = false;
        for (int o = 0; o < int(world.doors.size()); ++o) {
            const Door& f = world.doors[o];
            if (o != k && f.unit_a == e.unit_a && f.unit_b == e.unit_b && f.axis == e.axis && f.start < e.end &&
                e.start < f.end)
                blocked = true;
        }
        if (blocked)
            continue;
        for (const DoorCandidate& c : ctx_->detections.doors) {
            const auto d = fit_door(world, e.unit_a, e.unit_b, c.site, t, ctx_->rules);
            if (d && d->unit_a == e.unit_a && d->unit_b == e.unit_b && d->axis == e.axis && d->start == e.start &&
                d->end == e.end && c.gap_support > 0.0) {
                out.push_back(k);
                break;
            }
        }
    }
    return out;
}

std::vector<std::pair<int, int>> Kernels::abutting_pairs(const SemanticWorld& world) const
{
    std::vector<std::pair<int, int>> out;
    const int n = world.size();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const Rect& a = world.units[i].rect;
            const Rect& b = world.units[j].rect;
            if (a.y0 == b.y0 && a.y1 == b.y1) {
                if (a.x1 == b.x0)
                    out.emplace_back(i, j);
                else if (b.x1 == a.x0)
                    out.emplace_back(j, i);
            } else if (a.x0 == b.x0 && a.x1 == b.x1) {
                if (a.y1 == b.y0)
                    out.emplace_back(i, j);
                else if (b.y1 == a.y0)
                    out.emplace_back(j, i);
            }
        }
    return out;
}

bool Kernels::applicable(KernelKind kind, const SemanticWorld& world) const
{
    switch (kind) {
    case KernelKind::Add: return ctx_->config.random_add > 0.0 || !eligible_candidates(world).empty();
    case KernelKind::Remove: return !removable_units(world).empty();
    case KernelKind::Shrink:
    case KernelKind::Dilate: return world.size() > 0;
    case KernelKind::Split:
        return std::any_of(world.units.begin(), world.units.end(),
                           [&](const Unit& u) { return splittable_axes(u.rect) > 0; });
    case KernelKind::Merge: return !mergeable_pairs(world).empty();
    case KernelKind::Interchange: return !abutting_pairs(world).empty();
    case KernelKind::AllocateDoor: return !allocate_options(world).empty();
    case KernelKind::DeleteDoor: return !deletable_doors(world).empty();
    }
    return false;
}

double Kernels::log_select(KernelKind kind, const SemanticWorld& world) const
{
    const auto& w = ctx_->config.kernel_weights;
    if (!(w[int(kind)] > 0.0) || !applicable(kind, world))
        return kNegInf;
    double total = 0.0;
    for (int k = 0; k < kKernelCount; ++k)
        if (w[k] > 0.0 && (k == int(kind) || applicable(KernelKind(k), world)))
            total += w[k];
    return std::log(w[int(kind)] / total);
}

double Kernels::log_doors_subset(const std::vector<DoorSpec>& options, const std::vector<DoorSpec>& chosen) const
{
    std::vector<DoorSpec> sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        return kNegInf;
    if (!std::includes(options.begin(), options.end(), sorted.begin(), sorted.end()))
        return kNegInf;
    const double p = ctx_->config.p_attach;
    const std::size_t in = sorted.size();
    const std::size_t out = options.size() - in;
    double lp = 0.0;
    if (in > 0)
        lp += double(in) * log_or_neg_inf(p);
    if (out > 0)
        lp += double(out) * log_or_neg_inf(1.0 - p);
    return lp;
}

std::vector<DoorSpec> Kernels::sample_subset(const std::vector<DoorSpec>& options, std::mt19937_64& rng) const
{
    std::vector<DoorSpec> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const DoorSpec& d : options)
        if (unit(rng) < ctx_->config.p_attach)
            out.push_back(d);
    return out;
}

Move Kernels::sample(KernelKind kind, const SemanticWorld& world, std::mt19937_64& rng) const
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Move mv;
    mv.kind = kind;
    const int m = ctx_->rules.min_unit_side;
    switch (kind) {
    case KernelKind::Add: {
        const auto eligible = eligible_candidates(world);
        const double eps = eligible.empty() ? 1.0 : ctx_->config.random_add;
        if (unit(rng) < eps) {
            auto draw = [&](int extent, int& lo, int& hi) {
                std::uniform_int_distribution<int> coord(0, extent);
                do {
                    lo = coord(rng);
                    hi = coord(rng);
                } while (hi - lo < m);
            };
            draw(ctx_->width(), mv.rect.x0, mv.rect.x1);
            draw(ctx_->height(), mv.rect.y0, mv.rect.y1);
        } else {
            double total = 0.0;
            for (int i : eligible)
                total += ctx_->detections.units[i].score;
            double u = unit(rng) * total;
            int chosen = eligible.back();
            for (int i : eligible) {
                u -= ctx_->detections.units[i].score;
                if (u < 0.0) {
                    chosen = i;
                    break;
                }
            }
            mv.rect = ctx_->detections.units[chosen].rect;
        }
        mv.doors = sample_subset(add_door_options(world, mv.rect), rng);
        break;
    }
    case KernelKind::Remove: {
        const auto units = removable_units(world);
        mv.rect = world.units[units[pick(units.size(), rng)]].rect;
        break;
    }
    case KernelKind::Split: {
        std::vector<int> splittable;
        for (int i = 0; i < world.size(); ++i)
            if (splittable_axes(world.units[i].rect) > 0)
                splittable.push_back(i);
        const Rect& r = world.units[splittable[pick(splittable.size(), rng)]].rect;
        std::vector<Axis> axes;
        if (r.width() >= 2 * m)
            axes.push_back(Axis::Vertical);
        if (r.height() >= 2 * m)
            axes.push_back(Axis::Horizontal);
        mv.rect = r;
        mv.axis = axes[pick(axes.size(), rng)];
        const int lo = (mv.axis == Axis::Vertical ? r.x0 : r.y0) + m;
        const int hi = (mv.axis == Axis::Vertical ? r.x1 : r.y1) - m;
        mv.cut = std::uniform_int_distribution<int>(lo, hi)(rng);
        const auto [a, b] = split_rect(r, mv.axis, mv.cut);
        mv.doors = sample_subset(split_door_options(world, a, b), rng);
        break;
    }
    case KernelKind::Merge:
    case KernelKind::Interchange: {
        const auto pairs = kind == KernelKind::Merge ? mergeable_pairs(world) : abutting_pairs(world);
        const auto [i, j] = pairs[pick(pairs.size(), rng)];
        mv.rect = world.units[i].rect;
        mv.other = world.units[j].rect;
        mv.axis = mv.rect.y0 == mv.other.y0 && mv.rect.y1 == mv.other.y1 && mv.rect.x1 == mv.other.x0
                      ? Axis::Vertical
                      : Axis::Horizontal;
        if (kind == KernelKind::Interchange) {
            const int k = geometric(ctx_->config.p_geo, ctx_->config.max_step, rng);
            mv.cut = unit(rng) < 0.5 ? -k : k;
        }
        break;
    }
    case KernelKind::Shrink:
    case KernelKind::Dilate:
        mv.rect = world.units[pick(world.units.size(), rng)].rect;
        mv.side = Side(pick(4, rng));
        mv.step = geometric(ctx_->config.p_geo, ctx_->config.max_step, rng);
        break;
    case KernelKind::AllocateDoor: {
        const auto opts = allocate_options(world);
        double total = 0.0;
        for (const auto& o : opts)
            total += o.second;
        double u = unit(rng) * total;
        mv.door = opts.back().first;
        for (const auto& o : opts) {
            u -= o.second;
            if (u < 0.0) {
                mv.door = o.first;
                break;
            }
        }
        break;
    }
    case KernelKind::DeleteDoor: {
        const auto doors = deletable_doors(world);
        mv.door = door_spec(world, world.doors[doors[pick(doors.size(), rng)]]);
        break;
    }
    }
    return mv;
}

double Kernels::log_prob_add(const SemanticWorld& world, const Move& mv) const
{
    const auto eligible = eligible_candidates(world);
    const double eps = eligible.empty() ? 1.0 : ctx_->config.random_add;
    const int m = ctx_->rules.min_unit_side;
    const Rect& r = mv.rect;
    double p = 0.0;
    if (r.x0 >= 0 && r.y0 >= 0 && r.x1 <= ctx_->width() && r.y1 <= ctx_->height() && r.width() >= m &&
        r.height() >= m && eps > 0.0)
        p += eps * std::exp(log_random_rect());
    if (eps < 1.0) {
        double total = 0.0, hit = 0.0;
        for (int i : eligible) {
            total += ctx_->detections.units[i].score;
            if (ctx_->detections.units[i].rect == r)
                hit += ctx_->detections.units[i].score;
        }
        if (hit > 0.0)
            p += (1.0 - eps) * hit / total;
    }
    return log_or_neg_inf(p) + log_doors_subset(add_door_options(world, r), mv.doors);
}

double Kernels::log_prob(const SemanticWorld& world, const Move& mv) const
{
    const int n = world.size();
    const int m = ctx_->rules.min_unit_side;
    switch (mv.kind) {
    case KernelKind::Add: return log_prob_add(world, mv);
    case KernelKind::Remove: {
        const auto units = removable_units(world);
        const auto hits = std::count_if(units.begin(), units.end(),
                                        [&](int i) { return world.units[i].rect == mv.rect; });
        return units.empty() ? kNegInf : log_or_neg_inf(double(hits) / double(units.size()));
    }
    case KernelKind::Split: {
        const int hits = count_units(world, mv.rect);
        const Rect& r = mv.rect;
        const bool vertical = mv.axis == Axis::Vertical;
        const int extent = vertical ? r.width() : r.height();
        const int origin = vertical ? r.x0 : r.y0;
        if (hits == 0 || extent < 2 * m || mv.cut < origin + m || mv.cut > origin + extent - m)
            return kNegInf;
        const int splittable = int(std::count_if(world.units.begin(), world.units.end(),
                                                 [&](const Unit& u) { return splittable_axes(u.rect) > 0; }));
        const auto [a, b] = split_rect(r, mv.axis, mv.cut);
        return std::log(double(hits) / splittable) - std::log(double(splittable_axes(r))) -
               std::log(double(extent - 2 * m + 1)) + log_doors_subset(split_door_options(world, a, b), mv.doors);
    }
    case KernelKind::Merge:
    case KernelKind::Interchange: {
        const auto pairs = mv.kind == KernelKind::Merge ? mergeable_pairs(world) : abutting_pairs(world);
        if (pairs.empty())
            return kNegInf;
        const auto hits = std::count_if(pairs.begin(), pairs.end(), [&](const auto& pr) {
            return world.units[pr.first].rect == mv.rect && world.units[pr.second].rect == mv.other;
        });
        double lp = log_or_neg_inf(double(hits) / double(pairs.size()));
        if (mv.kind == KernelKind::Interchange)
            lp += std::log(0.5) + log_step(std::abs(mv.cut));
        return lp;
    }
    case KernelKind::Shrink:
    case KernelKind::Dilate:
        if (n == 0)
            return kNegInf;
        return log_or_neg_inf(double(count_units(world, mv.rect)) / n) - std::log(4.0) + log_step(mv.step);
    case KernelKind::AllocateDoor: {
        double total = 0.0, hit = 0.0;
        for (const auto& [spec, w] : allocate_options(world)) {
            total += w;
            if (spec == mv.door)
                hit += w;
        }
        return total > 0.0 ? log_or_neg_inf(hit / total) : kNegInf;
    }
    case KernelKind::DeleteDoor: {
        const auto doors = deletable_doors(world);
        if (doors.empty())
            return kNegInf;
        const auto hits = std::count_if(doors.begin(), doors.end(),
                                        [&](int k) { return door_spec(world, world.doors[k]) == mv.door; });
        return log_or_neg_inf(double(hits) / double(doors.size()));
    }
    }
    return kNegInf;
}

namespace {

std::optional<SemanticWorld> build_world(const ChainContext& ctx, const std::vector<Rect>& rects,
                                         const std::vector<DoorSpec>& doors)
{
    const Rect bounds{0, 0, ctx.width(), ctx.height()};
    const int m = ctx.rules.min_unit_side;
    for (const Rect& r : rects)
        if (intersect(r, bounds) != r || r.width() < m || r.height() < m)
            return std::nullopt;
    std::vector<Rect> sorted = rects;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        return std::nullopt;
    SemanticWorld w;
    for (const Rect& r : sorted)
        w.units.push_back({r});
    for (const DoorSpec& spec : doors) {
        auto d = resolve_door(w, spec);
        if (!d || !door_valid(w, *d, ctx.scoring.raster.wall_thickness, ctx.rules))
            return std::nullopt;
        w.doors.push_back(*d);
    }
    prepare_world(w, ctx.scoring);
    return w;
}

std::vector<Rect> rects_of(const SemanticWorld& w)
{
    std::vector<Rect> out;
    for (const Unit& u : w.units)
        out.push_back(u.rect);
    return out;
}

std::vector<DoorSpec> specs_of(const SemanticWorld& w)
{
    std::vector<DoorSpec> out;
    for (const Door& d : w.doors)
        out.push_back(door_spec(w, d));
    return out;
}

void replace_rect(std::vector<Rect>& rects, const Rect& from, const Rect& to)
{
    for (Rect& r : rects)
        if (r == from) {
            r = to;
            return;
        }
}

}  // namespace

std::optional<SemanticWorld> Kernels::apply(const SemanticWorld& world, const Move& mv) const
{
    std::vector<Rect> rects = rects_of(world);
    std::vector<DoorSpec> doors = specs_of(world);
    const int t = ctx_->scoring.raster.wall_thickness;
    switch (mv.kind) {
    case KernelKind::Add:
        rects.push_back(mv.rect);
        doors.insert(doors.end(), mv.doors.begin(), mv.doors.end());
        break;
    case KernelKind::Remove: {
        const auto it = std::find(rects.begin(), rects.end(), mv.rect);
        if (it == rects.end())
            return std::nullopt;
        rects.erase(it);
        std::erase_if(doors, [&](const DoorSpec& d) { return d.a == mv.rect || d.b == mv.rect; });
        break;
    }
    case KernelKind::Split: {
        if (find_unit(world, mv.rect) < 0)
            return std::nullopt;
        const auto [a, b] = split_rect(mv.rect, mv.axis, mv.cut);
        replace_rect(rects, mv.rect, a);
        rects.push_back(b);
        SemanticWorld pair;
        for (DoorSpec& d : doors) {
            if (d.a != mv.rect && d.b != mv.rect)
                continue;
            // The door moves to whichever part still carries it.
            const DoorSpec da = substitute(d, mv.rect, a);
            const DoorSpec db = substitute(d, mv.rect, b);
            pair.units = {{da.a}, {da.b}};
            if (door_valid(pair, {0, 1, da.axis, da.start, da.end}, t, ctx_->rules))
                d = da;
            else
                d = db;
        }
        doors.insert(doors.end(), mv.doors.begin(), mv.doors.end());
        break;
    }
    case KernelKind::Merge: {
        if (find_unit(world, mv.rect) < 0 || find_unit(world, mv.other) < 0)
            return std::nullopt;
        const Rect merged = bounding(mv.rect, mv.other);
        std::erase_if(doors, [&](const DoorSpec& d) {
            return (d.a == mv.rect && d.b == mv.other) || (d.a == mv.other && d.b == mv.rect);
        });
        for (DoorSpec& d : doors)
            d = substitute(substitute(d, mv.rect, merged), mv.other, merged);
        std::erase(rects, mv.other);
        replace_rect(rects, mv.rect, merged);
        break;
    }
    case KernelKind::Shrink:
    case KernelKind::Dilate: {
        if (find_unit(world, mv.rect) < 0)
            return std::nullopt;
        const Rect r = moved_wall(mv.rect, mv.side, mv.kind == KernelKind::Dilate ? mv.step : -mv.step);
        if (r.empty())
            return std::nullopt;
        replace_rect(rects, mv.rect, r);
        for (DoorSpec& d : doors)
            d = substitute(d, mv.rect, r);
        break;
    }
    case KernelKind::AllocateDoor: doors.push_back(mv.door); break;
    case KernelKind::DeleteDoor: {
        const auto it = std::find(doors.begin(), doors.end(), mv.door);
        if (it == doors.end())
            return std::nullopt;
        doors.erase(it);
        break;
    }
    case KernelKind::Interchange: {
        if (find_unit(world, mv.rect) < 0 || find_unit(world, mv.other) < 0)
            return std::nullopt;
        const auto [a, b] = interchanged(mv.rect, mv.other, mv.axis, mv.cut);
        if (a.empty() || b.empty())
            return std::nullopt;
        for (DoorSpec& d : doors)
            d = substitute(substitute(d, mv.rect, a), mv.other, b);
        replace_rect(rects, mv.rect, a);
        replace_rect(rects, mv.other, b);
        break;
    }
    }
    return build_world(*ctx_, rects, doors);
}

Move Kernels::inverse(const SemanticWorld& before, const Move& mv) const
{
    Move inv;
    inv.kind = semloft::inverse(mv.kind);
    switch (mv.kind) {
    case KernelKind::Add: inv.rect = mv.rect; break;
    case KernelKind::Remove: {
        inv.rect = mv.rect;
        for (const Door& d : before.doors) {
            const DoorSpec s = door_spec(before, d);
            if (s.a == mv.rect || s.b == mv.rect)
                inv.doors.push_back(s);
        }
        std::sort(inv.doors.begin(), inv.doors.end());
        break;
    }
    case KernelKind::Split: {
        const auto [a, b] = split_rect(mv.rect, mv.axis, mv.cut);
        inv.rect = a;
        inv.other = b;
        inv.axis = mv.axis;
        break;
    }
    case KernelKind::Merge: {
        inv.rect = bounding(mv.rect, mv.other);
        inv.axis = mv.axis;
        inv.cut = mv.axis == Axis::Vertical ? mv.rect.x1 : mv.rect.y1;
        for (const Door& d : before.doors) {
            const DoorSpec s = door_spec(before, d);
            if ((s.a == mv.rect && s.b == mv.other) || (s.a == mv.other && s.b == mv.rect))
                inv.doors.push_back(s);
        }
        std::sort(inv.doors.begin(), inv.doors.end());
        break;
    }
    case KernelKind::Shrink:
    case KernelKind::Dilate:
        inv.rect = moved_wall(mv.rect, mv.side, mv.kind == KernelKind::Dilate ? mv.step : -mv.step);
        inv.side = mv.side;
        inv.step = mv.step;
        break;
    case KernelKind::AllocateDoor:
    case KernelKind::DeleteDoor: inv.door = mv.door; break;
    case KernelKind::Interchange: {
        const auto [a, b] = interchanged(mv.rect, mv.other, mv.axis, mv.cut);
        inv.rect = a;
        inv.other = b;
        inv.axis = mv.axis;
        inv.cut = -mv.cut;
        break;
    }
    }
    return inv;
}

std::optional<Proposal> Kernels::propose(KernelKind kind, const SemanticWorld& world, std::mt19937_64& rng) const
{
    Proposal p;
    p.move = sample(kind, world, rng);
    auto next = apply(world, p.move);
    if (!next)
        return std::nullopt;
    p.new_world = std::move(*next);
    p.log_q_forward = log_select(kind, world) + log_prob(world, p.move);
    const Move inv = inverse(world, p.move);
    p.log_q_reverse = log_select(inv.kind, p.new_world) + log_prob(p.new_world, inv);
    return p;
}

// ---------------------------------------------------------------------------------------------

double ChainTrace::acceptance_rate() const
{
    long sel = 0, acc = 0;
    for (const auto& k : kernels) {
        sel += k.selected;
        acc += k.accepted;
    }
    return sel == 0 ? 0.0 : double(acc) / double(sel);
}

namespace {

double prior_of(const SemanticWorld& w, const ScoringParams& params, ThetaCache& cache)
{
    if (w.size() == 0)
        return 0.0;
    return prior_log(w, cache.get(w.types, *w.relations, params), params);
}

// Best-improvement greedy search over a list of moves; returns the final world.
struct Greedy {
    const ChainContext& ctx;
    const Kernels& kernels;
    ThetaCache& cache;
    SemanticWorld world;
    IncrementalLikelihood inc;
    double score;

    Greedy(const ChainContext& c, const Kernels& k, ThetaCache& tc, SemanticWorld w)
        : ctx(c), kernels(k), cache(tc), world(std::move(w)), inc(*c.map, world, c.scoring.raster.wall_thickness)
    {
        score = log_likelihood_from_counts(inc.counts(), ctx.scoring.lookup, ctx.scoring.psi) +
                prior_of(world, ctx.scoring, cache);
    }

    double evaluate(const SemanticWorld& next)
    {
        const auto counts = inc.evaluate(next, dirty_between(world, next, ctx.scoring.raster.wall_thickness));
        return log_likelihood_from_counts(counts, ctx.scoring.lookup, ctx.scoring.psi) +
               prior_of(next, ctx.scoring, cache);
    }

    bool improve(const std::vector<Move>& moves)
    {
        double best = score;
        std::optional<SemanticWorld> chosen;
        for (const Move& mv : moves) {
            auto next = kernels.apply(world, mv);
            if (!next)
                continue;
            const double s = evaluate(*next);
            if (s > best) {
                best = s;
                chosen = std::move(next);
            }
        }
        if (!chosen)
            return false;
        evaluate(*chosen);
        inc.commit();
        world = std::move(*chosen);
        score = best;
        return true;
    }
};

}  // namespace

SemanticWorld detected_init(const ChainContext& ctx)
{
    Kernels kernels(ctx);
    ThetaCache cache;
    SemanticWorld empty;
    prepare_world(empty, ctx.scoring);
    Greedy g(ctx, kernels, cache, empty);
    for (;;) {
        std::vector<Move> moves;
        for (int i : kernels.eligible_candidates(g.world)) {
            Move mv;
            mv.kind = KernelKind::Add;
            mv.rect = ctx.detections.units[i].rect;
            moves.push_back(mv);
        }
        if (!g.improve(moves))
            break;
    }
    for (;;) {
        std::vector<Move> moves;
        for (const auto& [spec, w] : kernels.allocate_options(g.world)) {
            Move mv;
            mv.kind = KernelKind::AllocateDoor;
            mv.door = spec;
            moves.push_back(mv);
        }
        if (!g.improve(moves))
            break;
    }
    return g.world;
}

SemanticWorld random_init(const ChainContext& ctx, std::mt19937_64& rng)
{
    Kernels kernels(ctx);
    SemanticWorld w;
    prepare_world(w, ctx.scoring);
    const int count = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < count; ++i) {
        Move mv = kernels.sample(KernelKind::Add, w, rng);
        mv.doors.clear();
        if (auto next = kernels.apply(w, mv))
            w = std::move(*next);
    }
    return w;
}

ChainTrace run_chain(const ChainContext& ctx, const RunOptions& options)
{
    ctx.config.validate();
    ctx.scoring.validate();
    if (!ctx.map || ctx.map->width != ctx.scoring.raster.width || ctx.map->height != ctx.scoring.raster.height)
        throw Error(ErrorKind::Geometry, "chain map and raster dimensions differ");
    const ChainConfig& cfg = ctx.config;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Kernels kernels(ctx);
    ThetaCache cache;

    SemanticWorld world;
    if (options.initial) {
        world = *options.initial;
        world.relations.reset();
        world.theta.reset();
        prepare_world(world, ctx.scoring);
        validate_world(world, ctx.scoring.raster, ctx.rules);
    } else if (cfg.init == InitMode::Detected) {
        world = detected_init(ctx);
    } else {
        world = random_init(ctx, rng);
    }

    IncrementalLikelihood inc(*ctx.map, world, ctx.scoring.raster.wall_thickness);
    double current = log_likelihood_from_counts(inc.counts(), ctx.scoring.lookup, ctx.scoring.psi) +
                     prior_of(world, ctx.scoring, cache);

    ChainTrace trace;
    trace.seed = cfg.seed;
    trace.best_world = world;
    trace.best_score = current;

    std::array<double, kKernelCount> weights{};
    bool weights_stale = true;
    for (long it = 0; it < cfg.max_iterations; ++it) {
        if (weights_stale) {
            for (int k = 0; k < kKernelCount; ++k)
                weights[k] = cfg.kernel_weights[k] > 0.0 && kernels.applicable(KernelKind(k), world)
                                 ? cfg.kernel_weights[k]
                                 : 0.0;
            weights_stale = false;
        }
        double total = 0.0;
        for (double w : weights)
            total += w;
        if (!(total > 0.0))
            throw Error(ErrorKind::Stall, "no applicable kernel at iteration " + std::to_string(it));
        double u = unit(rng) * total;
        int kind = kKernelCount - 1;
        while (kind > 0 && weights[kind] == 0.0)
            --kind;
        for (int k = 0; k < kKernelCount; ++k) {
            if (weights[k] == 0.0)
                continue;
            u -= weights[k];
            if (u < 0.0) {
                kind = k;
                break;
            }
        }
        KernelStats& stats = trace.kernels[kind];
        ++stats.selected;
        auto prop = kernels.propose(KernelKind(kind), world, rng);
        const double accept_draw = unit(rng);
        if (!prop || (options.admissible && !options.admissible(prop->new_world))) {
            ++stats.invalid;
        } else {
            const auto counts = inc.evaluate(prop->new_world,
                                             dirty_between(world, prop->new_world, ctx.scoring.raster.wall_thickness));
            const double proposed = log_likelihood_from_counts(counts, ctx.scoring.lookup, ctx.scoring.psi) +
                                    prior_of(prop->new_world, ctx.scoring, cache);
            const double a = acceptance_probability(proposed, current, prop->log_q_forward, prop->log_q_reverse,
                                                    cfg.temperature(it));
            if (accept_draw < a) {
                inc.commit();
                world = std::move(prop->new_world);
                current = proposed;
                ++stats.accepted;
                weights_stale = true;
                if (current > trace.best_score) {
                    trace.best_score = current;
                    trace.best_world = world;
                    trace.best_iteration = it + 1;
                }
            }
        }
        if (cfg.record_every > 0 && it >= cfg.burn_in && (it - cfg.burn_in) % cfg.record_every == 0)
            trace.samples.push_back({it, current, world});
        if (options.observer)
            options.observer(it, world, current);
    }
    trace.final_world = world;
    trace.final_score = current;
    return trace;
}

ChainTrace run(const ChainContext& ctx, const RunOptions& options)
{
    ctx.config.validate();
    const int chains = ctx.config.chains;
    if (chains == 1)
        return run_chain(ctx, options);
    std::vector<ChainContext> contexts(chains, ctx);
    std::vector<ChainTrace> traces(chains);
    std::vector<std::exception_ptr> errors(chains);
    std::vector<std::thread> threads;
    for (int i = 0; i < chains; ++i) {
        contexts[i].config.seed = ctx.config.seed + std::uint64_t(i);
        contexts[i].config.chains = 1;
        threads.emplace_back([&, i] {
            try {
                traces[i] = run_chain(contexts[i], options);
                traces[i].chain_index = i;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& th : threads)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::size_t best = 0;
    for (std::size_t i = 1; i < traces.size(); ++i)
        if (traces[i].best_score > traces[best].best_score)
            best = i;
    return std::move(traces[best]);
}

ExactPosterior enumerate_posterior(const ClassifiedGrid& map_c, std::vector<SemanticWorld> family,
                                   const ScoringParams& params, std::size_t limit)
{
    if (family.size() > limit)
        throw Error(ErrorKind::Capacity, "world family has " + std::to_string(family.size()) + " members (limit " +
                                             std::to_string(limit) + ")");
    if (family.empty())
        throw Error(ErrorKind::Capacity, "world family is empty");
    ExactPosterior out;
    ThetaCache cache;
    for (SemanticWorld& w : family) {
        prepare_world(w, params);
        out.log_posterior.push_back(score_world(map_c, w, params, &cache));
    }
    out.worlds = std::move(family);
    const double top = *std::max_element(out.log_posterior.begin(), out.log_posterior.end());
    double z = 0.0;
    for (double lp : out.log_posterior)
        z += std::exp(lp - top);
    for (std::size_t i = 0; i < out.log_posterior.size(); ++i) {
        out.probability.push_back(std::exp(out.log_posterior[i] - top) / z);
        if (out.log_posterior[i] > out.log_posterior[out.argmax])
            out.argmax = i;
    }
    return out;
}

std::vector<SemanticWorld> single_unit_family(const Rect& lo, const Rect& hi, int min_side)
{
    std::vector<SemanticWorld> out;
    for (int x0 = lo.x0; x0 <= hi.x0; ++x0)
        for (int y0 = lo.y0; y0 <= hi.y0; ++y0)
            for (int x1 = lo.x1; x1 <= hi.x1; ++x1)
                for (int y1 = lo.y1; y1 <= hi.y1; ++y1)
                    if (x1 - x0 >= min_side && y1 - y0 >= min_side) {
                        SemanticWorld w;
                        w.units.push_back({{x0, y0, x1, y1}});
                        out.push_back(std::move(w));
                    }
    return out;
}

}  // namespace semloft
