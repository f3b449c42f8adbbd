#include "semloft/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "semloft/error.hpp"
#include "semloft/world_json.hpp"

namespace semloft {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value)
{
    throw Error(ErrorKind::Config, "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view v)
{
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        bad_value(key, v);
    return out;
}

long to_long(std::string_view key, std::string_view v)
{
    long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        bad_value(key, v);
    return out;
}

int to_int(std::string_view key, std::string_view v)
{
    const long out = to_long(key, v);
    if (out < -1000000000L || out > 1000000000L)
        bad_value(key, v);
    return int(out);
}

bool to_bool(std::string_view key, std::string_view v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    bad_value(key, v);
}

using Setter = std::function<void(Config&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters()
{
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> t;
        auto real = [&t](const char* key, double Config::*field) {
            t[key] = [field](Config& c, std::string_view k, std::string_view v) { c.*field = to_double(k, v); };
        };
        auto flag = [&t](const char* key, bool Config::*field) {
            t[key] = [field](Config& c, std::string_view k, std::string_view v) { c.*field = to_bool(k, v); };
        };
        t["classify.h_o"] = [](Config& c, auto k, auto v) { c.classify.occupied = to_double(k, v); };
        t["classify.h_u"] = [](Config& c, auto k, auto v) { c.classify.unknown = to_double(k, v); };
        flag("map.invert", &Config::invert);
        flag("align.enabled", &Config::align);
        real("align.step_deg", &Config::align_step_deg);
        t["raster.wall_thickness"] = [](Config& c, auto k, auto v) { c.wall_thickness = to_int(k, v); };
        t["relations.dilation_radius"] = [](Config& c, auto k, auto v) { c.relations.dilation_radius = to_int(k, v); };
        t["relations.overlap_min_cells"] = [](Config& c, auto k, auto v) {
            c.relations.overlap_min_cells = to_int(k, v);
        };
        t["unit.min_side"] = [](Config& c, auto k, auto v) { c.rules.min_unit_side = to_int(k, v); };
        t["unit.area_big_mode"] = [](Config& c, auto k, auto v) {
            if (v == "fixed")
                c.area_big_mode = AreaBigMode::Fixed;
            else if (v == "adaptive")
                c.area_big_mode = AreaBigMode::Adaptive;
            else
                bad_value(k, v);
        };
        real("unit.area_big_m2", &Config::area_big_m2);
        real("unit.area_big_factor", &Config::area_big_factor);
        real("unit.ratio_big", &Config::ratio_big);
        real("scoring.psi", &Config::psi);
        real("scoring.sigma", &Config::sigma);
        real("scoring.theta_threshold", &Config::theta_threshold);
        flag("scoring.squared_distance", &Config::squared_distance);
        t["scoring.lookup"] = [](Config& c, std::string_view k, std::string_view v) {
            std::array<double, 9> vals{};
            std::size_t count = 0;
            std::size_t start = 0;
            while (start <= v.size()) {
                std::size_t end = v.find(',', start);
                if (end == std::string_view::npos)
                    end = v.size();
                if (count == vals.size())
                    bad_value(k, v);
                vals[count++] = to_double(k, trim(v.substr(start, end - start)));
                start = end + 1;
            }
            if (count != vals.size())
                bad_value(k, v);
            for (int i = 0; i < 9; ++i)
                c.lookup.p[i / 3][i % 3] = vals[i];
        };
        t["kb.w5"] = [](Config& c, auto k, auto v) { c.kb_weights.w5 = to_double(k, v); };
        t["kb.w6"] = [](Config& c, auto k, auto v) { c.kb_weights.w6 = to_double(k, v); };
        t["kb.w7"] = [](Config& c, auto k, auto v) { c.kb_weights.w7 = to_double(k, v); };
        t["kb.w8"] = [](Config& c, auto k, auto v) { c.kb_weights.w8 = to_double(k, v); };
        t["kb.file"] = [](Config& c, auto, auto v) { c.kb_file = std::string(v); };
        t["detect.min_span"] = [](Config& c, auto k, auto v) { c.detect.min_span = to_int(k, v); };
        t["detect.min_support"] = [](Config& c, auto k, auto v) { c.detect.min_support = to_double(k, v); };
        t["detect.merge_gap"] = [](Config& c, auto k, auto v) { c.detect.merge_gap = to_int(k, v); };
        t["detect.gap_support_min"] = [](Config& c, auto k, auto v) { c.detect.gap_support_min = to_double(k, v); };
        t["detect.extent_overlap_min"] = [](Config& c, auto k, auto v) {
            c.detect.extent_overlap_min = to_double(k, v);
        };
        t["detect.top_k"] = [](Config& c, auto k, auto v) { c.detect.top_k = to_int(k, v); };
        t["door.min_width"] = [](Config& c, auto k, auto v) {
            c.rules.door_min_width = to_int(k, v);
            c.door_bounds_explicit = true;
        };
        t["door.max_width"] = [](Config& c, auto k, auto v) {
            c.rules.door_max_width = to_int(k, v);
            c.door_bounds_explicit = true;
        };
        t["door.max_gap"] = [](Config& c, auto k, auto v) { c.rules.door_max_gap = to_int(k, v); };
        t["chain.iterations"] = [](Config& c, auto k, auto v) { c.chain.max_iterations = to_long(k, v); };
        t["chain.burn_in"] = [](Config& c, auto k, auto v) { c.chain.burn_in = to_long(k, v); };
        t["chain.seed"] = [](Config& c, auto k, auto v) { c.chain.seed = std::uint64_t(to_long(k, v)); };
        t["chain.init"] = [](Config& c, auto k, auto v) {
            if (v == "random")
                c.chain.init = InitMode::Random;
            else if (v == "detected")
                c.chain.init = InitMode::Detected;
            else
                bad_value(k, v);
        };
        t["chain.record_every"] = [](Config& c, auto k, auto v) { c.chain.record_every = to_long(k, v); };
        t["chain.anneal"] = [](Config& c, auto k, auto v) { c.chain.anneal = to_bool(k, v); };
        t["chain.t0"] = [](Config& c, auto k, auto v) { c.chain.t0 = to_double(k, v); };
        t["chain.decay"] = [](Config& c, auto k, auto v) { c.chain.decay = to_double(k, v); };
        t["chain.p_geo"] = [](Config& c, auto k, auto v) { c.chain.p_geo = to_double(k, v); };
        t["chain.max_step"] = [](Config& c, auto k, auto v) { c.chain.max_step = to_int(k, v); };
        t["chain.p_attach"] = [](Config& c, auto k, auto v) { c.chain.p_attach = to_double(k, v); };
        t["chain.random_add"] = [](Config& c, auto k, auto v) { c.chain.random_add = to_double(k, v); };
        t["chain.add_overlap_max"] = [](Config& c, auto k, auto v) { c.chain.add_overlap_max = to_double(k, v); };
        t["chain.chains"] = [](Config& c, auto k, auto v) { c.chain.chains = to_int(k, v); };
        for (int i = 0; i < kKernelCount; ++i) {
            const std::string key = "chain.weight." + std::string(to_string(KernelKind(i)));
            t[key] = [i](Config& c, auto k, auto v) { c.chain.kernel_weights[i] = to_double(k, v); };
        }
        real("synth.flip_rate", &Config::synth_flip_rate);
        real("synth.clutter", &Config::synth_clutter);
        t["synth.seed"] = [](Config& c, auto k, auto v) { c.synth_seed = std::uint64_t(to_long(k, v)); };
        return t;
    }();
    return table;
}

}  // namespace

void Config::set(std::string_view key, std::string_view value)
{
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end())
        throw Error(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
    it->second(*this, key, value);
}

void Config::validate() const
{
    classify.validate();
    if (wall_thickness < 1)
        throw Error(ErrorKind::Config, "raster.wall_thickness must be at least 1");
    if (!(align_step_deg > 0.0 && align_step_deg <= 45.0))
        throw Error(ErrorKind::Config, "align.step_deg must lie in (0, 45]");
    rules.validate();
    if (rules.min_unit_side <= 2 * wall_thickness)
        throw Error(ErrorKind::Config, "unit.min_side must exceed twice the wall thickness");
    if (!(area_big_m2 > 0.0) || !(area_big_factor > 0.0) || !(ratio_big >= 1.0))
        throw Error(ErrorKind::Config, "unit class thresholds out of range");
    if (!(synth_flip_rate >= 0.0 && synth_flip_rate <= 1.0) || !(synth_clutter >= 0.0 && synth_clutter < 1.0))
        throw Error(ErrorKind::Config, "synth noise parameters out of range");
    ScoringParams s;
    s.psi = psi;
    s.gaussian_sigma = sigma;
    s.theta_threshold = theta_threshold;
    s.lookup = lookup;
    s.classify = classify;
    s.raster.wall_thickness = wall_thickness;
    s.relations = relations;
    s.validate();
    detect.validate();
    chain.validate();
}

mln::KnowledgeBase Config::knowledge_base() const
{
    if (kb_file.empty())
        return mln::kb_same_length(kb_weights);
    return mln::parse_kb(read_text_file(kb_file), mln::same_length_predicates());
}

Config parse_config(std::string_view text)
{
    Config c;
    std::size_t start = 0;
    int line_no = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + " is not 'key = value'");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    c.validate();
    return c;
}

Config load_config(const std::optional<std::string>& path)
{
    if (path)
        return parse_config(read_text_file(*path));
    if (const char* env = std::getenv("SEMLOFT_CONFIG"); env && *env)
        return parse_config(read_text_file(env));
    Config c;
    c.validate();
    return c;
}

}  // namespace semloft
