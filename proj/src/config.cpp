#include "slfv/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slfv {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' has a malformed number '" + s +
                                    "'");
    }
}

} // namespace

RunConfig RunConfig::from_string(const std::string& text) {
    RunConfig config;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: empty key on line " + std::to_string(line_no));
        if (config.values_.count(key))
            throw std::invalid_argument("config: duplicate key '" + key + "' on line " +
                                        std::to_string(line_no));
        config.values_[key] = value;
    }
    return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

bool RunConfig::has(const std::string& key) const {
    return values_.count(key) != 0;
}

std::string RunConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        throw std::invalid_argument("config: missing required key '" + key + "'");
    used_.insert(key);
    return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key) const {
    return to_double(get_string(key), key);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    return values_.count(key) ? to_double(values_.at(key), key) : fallback;
}

int RunConfig::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw std::invalid_argument("config: key '" + key + "' must be an integer");
    return i;
}

int RunConfig::get_int(const std::string& key, int fallback) const {
    used_.insert(key);
    return values_.count(key) ? get_int(key) : fallback;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& part : split(get_string(key), ','))
        out.push_back(to_double(trim(part), key));
    return out;
}

std::vector<Point> RunConfig::get_points(const std::string& key) const {
    std::vector<Point> out;
    for (const std::string& part : split(get_string(key), ';')) {
        const std::vector<std::string> coords = split(trim(part), ':');
        if (coords.empty() || coords.size() > 2)
            throw std::invalid_argument("config: key '" + key + "' has a malformed point");
        Point p;
        for (std::size_t i = 0; i < coords.size(); ++i)
            p[static_cast<int>(i)] = to_double(trim(coords[i]), key);
        out.push_back(p);
    }
    return out;
}

std::vector<std::vector<double>> RunConfig::get_vectors(const std::string& key) const {
    std::vector<std::vector<double>> out;
    for (const std::string& part : split(get_string(key), ';')) {
        std::vector<double> row;
        for (const std::string& v : split(trim(part), ',')) row.push_back(to_double(trim(v), key));
        out.push_back(std::move(row));
    }
    return out;
}

void RunConfig::reject_unknown() const {
    std::string unknown;
    for (const auto& [key, value] : values_) {
        if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty())
        throw std::invalid_argument("config: unknown keys: " + unknown);
}

Domain domain_from_config(const RunConfig& config) {
    const std::string kind = config.get_string("domain_kind", "torus");
    const int d = config.get_int("domain_dimension", 2);
    const std::vector<double> sides = config.get_doubles("domain_side_lengths");
    if (static_cast<int>(sides.size()) != d)
        throw std::invalid_argument("config: domain_side_lengths arity must match the dimension");
    std::array<double, 2> lengths{1.0, 1.0};
    for (int i = 0; i < d; ++i) lengths[static_cast<std::size_t>(i)] = sides[static_cast<std::size_t>(i)];
    if (kind == "torus") return Domain::make_torus(d, lengths);
    if (kind == "box") return Domain::make_box(d, lengths);
    throw std::invalid_argument("config: domain_kind must be torus or box");
}

EventModel model_from_config(const RunConfig& config) {
    EventModel model;
    const std::string kind = config.get_string("model_kind", "ball");
    model.rate_per_volume_time = config.get_double("event_rate_per_volume_time", 1.0);
    if (kind == "gaussian") {
        model.kind = ModelKind::gaussian;
        model.gaussian_u0 = config.get_double("gaussian_impact_max");
        model.gaussian_theta_sq = config.get_double("gaussian_theta_sq");
        model.gaussian_alpha = config.get_double("gaussian_alpha", 1.0);
        model.gaussian_trunc_radii = config.get_double("gaussian_truncation_radii", 5.0);
        return model;
    }
    if (kind == "multi_parent_ball") {
        model.kind = ModelKind::multi_parent_ball;
        model.offspring_weights = config.get_doubles("offspring_weights");
    } else if (kind == "ball") {
        model.kind = ModelKind::ball;
    } else {
        throw std::invalid_argument("config: model_kind must be ball, gaussian, or "
                                    "multi_parent_ball");
    }

    const std::string radius = config.get_string("radius_law", "point:1.0");
    const std::vector<std::string> rparts = split(radius, ':');
    if (rparts[0] == "point" && rparts.size() == 2) {
        model.radius = RadiusLaw::point_mass(to_double(rparts[1], "radius_law"));
    } else if (rparts[0] == "mixture" && rparts.size() == 2) {
        std::vector<double> radii, weights;
        for (const std::string& pair : split(rparts[1], ',')) {
            const std::vector<std::string> rw = split(pair, '@');
            if (rw.size() != 2)
                throw std::invalid_argument("config: radius_law mixture entries are r@w");
            radii.push_back(to_double(rw[0], "radius_law"));
            weights.push_back(to_double(rw[1], "radius_law"));
        }
        model.radius = RadiusLaw::mixture(std::move(radii), std::move(weights));
    } else {
        throw std::invalid_argument("config: radius_law must be point:<r> or "
                                    "mixture:<r@w,r@w,...>");
    }

    const std::string impact = config.get_string("impact_law", "point:0.5");
    const std::vector<std::string> iparts = split(impact, ':');
    if (iparts[0] == "point" && iparts.size() == 2) {
        model.impact = ImpactLaw::point_mass(to_double(iparts[1], "impact_law"));
    } else if (iparts[0] == "beta" && iparts.size() == 3) {
        model.impact =
            ImpactLaw::beta(to_double(iparts[1], "impact_law"), to_double(iparts[2], "impact_law"));
    } else {
        throw std::invalid_argument("config: impact_law must be point:<u> or beta:<a>:<b>");
    }
    return model;
}

MutationModel mutation_from_config(const RunConfig& config) {
    const std::string kind = config.get_string("mutation_kind", "none");
    if (kind == "none") return MutationModel::none(config.get_int("mutation_type_count", 2));
    if (kind == "flip") return MutationModel::two_type_flip(config.get_double("mutation_rate_per_time"));
    if (kind == "parent_independent") {
        return MutationModel::parent_independent(config.get_double("mutation_rate_per_time"),
                                                 config.get_doubles("mutation_target"));
    }
    if (kind == "generator") {
        const std::vector<std::vector<double>> rows = config.get_vectors("mutation_generator");
        const int q = static_cast<int>(rows.size());
        std::vector<double> flat;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != q)
                throw std::invalid_argument("config: mutation_generator must be square");
            flat.insert(flat.end(), row.begin(), row.end());
        }
        return MutationModel::from_generator(q, std::move(flat));
    }
    throw std::invalid_argument("config: mutation_kind must be none, flip, parent_independent, "
                                "or generator");
}

TypeKernel kernel_from_config(const RunConfig& config) {
    const std::string kind = config.get_string("kernel_kind", "half_space");
    if (kind == "half_space") return TypeKernel::half_space();
    if (kind == "uniform") return TypeKernel::uniform(config.get_doubles("kernel_distribution"));
    if (kind == "piecewise") {
        const std::vector<double> grid = config.get_doubles("kernel_grid");
        if (grid.size() != 2)
            throw std::invalid_argument("config: kernel_grid must be 'nx,ny'");
        std::vector<std::vector<double>> dists = config.get_vectors("kernel_cell_distributions");
        const int q = dists.empty() ? 0 : static_cast<int>(dists.front().size());
        return TypeKernel::piecewise({static_cast<int>(grid[0]), static_cast<int>(grid[1])}, q,
                                     std::move(dists));
    }
    throw std::invalid_argument("config: kernel_kind must be half_space, uniform, or piecewise");
}

TestFunction test_function_from_config(const RunConfig& config, int type_count) {
    TestFunction f;
    const std::vector<Point> corners = config.get_points("test_function_box");
    if (corners.size() != 2)
        throw std::invalid_argument("config: test_function_box must be 'lo_x:lo_y;hi_x:hi_y'");
    BoxFactor factor;
    factor.lo = corners[0];
    factor.hi = corners[1];
    const std::string shape = config.get_string("test_function_shape", "indicator");
    if (shape == "bump")
        factor.shape = BoxFactor::Shape::bump;
    else if (shape != "indicator")
        throw std::invalid_argument("config: test_function_shape must be indicator or bump");
    f.factors.push_back(factor);
    f.type_weights.push_back(config.get_doubles("test_function_weights"));
    f.validate(type_count);
    return f;
}

} // namespace slfv
