#include "netlump/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace netlump {

namespace {

std::string trim(const std::string& s) {
    size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

double parse_number(const std::string& text, const std::string& field) {
    try {
        size_t consumed = 0;
        const double value = std::stod(text, &consumed);
        if (trim(text.substr(consumed)).empty()) return value;
    } catch (const std::exception&) {
    }
    throw ValidationError("config field '" + field + "': cannot parse number from '" + text + "'");
}

std::vector<double> parse_numbers(const std::string& text, const std::string& field) {
    std::string soft = text;
    std::replace(soft.begin(), soft.end(), ',', ' ');
    std::istringstream in(soft);
    std::vector<double> values;
    std::string token;
    while (in >> token) values.push_back(parse_number(token, field));
    if (values.empty())
        throw ValidationError("config field '" + field + "': expected at least one number");
    return values;
}

// Minimal sectioned key-value reader. Repeated keys accumulate in order.
struct ConfigTree {
    std::map<std::string, std::vector<std::string>> entries;

    bool has(const std::string& key) const { return entries.count(key) > 0; }

    const std::string& one(const std::string& key) const {
        const auto it = entries.find(key);
        if (it == entries.end())
            throw ValidationError("config: missing required field '" + key + "'");
        if (it->second.size() != 1)
            throw ValidationError("config: field '" + key + "' given more than once");
        return it->second.front();
    }

    std::string one_or(const std::string& key, const std::string& fallback) const {
        return has(key) ? one(key) : fallback;
    }

    const std::vector<std::string>& all(const std::string& key) const {
        static const std::vector<std::string> empty;
        const auto it = entries.find(key);
        return it == entries.end() ? empty : it->second;
    }
};

ConfigTree read_tree(const std::string& text) {
    ConfigTree tree;
    std::istringstream in(text);
    std::string line, section;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config line " + std::to_string(line_number) +
                                      ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_number) +
                                  ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ValidationError("config line " + std::to_string(line_number) +
                                  ": empty key or value");
        tree.entries[section.empty() ? key : section + "." + key].push_back(value);
    }
    return tree;
}

EdgeExchangeRates parse_rates(const ConfigTree& tree, Index edges) {
    EdgeExchangeRates rates;
    auto parse_entries = [&](const char* key) {
        std::vector<EdgeExchangeRates::Entry> list;
        for (const std::string& text : tree.all(key)) {
            const std::vector<double> f = parse_numbers(text, key);
            if (f.size() != 4)
                throw ValidationError(std::string("config field '") + key +
                                      "': expected 'i j endpoint rate'");
            EdgeExchangeRates::Entry e;
            e.i = static_cast<Index>(f[0]) - 1;
            e.j = static_cast<Index>(f[1]) - 1;
            e.endpoint = static_cast<int>(f[2]);
            e.rate = f[3];
            if (e.i < 0 || e.i >= edges || e.j < 0 || e.j >= edges)
                throw ValidationError(std::string("config field '") + key +
                                      "': edge index out of range (1-based)");
            list.push_back(e);
        }
        return list;
    };
    rates.left_in = parse_entries("coupling.l_pair");
    rates.right_in = parse_entries("coupling.r_pair");

    auto parse_exit = [&](const char* key, bool left) -> Vector {
        const std::string text = tree.one_or(key, "balanced");
        if (text == "balanced") {
            Vector exits = Vector::Zero(edges);
            for (const auto& e : left ? rates.left_in : rates.right_in) exits(e.i) += e.rate;
            return exits;
        }
        const std::vector<double> v = parse_numbers(text, key);
        if (static_cast<Index>(v.size()) != edges)
            throw ValidationError(std::string("config field '") + key + "': expected " +
                                  std::to_string(edges) + " values");
        return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    };
    rates.left_exit = parse_exit("coupling.l_exit", true);
    rates.right_exit = parse_exit("coupling.r_exit", false);
    rates.validate();
    return rates;
}

std::vector<VitalRate> parse_vital_rates(const std::string& text, const std::string& field,
                                         Index expected) {
    std::vector<VitalRate> rates;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, '|')) {
        const ProfileSpec spec = parse_profile(trim(part));
        rates.emplace_back(spec.eval);
    }
    if (static_cast<Index>(rates.size()) != expected)
        throw ValidationError("config field '" + field + "': expected " + std::to_string(expected) +
                              " '|'-separated profiles");
    return rates;
}

std::vector<ProfileSpec> parse_profile_list(const std::string& text, const std::string& field,
                                            Index expected) {
    std::vector<ProfileSpec> specs;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, '|')) specs.push_back(parse_profile(trim(part)));
    if (static_cast<Index>(specs.size()) != expected)
        throw ValidationError("config field '" + field + "': expected " + std::to_string(expected) +
                              " '|'-separated profiles");
    return specs;
}

Matrix random_perturbation(Index m, double target_norm, unsigned long long seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix b(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) b(i, j) = dist(gen);
    const double norm = b.cwiseAbs().colwise().sum().maxCoeff();
    return b * (target_norm / norm);
}

}  // namespace

ProfileSpec parse_profile(const std::string& text) {
    const size_t colon = text.find(':');
    const std::string name = colon == std::string::npos ? text : text.substr(0, colon);
    std::vector<double> p;
    if (colon != std::string::npos)
        p = parse_numbers(text.substr(colon + 1), "profile '" + name + "'");
    auto need = [&](size_t lo, size_t hi) {
        if (p.size() < lo || p.size() > hi)
            throw ValidationError("profile '" + name + "': wrong parameter count in '" + text + "'");
    };

    ProfileSpec spec;
    spec.text = text;
    if (name == "constant") {
        need(1, 1);
        spec.eval = [c = p[0]](double) { return c; };
    } else if (name == "linear") {
        need(2, 2);
        spec.eval = [a = p[0], b = p[1]](double x) { return a + b * x; };
    } else if (name == "offset_cos") {
        need(2, 3);
        const double k = p.size() > 2 ? p[2] : 1.0;
        spec.eval = [c = p[0], amp = p[1], k](double x) { return c + amp * std::cos(k * M_PI * x); };
    } else if (name == "sin2pi") {
        need(1, 2);
        const double offset = p.size() > 1 ? p[1] : 0.0;
        spec.eval = [amp = p[0], offset](double x) { return offset + amp * std::sin(2.0 * M_PI * x); };
    } else if (name == "gaussian") {
        need(3, 3);
        spec.eval = [c = p[0], w = p[1], amp = p[2]](double x) {
            const double z = (x - c) / w;
            return amp * std::exp(-0.5 * z * z);
        };
    } else if (name == "poly") {
        need(1, 4);
        spec.eval = [p](double x) {
            double value = 0.0;
            for (size_t k = p.size(); k-- > 0;) value = value * x + p[k];
            return value;
        };
    } else if (name == "ramp") {
        need(4, 4);
        const VitalRate r = VitalRate::ramp(p[0], p[1], p[2], p[3]);
        spec.eval = [r](double x) { return r(x); };
    } else if (name == "table") {
        if (p.size() < 4 || p.size() % 2 != 0)
            throw ValidationError("profile 'table': expected pairs x0,v0,x1,v1,...");
        std::vector<double> xs, vs;
        for (size_t i = 0; i < p.size(); i += 2) {
            xs.push_back(p[i]);
            vs.push_back(p[i + 1]);
        }
        const VitalRate r = VitalRate::table(xs, vs);
        spec.eval = [r](double x) { return r(x); };
    } else {
        throw ValidationError("unknown profile '" + name + "' in '" + text + "'");
    }
    return spec;
}

Matrix parse_matrix_literal(const std::string& text, const char* field) {
    // Row-list literal: [[a, b], [c, d]].
    std::vector<std::vector<double>> rows;
    size_t pos = 0;
    auto fail = [&](const std::string& why) {
        throw ValidationError(std::string("config field '") + field + "': " + why + " in '" + text + "'");
    };
    auto skip_space = [&] {
        while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == ','))
            ++pos;
    };
    skip_space();
    if (pos >= text.size() || text[pos] != '[') fail("expected '['");
    ++pos;
    while (true) {
        skip_space();
        if (pos < text.size() && text[pos] == ']') {
            ++pos;
            break;
        }
        if (pos >= text.size() || text[pos] != '[') fail("expected row '['");
        const size_t end = text.find(']', pos);
        if (end == std::string::npos) fail("unterminated row");
        rows.push_back(parse_numbers(text.substr(pos + 1, end - pos - 1), field));
        pos = end + 1;
    }
    if (rows.empty()) fail("empty matrix");
    const size_t cols = rows.front().size();
    for (const auto& row : rows)
        if (row.size() != cols) fail("ragged rows");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

Scenario Scenario::parse(const std::string& text) {
    const ConfigTree tree = read_tree(text);
    Scenario s;
    s.raw_text = text;

    const std::string kind = tree.one("kind");
    if (kind == "diffusion")
        s.kind = ScenarioKind::diffusion;
    else if (kind == "transport")
        s.kind = ScenarioKind::transport;
    else if (kind == "mckendrick")
        s.kind = ScenarioKind::mckendrick;
    else
        throw ValidationError("config field 'kind': must be diffusion, transport or mckendrick");

    // Run parameters are shared by all kinds.
    RunParams& run = s.run;
    if (tree.has("run.eps_list"))
        run.eps_list = parse_numbers(tree.one("run.eps_list"), "run.eps_list");
    else if (tree.has("run.eps"))
        run.eps_list = {parse_number(tree.one("run.eps"), "run.eps")};
    else
        throw ValidationError("config: missing required field 'run.eps' or 'run.eps_list'");
    for (double e : run.eps_list)
        if (!(e > 0.0)) throw ValidationError("config field 'run.eps': eps values must be positive");
    run.t_final = parse_number(tree.one_or("run.t_final", "1.0"), "run.t_final");
    if (!(run.t_final > 0.0)) throw ValidationError("config field 'run.t_final': must be positive");
    if (tree.has("run.output_times"))
        run.output_times = parse_numbers(tree.one("run.output_times"), "run.output_times");
    run.output_count = static_cast<int>(parse_number(tree.one_or("run.output_count", "20"), "run.output_count"));
    if (run.output_count < 2) throw ValidationError("config field 'run.output_count': need at least 2");
    run.cells = static_cast<Index>(parse_number(tree.one_or("run.cells", "256"), "run.cells"));
    if (run.cells < 2 || run.cells % 2 != 0)
        throw ValidationError("config field 'run.cells': must be even and >= 2");
    run.dt = parse_number(tree.one_or("run.dt", "0"), "run.dt");
    run.terms = static_cast<int>(parse_number(tree.one_or("run.terms", "200"), "run.terms"));
    if (run.terms < 1) throw ValidationError("config field 'run.terms': must be positive");
    run.seed = static_cast<unsigned long long>(parse_number(tree.one_or("run.seed", "0"), "run.seed"));
    if (tree.has("run.band")) {
        const auto band = parse_numbers(tree.one("run.band"), "run.band");
        if (band.size() != 2 || !(band[0] < band[1]))
            throw ValidationError("config field 'run.band': expected 'lo hi' with lo < hi");
        run.band_lo = band[0];
        run.band_hi = band[1];
    }
    run.cfl = parse_number(tree.one_or("run.cfl", "0.8"), "run.cfl");
    if (!(run.cfl > 0.0 && run.cfl <= 1.0))
        throw ValidationError("config field 'run.cfl': must lie in (0, 1]");

    if (s.kind == ScenarioKind::mckendrick) {
        McKendrickSetup mck;
        mck.migration = parse_matrix_literal(tree.one("mckendrick.K"), "mckendrick.K");
        const Index patches = mck.migration.rows();
        s.edges = patches;
        mck.a_max = parse_number(tree.one("mckendrick.a_max"), "mckendrick.a_max");
        mck.n_age = static_cast<Index>(parse_number(tree.one("mckendrick.n_age"), "mckendrick.n_age"));
        mck.mortality = parse_vital_rates(tree.one("mckendrick.mu"), "mckendrick.mu", patches);
        mck.fertility = parse_vital_rates(tree.one("mckendrick.beta"), "mckendrick.beta", patches);
        mck.initial = parse_profile_list(tree.one("mckendrick.n0"), "mckendrick.n0", patches);
        mck.strang = tree.one_or("mckendrick.strang", "false") == "true";
        s.mckendrick = std::move(mck);
        return s;
    }

    s.edges = static_cast<Index>(parse_number(tree.one("edges"), "edges"));
    if (s.edges < 1) throw ValidationError("config field 'edges': must be positive");

    const std::string type = tree.one("coupling.type");
    if (s.kind == ScenarioKind::diffusion) {
        if (type == "rates") {
            s.rates = parse_rates(tree, s.edges);
        } else if (type == "matrices") {
            DiffusionCoupling c;
            c.k00 = parse_matrix_literal(tree.one("coupling.K00"), "coupling.K00");
            c.k01 = parse_matrix_literal(tree.one("coupling.K01"), "coupling.K01");
            c.k10 = parse_matrix_literal(tree.one("coupling.K10"), "coupling.K10");
            c.k11 = parse_matrix_literal(tree.one("coupling.K11"), "coupling.K11");
            if (c.k00.rows() != s.edges)
                throw ValidationError("config field 'coupling.K00': dimension does not match 'edges'");
            c.validate();
            s.diffusion_blocks = std::move(c);
        } else {
            throw ValidationError("config field 'coupling.type': diffusion wants 'rates' or 'matrices'");
        }
    } else {
        if (type == "matrix") {
            const std::string b_text = tree.one("coupling.B");
            if (b_text.rfind("random:", 0) == 0) {
                const double norm = parse_number(b_text.substr(7), "coupling.B random norm");
                s.transport_b = random_perturbation(s.edges, norm, s.run.seed);
            } else {
                s.transport_b = parse_matrix_literal(b_text, "coupling.B");
            }
            if (s.transport_b->rows() != s.edges)
                throw ValidationError("config field 'coupling.B': dimension does not match 'edges'");
        } else if (type == "stochastic") {
            Matrix t = parse_matrix_literal(tree.one("coupling.T"), "coupling.T");
            if (t.rows() != s.edges)
                throw ValidationError("config field 'coupling.T': dimension does not match 'edges'");
            if ((t.colwise().sum().array() - 1.0).abs().maxCoeff() > 1e-10)
                throw ValidationError("config field 'coupling.T': columns must sum to 1");
            s.transport_t = std::move(t);
        } else {
            throw ValidationError("config field 'coupling.type': transport wants 'matrix' or 'stochastic'");
        }
    }

    // Initial profiles: either 'all = ...' or one 'edgeN = ...' per edge.
    if (tree.has("initial.all")) {
        const ProfileSpec spec = parse_profile(tree.one("initial.all"));
        s.initial.assign(static_cast<size_t>(s.edges), spec);
    } else {
        for (Index j = 0; j < s.edges; ++j) {
            const std::string key = "initial.edge" + std::to_string(j + 1);
            s.initial.push_back(parse_profile(tree.one(key)));
        }
    }
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

DiffusionCoupling Scenario::diffusion_coupling() const {
    if (diffusion_blocks) return *diffusion_blocks;
    if (rates) return coupling_from_rates(*rates);
    throw ValidationError("scenario has no diffusion coupling");
}

GridFunction Scenario::initial_grid(Index cells) const {
    if (static_cast<Index>(initial.size()) != edges)
        throw ValidationError("scenario is missing initial profiles");
    return GridFunction::from_profile(edges, cells, [&](Index j, double x) {
        return initial[static_cast<size_t>(j)].eval(x);
    });
}

std::vector<double> Scenario::output_times() const {
    if (!run.output_times.empty()) return run.output_times;
    std::vector<double> times(static_cast<size_t>(run.output_count));
    for (int i = 0; i < run.output_count; ++i)
        times[static_cast<size_t>(i)] =
            run.t_final * static_cast<double>(i + 1) / static_cast<double>(run.output_count);
    return times;
}

DiffusionProblem Scenario::make_diffusion(double eps, Index cells, double dt) const {
    if (kind != ScenarioKind::diffusion) throw ValidationError("scenario kind is not diffusion");
    DiffusionProblem p;
    p.coupling = diffusion_coupling();
    p.eps = eps;
    p.u0 = initial_grid(cells);
    p.t_final = run.t_final;
    p.dt = dt;
    p.validate();
    return p;
}

TransportProblem Scenario::make_transport(double eps, Index cells) const {
    if (kind != ScenarioKind::transport) throw ValidationError("scenario kind is not transport");
    TransportProblem p;
    if (transport_b)
        p.coupling = TransportCoupling{*transport_b};
    else if (transport_t)
        p.coupling = TransportCoupling::from_boundary_matrix(*transport_t, eps);
    else
        throw ValidationError("scenario has no transport coupling");
    p.eps = eps;
    p.u0 = initial_grid(cells);
    p.t_final = run.t_final;
    p.profiles.reserve(initial.size());
    for (const auto& spec : initial) p.profiles.push_back(spec.eval);
    p.validate();
    return p;
}

StructuredPopulation Scenario::make_structured(double eps) const {
    if (kind != ScenarioKind::mckendrick || !mckendrick)
        throw ValidationError("scenario kind is not mckendrick");
    const McKendrickSetup& mck = *mckendrick;
    StructuredPopulation p;
    p.a_max = mck.a_max;
    p.n_age = mck.n_age;
    p.fertility = mck.fertility;
    p.mortality = mck.mortality;
    p.migration = mck.migration;
    p.eps = eps;
    p.n0 = Matrix(edges, mck.n_age + 1);
    for (Index j = 0; j < edges; ++j)
        for (Index i = 0; i <= mck.n_age; ++i)
            p.n0(j, i) = mck.initial[static_cast<size_t>(j)].eval(p.age_node(i));
    p.validate();
    return p;
}

}  // namespace netlump
