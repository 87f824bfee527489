#pragma once

#include "netlump/coupling.hpp"
#include "netlump/diffusion.hpp"
#include "netlump/mckendrick.hpp"
#include "netlump/transport.hpp"
#include "netlump/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace netlump {

enum class ScenarioKind { diffusion, transport, mckendrick };

/// One edge's initial profile: a named builtin plus its evaluator.
struct ProfileSpec {
    std::string text;
    std::function<double(double)> eval;
};

struct McKendrickSetup {
    double a_max = 1.0;
    Index n_age = 128;
    Matrix migration;
    std::vector<VitalRate> mortality;
    std::vector<VitalRate> fertility;
    std::vector<ProfileSpec> initial;  // age profiles, one per patch
    bool strang = false;
};

struct RunParams {
    std::vector<double> eps_list{0.1};
    double t_final = 1.0;
    std::vector<double> output_times;  // explicit; empty -> uniform output_count grid
    int output_count = 20;
    Index cells = 256;
    double dt = 0.0;  // 0 -> solver default
    int terms = 200;
    unsigned long long seed = 0;
    double band_lo = 0.8, band_hi = 1.2;
    double cfl = 0.8;
};

/// A parsed scenario file: problem kind, coupling data, initial profiles and
/// run parameters. See scenarios/*.cfg for the documented key-value schema.
struct Scenario {
    ScenarioKind kind = ScenarioKind::diffusion;
    Index edges = 0;

    std::optional<EdgeExchangeRates> rates;            // diffusion, rates form
    std::optional<DiffusionCoupling> diffusion_blocks; // diffusion, matrices form
    std::optional<Matrix> transport_b;                 // transport, fixed B
    std::optional<Matrix> transport_t;                 // transport, stochastic T (B = (T-I)/eps)
    std::optional<McKendrickSetup> mckendrick;

    std::vector<ProfileSpec> initial;  // per edge, x in [0,1]
    RunParams run;
    std::string raw_text;

    static Scenario parse(const std::string& text);
    static Scenario load(const std::string& path);

    DiffusionCoupling diffusion_coupling() const;
    DiffusionProblem make_diffusion(double eps, Index cells, double dt) const;
    TransportProblem make_transport(double eps, Index cells) const;
    StructuredPopulation make_structured(double eps) const;

    GridFunction initial_grid(Index cells) const;
    std::vector<double> output_times() const;
};

/// Parse "name:params" into an evaluator; shared by edge and age profiles.
ProfileSpec parse_profile(const std::string& text);

Matrix parse_matrix_literal(const std::string& text, const char* field);

}  // namespace netlump
