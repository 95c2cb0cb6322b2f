#include "smlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace smlab {

namespace {

constexpr const char* kSchema = "smlab/1";

}  // namespace

std::vector<std::string> experiment_names()
{
    return {"growth", "carbery", "goodlambda", "doob-check", "gaussian-fit",
            "multiplier-check", "stein", "reduction", "fs-probe"};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"schema", "experiment", "operator", "grid", "profiles", "p", "q", "r",
                                             "s", "N_ladder", "t_per_octave", "seed", "out", "params"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unknown config key '" + it.key() + "'");
    if (!j.contains("schema") || j.at("schema") != kSchema)
        throw ConfigError(std::string("config must carry \"schema\": \"") + kSchema + "\"");

    ExperimentConfig c;
    try {
        c.experiment = j.at("experiment").get<std::string>();
        if (j.contains("operator")) {
            const auto& o = j.at("operator");
            c.op = o.is_string() ? OperatorSpec::parse(o.get<std::string>()) : OperatorSpec::from_json(o);
            c.op_given = true;
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            c.grid.M = g.value("M", c.grid.M);
            c.grid.x_max = g.value("x_max", c.grid.x_max);
            if (g.contains("kind") || g.contains("alpha")) {
                c.grid_given = true;
                c.grid.kind = domain_kind_from_string(g.value("kind", to_string(c.grid.kind)));
                c.grid.alpha = g.value("alpha", c.grid.alpha);
            }
        }
        c.profiles = j.value("profiles", c.profiles);
        c.p = j.value("p", c.p);
        c.q = j.value("q", c.q);
        c.r = j.value("r", c.r);
        c.s = j.value("s", c.s);
        c.N_ladder = j.value("N_ladder", c.N_ladder);
        c.t_per_octave = j.value("t_per_octave", c.t_per_octave);
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out", c.out_dir);
        c.params = j.value("params", c.params);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

nlohmann::json ExperimentConfig::to_json() const
{
    const GridConfig g = resolved_grid();
    return {{"schema", kSchema},
            {"experiment", experiment},
            {"operator", resolved_operator().to_json()},
            {"grid", {{"kind", to_string(g.kind)}, {"M", g.M}, {"x_max", g.x_max}, {"alpha", g.alpha}}},
            {"profiles", profiles},
            {"p", p},
            {"q", q},
            {"r", r},
            {"s", s},
            {"N_ladder", N_ladder},
            {"t_per_octave", t_per_octave},
            {"seed", seed},
            {"out", out_dir},
            {"params", params}};
}

OperatorSpec ExperimentConfig::resolved_operator() const
{
    if (op_given)
        return op;
    // The Doob-frame experiments default to the inverse-square operator with h(x) = x.
    if (experiment == "doob-check" || experiment == "fs-probe" || experiment == "goodlambda")
        return OperatorSpec::inv_square(3.0, 2.0);
    return OperatorSpec::free_laplacian();
}

GridConfig ExperimentConfig::resolved_grid() const
{
    if (grid_given)
        return grid;
    GridConfig g = grid;
    const OperatorSpec op = resolved_operator();
    switch (op.kind) {
    case OperatorKind::free_laplacian:
        g.kind = DomainKind::full_line;
        g.alpha = 0.0;
        break;
    case OperatorKind::dirichlet_laplacian:
        g.kind = DomainKind::half_line_dirichlet;
        g.alpha = 0.0;
        break;
    case OperatorKind::bessel:
        g.kind = DomainKind::half_line_neumannlike;
        g.alpha = op.alpha;
        break;
    case OperatorKind::inv_square:
        g.kind = DomainKind::half_line_dirichlet;
        g.alpha = op.n - 1.0;
        break;
    }
    return g;
}

void ExperimentConfig::validate() const
{
    const auto names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end())
        throw ConfigError("unknown experiment '" + experiment + "'");
    if (!(r >= 1.0 && r < 2.0))
        throw ConfigError("r=" + format_number(r) + " violates 1<=r<2");
    if (!(p > r))
        throw ConfigError("p=" + format_number(p) + " violates p>r");
    if (!(q >= 2.0))
        throw ConfigError("q=" + format_number(q) + " violates q>=2");
    if (!(s >= 0.0))
        throw ConfigError("s must be nonnegative");
    if (N_ladder.empty() || *std::min_element(N_ladder.begin(), N_ladder.end()) < 1)
        throw ConfigError("N_ladder must be a nonempty list of positive integers");
    if (t_per_octave < 1)
        throw ConfigError("t_per_octave must be at least 1");
    const GridConfig g = resolved_grid();
    if (g.M < 16)
        throw ConfigError("grid M must be at least 16");
    if (!(g.x_max > 0.0))
        throw ConfigError("grid x_max must be positive");
    if (experiment == "growth") {
        // The maximal-family hypothesis needs s > n/r with n the doubling dimension.
        const double n = std::max(1.0, 1.0 + g.alpha);
        if (!(s > n / r))
            throw ConfigError("s=" + format_number(s) + " violates s>n/r=" + format_number(n / r));
    }
}

}  // namespace smlab
