#include "alignkit/scenarios.hpp"

#include <sstream>

namespace alignkit {

namespace {

Domain binary() {
    return Domain{{{"0", 0.0}, {"1", 1.0}}, true};
}

Domain ordered_domain(std::vector<std::string> labels, std::vector<double> levels) {
    Domain d;
    d.ordered = true;
    for (std::size_t k = 0; k < labels.size(); ++k) d.values.push_back({labels[k], levels[k]});
    return d;
}

Domain categorical(std::vector<std::string> labels) {
    Domain d;
    d.ordered = false;
    for (std::size_t k = 0; k < labels.size(); ++k) d.values.push_back({labels[k], double(k)});
    return d;
}

Variable var(std::string name, Domain dom, std::vector<std::string> parents = {}) {
    return Variable{std::move(name), std::move(dom), std::move(parents)};
}

ChannelDef to_def(const Channel& ch) {
    ChannelDef def;
    for (const auto& v : ch.sources()) def.sources.push_back(v.name);
    for (const auto& v : ch.targets()) def.targets.push_back(v.name);
    def.rows = ch.rows();
    return def;
}

void add_free(WorldSpec& spec, const Variable& v) {
    spec.free_variables.emplace(v.name, v);
}

// Shared three-valued toy world: a binary confounder driving two ordered
// ternary factors, observed through a per-coordinate deterministic map.
WorldSpec ternary_toy(const std::string& name, bool shuffle_first) {
    WorldSpec spec;
    const Domain t3 = ordered_domain({"0", "1", "2"}, {0.0, 1.0, 2.0});

    Scm factors;
    factors.variables = {var("c", binary()), var("g1", t3, {"c"}), var("g2", t3, {"c"})};
    factors.cpts = {{"c", {{0.5, 0.5}}},
                    {"g1", {{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}}},
                    {"g2", {{0.5, 0.4, 0.1}, {0.2, 0.3, 0.5}}}};
    spec.scms.emplace("factors", factors);

    const Variable m1 = var("m1", t3);
    const Variable m2 = var("m2", t3);
    add_free(spec, m1);
    add_free(spec, m2);

    // value shuffle on the first coordinate: 0 -> 1, 1 -> 0, 2 -> 2
    const std::size_t sigma[3] = {1, 0, 2};
    const Channel alpha = deterministic_channel(
        {var("g1", t3), var("g2", t3)}, {m1, m2}, [&](std::size_t s) {
            const std::size_t a = s / 3;
            const std::size_t b = s % 3;
            return (shuffle_first ? sigma[a] : a) * 3 + b;
        });
    spec.channels.emplace("alpha", to_def(alpha));

    spec.blocks.emplace("coordinates", BlockStructure{{{0}, {1}}, {{0}, {1}}, {0, 1}});

    ScenarioBinding sb;
    sb.name = name;
    sb.factor_scm = "factors";
    sb.alpha = "alpha";
    sb.interpretable = {"g1", "g2"};
    sb.blocks = "coordinates";
    spec.scenario = std::move(sb);
    return spec;
}

// Sprite world: shape and size are encoded, position alone drives the
// label, and the intervention weight sits on the two border positions.
WorldSpec dsprites(const std::string& name, bool border_leak) {
    WorldSpec spec;
    const Domain shape_dom = categorical({"square", "ellipse", "heart"});
    const Domain size_dom = ordered_domain({"small", "big"}, {0.0, 1.0});
    const Domain pos_dom = ordered_domain({"bottom_left", "center", "top_right"}, {0.0, 1.0, 2.0});
    const Domain label_dom = ordered_domain({"negative", "positive"}, {0.0, 1.0});

    Scm factors;
    factors.variables = {var("shape", shape_dom), var("size", size_dom), var("pos", pos_dom)};
    factors.cpts = {{"shape", {{0.4, 0.35, 0.25}}},
                    {"size", {{0.55, 0.45}}},
                    {"pos", {{0.3, 0.4, 0.3}}}};
    spec.scms.emplace("factors", factors);

    const Variable x_shape = var("x_shape", shape_dom);
    const Variable x_size = var("x_size", size_dom);
    const Variable x_pos = var("x_pos", pos_dom);
    const Variable m_shape = var("m_shape", shape_dom);
    const Variable m_size = var("m_size", size_dom);
    const Variable y = var("y", label_dom);
    for (const auto& v : {x_shape, x_size, x_pos, m_shape, m_size, y}) add_free(spec, v);

    const Channel x_channel =
        identity_channel({var("shape", shape_dom), var("size", size_dom), var("pos", pos_dom)},
                         {x_shape, x_size, x_pos});
    spec.channels.emplace("observe", to_def(x_channel));

    ChannelDef label;
    label.sources = {"pos"};
    label.targets = {"y"};
    label.rows = {{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
    spec.channels.emplace("label", std::move(label));

    // encoder over (x_shape, x_size, x_pos): shape is copied; the size
    // readout is faithful at the trained center position but saturates at
    // the border positions when border_leak is set
    ChannelDef encode;
    encode.sources = {"x_shape", "x_size", "x_pos"};
    encode.targets = {"m_shape", "m_size"};
    Frame x_frame({x_shape, x_size, x_pos});
    for (std::size_t x = 0; x < x_frame.cells(); ++x) {
        const std::size_t sh = x_frame.digit(x, 0);
        const std::size_t sz = x_frame.digit(x, 1);
        const std::size_t pos = x_frame.digit(x, 2);
        double p_big = double(sz);
        if (border_leak && pos == 2) p_big = 0.9;
        if (border_leak && pos == 0) p_big = 0.1;
        std::vector<double> row(6, 0.0); // (m_shape x m_size) cells
        row[sh * 2 + 1] = p_big;
        row[sh * 2 + 0] = 1.0 - p_big;
        encode.rows.push_back(std::move(row));
    }
    spec.channels.emplace("encode", std::move(encode));

    ScenarioBinding sb;
    sb.name = name;
    sb.factor_scm = "factors";
    sb.x_channel = "observe";
    sb.label_channel = "label";
    sb.m_channel = "encode";
    sb.intervention_dist = DistDef{{"pos"}, {0.5, 0.0, 0.5}};
    spec.scenario = std::move(sb);
    return spec;
}

// Correlated fur/tail/species world; the label is the species and the
// representation copies every observed attribute.
WorldSpec cat_dog() {
    WorldSpec spec;
    Scm factors;
    factors.variables = {var("c", binary()), var("g_fur", binary(), {"c"}),
                         var("g_tail", binary(), {"c"}), var("g_species", binary(), {"c"})};
    factors.cpts = {{"c", {{0.5, 0.5}}},
                    {"g_fur", {{0.7, 0.3}, {0.3, 0.7}}},
                    {"g_tail", {{0.6, 0.4}, {0.4, 0.6}}},
                    {"g_species", {{0.8, 0.2}, {0.2, 0.8}}}};
    spec.scms.emplace("factors", factors);

    const Variable x_fur = var("x_fur", binary());
    const Variable x_tail = var("x_tail", binary());
    const Variable x_species = var("x_species", binary());
    const Variable fur = var("fur", binary());
    const Variable tail = var("tail", binary());
    const Variable species = var("species", binary());
    const Variable y = var("y", ordered_domain({"cat", "dog"}, {0.0, 1.0}));
    for (const auto& v : {x_fur, x_tail, x_species, fur, tail, species, y}) add_free(spec, v);

    spec.channels.emplace(
        "observe", to_def(identity_channel({var("g_fur", binary()), var("g_tail", binary()),
                                            var("g_species", binary())},
                                           {x_fur, x_tail, x_species})));
    spec.channels.emplace("encode",
                          to_def(identity_channel({x_fur, x_tail, x_species}, {fur, tail, species})));

    ChannelDef label;
    label.sources = {"g_species"};
    label.targets = {"y"};
    label.rows = {{1.0, 0.0}, {0.0, 1.0}};
    spec.channels.emplace("label", std::move(label));

    ScenarioBinding sb;
    sb.name = "cat-dog";
    sb.factor_scm = "factors";
    sb.x_channel = "observe";
    sb.label_channel = "label";
    sb.m_channel = "encode";
    sb.intervention_dist = DistDef{{"g_species"}, {0.5, 0.5}};
    spec.scenario = std::move(sb);
    return spec;
}

// Temperature drives color; the representation stores the temperature on
// two scales plus the color, block-aligned as {celsius, fahrenheit} and
// {color}.
WorldSpec temp_color() {
    WorldSpec spec;
    const Domain temp_dom = ordered_domain({"cold", "warm", "hot"}, {0.0, 10.0, 20.0});
    const Domain color_dom = ordered_domain({"dull", "glow", "bright"}, {0.0, 1.0, 2.0});

    Scm factors;
    factors.variables = {var("temp", temp_dom), var("color", color_dom, {"temp"})};
    factors.cpts = {{"temp", {{0.3, 0.4, 0.3}}},
                    {"color", {{0.8, 0.15, 0.05}, {0.15, 0.7, 0.15}, {0.05, 0.15, 0.8}}}};
    spec.scms.emplace("factors", factors);

    const Variable m_celsius = var("m_celsius", ordered_domain({"c0", "c10", "c20"}, {0.0, 10.0, 20.0}));
    const Variable m_color = var("m_color", color_dom);
    const Variable m_fahrenheit =
        var("m_fahrenheit", ordered_domain({"f32", "f50", "f68"}, {32.0, 50.0, 68.0}));
    for (const auto& v : {m_celsius, m_color, m_fahrenheit}) add_free(spec, v);

    const Channel alpha = deterministic_channel(
        {var("temp", temp_dom), var("color", color_dom)}, {m_celsius, m_color, m_fahrenheit},
        [](std::size_t s) {
            const std::size_t t = s / 3;
            const std::size_t c = s % 3;
            return t * 9 + c * 3 + t;
        });
    spec.channels.emplace("alpha", to_def(alpha));

    spec.blocks.emplace("temperature_color", BlockStructure{{{0}, {1}}, {{0, 2}, {1}}, {0, 1}});

    ScenarioBinding sb;
    sb.name = "temp-color";
    sb.factor_scm = "factors";
    sb.alpha = "alpha";
    sb.interpretable = {"temp", "color"};
    sb.blocks = "temperature_color";
    spec.scenario = std::move(sb);
    return spec;
}

// Two-variable abstraction pair: the source model always has the
// temperature -> color edge; the candidate either mirrors it or drops it
// (keeping the same observational marginals).
WorldSpec abstraction_pair(bool mirrored) {
    WorldSpec spec;
    Scm human;
    human.variables = {var("h_temp", binary()), var("h_color", binary(), {"h_temp"})};
    Scm machine;
    machine.variables = {var("m_temp", binary())};
    if (mirrored) {
        human.cpts = {{"h_temp", {{0.5, 0.5}}}, {"h_color", {{0.9, 0.1}, {0.2, 0.8}}}};
        machine.variables.push_back(var("m_color", binary(), {"m_temp"}));
        machine.cpts = {{"m_temp", {{0.5, 0.5}}}, {"m_color", {{0.9, 0.1}, {0.2, 0.8}}}};
    } else {
        human.cpts = {{"h_temp", {{0.5, 0.5}}}, {"h_color", {{0.9, 0.1}, {0.1, 0.9}}}};
        machine.variables.push_back(var("m_color", binary()));
        machine.cpts = {{"m_temp", {{0.5, 0.5}}}, {"m_color", {{0.5, 0.5}}}};
    }
    spec.scms.emplace("human", human);
    spec.scms.emplace("machine", machine);

    spec.channels.emplace(
        "beta", to_def(identity_channel({var("h_temp", binary()), var("h_color", binary())},
                                        {var("m_temp", binary()), var("m_color", binary())})));
    spec.blocks.emplace("identity", BlockStructure{{{0}, {1}}, {{0}, {1}}, {0, 1}});

    ScenarioBinding sb;
    sb.name = mirrored ? "pass-abstraction" : "fail-abstraction";
    sb.human_scm = "human";
    sb.machine_scm = "machine";
    sb.beta = "beta";
    sb.blocks = "identity";
    spec.scenario = std::move(sb);
    return spec;
}

} // namespace

std::vector<std::string> builtin_scenario_names() {
    return {"identity-toy",  "shuffle-toy", "dsprites-toy",     "dsprites-ood",
            "cat-dog",       "temp-color",  "fail-abstraction", "pass-abstraction"};
}

WorldSpec builtin_scenario(const std::string& name) {
    if (name == "identity-toy") return ternary_toy(name, false);
    if (name == "shuffle-toy") return ternary_toy(name, true);
    if (name == "dsprites-toy") return dsprites(name, false);
    if (name == "dsprites-ood") return dsprites(name, true);
    if (name == "cat-dog") return cat_dog();
    if (name == "temp-color") return temp_color();
    if (name == "fail-abstraction") return abstraction_pair(false);
    if (name == "pass-abstraction") return abstraction_pair(true);
    std::ostringstream os;
    os << "unknown scenario '" << name << "'; available:";
    for (const auto& n : builtin_scenario_names()) os << " " << n;
    throw std::invalid_argument(os.str());
}

} // namespace alignkit
