#include "qbrain/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "qbrain/errors.hpp"

namespace qbrain {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("invalid number for " + key + ": '" + v + "'");
    return out;
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& v) {
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("invalid non-negative integer for " + key + ": '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"lr_max", [](RunConfig& c, auto& k, auto& v) { c.train.lr_max = parse_double(k, v); }},
        {"lr_min", [](RunConfig& c, auto& k, auto& v) { c.train.lr_min = parse_double(k, v); }},
        {"epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = parse_unsigned<std::uint32_t>(k, v); }},
        {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = parse_unsigned<std::uint32_t>(k, v); }},
        {"tau", [](RunConfig& c, auto& k, auto& v) { c.train.tau = parse_double(k, v); }},
        {"weight_decay", [](RunConfig& c, auto& k, auto& v) { c.train.weight_decay = parse_double(k, v); }},
        {"beta1", [](RunConfig& c, auto& k, auto& v) { c.train.beta1 = parse_double(k, v); }},
        {"beta2", [](RunConfig& c, auto& k, auto& v) { c.train.beta2 = parse_double(k, v); }},
        {"eps_adam", [](RunConfig& c, auto& k, auto& v) { c.train.eps_adam = parse_double(k, v); }},
        {"seed",
         [](RunConfig& c, auto& k, auto& v) {
             c.train.seed = parse_unsigned<std::uint64_t>(k, v);
             c.synth.seed = c.train.seed;
         }},
        {"blocks", [](RunConfig& c, auto& k, auto& v) { c.train.blocks = parse_unsigned<std::uint32_t>(k, v); }},
        {"threads", [](RunConfig& c, auto& k, auto& v) { c.train.threads = parse_unsigned<std::uint32_t>(k, v); }},
        {"phase_shifting", [](RunConfig& c, auto& k, auto& v) { c.train.flags.phase_shifting = parse_bool(k, v); }},
        {"voxel_controlling",
         [](RunConfig& c, auto& k, auto& v) { c.train.flags.voxel_controlling = parse_bool(k, v); }},
        {"measurement_projection",
         [](RunConfig& c, auto& k, auto& v) { c.train.flags.measurement_projection = parse_bool(k, v); }},
        {"voxels", [](RunConfig& c, auto& k, auto& v) { c.synth.voxels = parse_unsigned<std::uint32_t>(k, v); }},
        {"embed_dim", [](RunConfig& c, auto& k, auto& v) { c.synth.embed_dim = parse_unsigned<std::uint32_t>(k, v); }},
        {"latent_dim", [](RunConfig& c, auto& k, auto& v) { c.synth.latent_dim = parse_unsigned<std::uint32_t>(k, v); }},
        {"regions", [](RunConfig& c, auto& k, auto& v) { c.synth.regions = parse_unsigned<std::uint32_t>(k, v); }},
        {"edges", [](RunConfig& c, auto&, auto& v) { c.synth.edges = parse_edges(v); }},
        {"interaction_strength",
         [](RunConfig& c, auto& k, auto& v) { c.synth.interaction_strength = parse_double(k, v); }},
        {"noise_std", [](RunConfig& c, auto& k, auto& v) { c.synth.noise_std = parse_double(k, v); }},
        {"n_train", [](RunConfig& c, auto& k, auto& v) { c.synth.n_train = parse_unsigned<std::uint32_t>(k, v); }},
        {"n_test", [](RunConfig& c, auto& k, auto& v) { c.synth.n_test = parse_unsigned<std::uint32_t>(k, v); }},
    };
    return table;
}

}  // namespace

void apply_config_value(const std::string& key, const std::string& value, RunConfig& cfg) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
}

void apply_config_text(const std::string& text, RunConfig& cfg) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        apply_config_value(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), cfg);
    }
}

void apply_config_file(const std::filesystem::path& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(ss.str(), cfg);
}

std::string train_config_echo(const TrainConfig& c) {
    std::ostringstream o;
    o << "lr_max=" << fmt_double(c.lr_max) << "\n"
      << "lr_min=" << fmt_double(c.lr_min) << "\n"
      << "epochs=" << c.epochs << "\n"
      << "batch_size=" << c.batch_size << "\n"
      << "tau=" << fmt_double(c.tau) << "\n"
      << "weight_decay=" << fmt_double(c.weight_decay) << "\n"
      << "beta1=" << fmt_double(c.beta1) << "\n"
      << "beta2=" << fmt_double(c.beta2) << "\n"
      << "eps_adam=" << fmt_double(c.eps_adam) << "\n"
      << "seed=" << c.seed << "\n"
      << "blocks=" << c.blocks << "\n"
      << "phase_shifting=" << (c.flags.phase_shifting ? "true" : "false") << "\n"
      << "voxel_controlling=" << (c.flags.voxel_controlling ? "true" : "false") << "\n"
      << "measurement_projection=" << (c.flags.measurement_projection ? "true" : "false") << "\n";
    return o.str();
}

std::string synth_config_echo(const SynthConfig& c) {
    std::ostringstream o;
    o << "voxels=" << c.voxels << "\n"
      << "embed_dim=" << c.embed_dim << "\n"
      << "latent_dim=" << c.latent_dim << "\n"
      << "regions=" << c.regions << "\n"
      << "edges=" << format_edges(c.resolved_edges()) << "\n"
      << "interaction_strength=" << fmt_double(c.interaction_strength) << "\n"
      << "noise_std=" << fmt_double(c.noise_std) << "\n"
      << "n_train=" << c.n_train << "\n"
      << "n_test=" << c.n_test << "\n"
      << "seed=" << c.seed << "\n";
    return o.str();
}

TrainConfig train_config_from_echo(const std::string& echo) {
    RunConfig cfg;
    apply_config_text(echo, cfg);
    return cfg.train;
}

std::string format_edges(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    std::string out;
    for (const auto& [a, b] : edges) {
        if (!out.empty()) out += ';';
        out += std::to_string(a) + "-" + std::to_string(b);
    }
    return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> parse_edges(const std::string& text) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw ConfigError("edge '" + item + "' must look like r-s");
        edges.emplace_back(parse_unsigned<std::uint32_t>("edges", trim(item.substr(0, dash))),
                           parse_unsigned<std::uint32_t>("edges", trim(item.substr(dash + 1))));
    }
    return edges;
}

}  // namespace qbrain
