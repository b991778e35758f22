#pragma once

#include <filesystem>
#include <string>

#include "qbrain/data.hpp"
#include "qbrain/train.hpp"

namespace qbrain {

// Settings shared by the CLI subcommands. Keys of the text form mirror the
// TrainConfig and SynthConfig field names; `seed` sets both seeds.
struct RunConfig {
    TrainConfig train;
    SynthConfig synth;
};

// Applies `key=value` lines (blank lines and `#` comments ignored). Unknown
// keys and malformed values throw ConfigError.
void apply_config_text(const std::string& text, RunConfig& cfg);
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);
// Applies a single key/value pair.
void apply_config_value(const std::string& key, const std::string& value, RunConfig& cfg);

// Stable key=value rendering; `threads` is omitted since it never affects results.
std::string train_config_echo(const TrainConfig& cfg);
std::string synth_config_echo(const SynthConfig& cfg);

// Parses a checkpoint's config echo back into a TrainConfig.
TrainConfig train_config_from_echo(const std::string& echo);

// "0-1;1-2" <-> edge list.
std::string format_edges(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);
std::vector<std::pair<std::uint32_t, std::uint32_t>> parse_edges(const std::string& text);

}  // namespace qbrain
