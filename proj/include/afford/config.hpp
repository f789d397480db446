#pragma once

#include <map>
#include <string>

#include "afford/dataset.hpp"
#include "afford/trainer.hpp"

namespace afford {

// Flat key-value config text: one `key = value` per line, '#' comments and
// blank lines ignored. Typed keys are documented in the README; unknown keys
// are an error so typos surface immediately.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

// Overrides the fields present in `kv`; everything else keeps its default.
void apply_config(TrainConfig& config, const std::map<std::string, std::string>& kv);
void apply_config(SyntheticSpec& spec, const std::map<std::string, std::string>& kv);

}  // namespace afford
