#pragma once

#include <string>
#include <vector>

#include "lro/pipeline.hpp"

namespace lro {

/// Loads a pipeline configuration from YAML; an empty path yields the
/// defaults. `overrides` are dotted-path assignments ("optimizer.huber_delta=1.0")
/// applied on top of the file. Every key is optional and defaults to the
/// values declared in the config structs; unknown keys are rejected so typos
/// cannot silently fall back to defaults.
PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {});

/// Serializes the full configuration, including defaulted values, so a run
/// manifest records every constant that was in effect.
std::string dump_pipeline_config(const PipelineConfig& cfg);

}  // namespace lro
