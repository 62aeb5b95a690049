#pragma once

#include "pulselabel/quality.hpp"
#include "pulselabel/signal.hpp"
#include "pulselabel/types.hpp"

#include <json.hpp>

// JSON mapping of the wire and storage types. Parsing functions validate and
// throw ValidationError naming the offending field.
namespace pulselabel::io {

using nlohmann::json;

json to_json(const SamplePayload& p);
// `declared_duration_s` applies when the payload carries no duration_s.
SamplePayload payload_from_json(const json& j, std::optional<double> declared_duration_s = {});

json to_json(const signal::FeatureVector& f);
signal::FeatureVector features_from_json(const json& j);

json to_json(const quality::QualityReport& q);
quality::QualityReport quality_from_json(const json& j);

}  // namespace pulselabel::io
