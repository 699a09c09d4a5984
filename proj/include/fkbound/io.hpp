#pragma once

// JSON and CSV conversion for configs and results.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fkbound/bounds.hpp"
#include "fkbound/kernels.hpp"
#include "fkbound/mc.hpp"
#include "fkbound/models.hpp"
#include "fkbound/oscillator.hpp"
#include "fkbound/pekar.hpp"

namespace fkbound::io {

using json = nlohmann::ordered_json;

// Couplings: {"kind": "constant", "level": c}, {"kind": "exp_decay",
// "amplitude": a, "rate": λ}, {"kind": "indicator", "height": h, "cutoff": τ},
// {"kind": "power_law", "amplitude": a, "exponent": k}, and
// {"kind": "tabulated", "times": [...], "values": [...]} or
// {"kind": "tabulated", "csv": "path"} with (t,value) rows.
json to_json(const schedule::CouplingFunction& f);
schedule::CouplingFunction coupling_from_json(const json& j);

/// (t,value) rows; a non-numeric first line is taken as a header.
schedule::CouplingFunction read_tabulated_csv(std::istream& in);
schedule::CouplingFunction read_tabulated_csv_file(const std::string& path);

json to_json(const bounds::BoundReport& r);
json to_json(const bounds::SlopeResult& s);
json to_json(const bounds::CoefficientSet& c);

json to_json(const mc::ActionSpec& s);
mc::ActionSpec action_spec_from_json(const json& j);
json to_json(const mc::McEstimate& e);
json to_json(const mc::Ladder& l);
json to_json(const mc::MaximalityRow& r);
json to_json(const mc::MartingaleReport& r);

json to_json(const models::ModelParams& p);
models::ModelParams model_params_from_json(const json& j);
json to_json(const models::ModelSlope& s);
json to_json(const models::VerifyReport& r);

json to_json(const oscillator::LogExpectation& r);
json to_json(const oscillator::McCrosscheck& r);

json to_json(const pekar::PekarSolution& s, bool with_profile);
json to_json(const pekar::ScalingReport& r);
json to_json(const pekar::Sandwich& s);

json to_json(const kernels::ConvolutionCoefficient& c);
json to_json(const kernels::SubordinationRow& r);
json to_json(const kernels::ExpectationFormula& e);

/// Non-finite doubles become null so the output stays valid JSON.
json number(double x);

/// `rows` (array of flat objects) as CSV with the first row's keys as header.
void write_csv_table(const json& rows, std::ostream& out);

/// Any JSON value flattened to "path,value" lines (JSON-pointer paths).
void write_csv_flat(const json& value, std::ostream& out);

/// Indented "key: value" text.
void write_pretty(const json& value, std::ostream& out, int indent = 0);

}  // namespace fkbound::io
