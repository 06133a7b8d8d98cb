#pragma once

#include <span>
#include <string>

#include "ptlab/attention.hpp"
#include "ptlab/fast_attention.hpp"
#include "ptlab/memorize.hpp"
#include "ptlab/surrogate.hpp"
#include "ptlab/transformer.hpp"

namespace ptlab {

/// JSON codecs. Documents carry a schema_version field and round-trip
/// deterministically (serialize(parse(s)) == s for outputs of serialize).

std::string serialize_head(const BuiltHead& built);
BuiltHead parse_head(const std::string& text);

std::string serialize_net(const TransformerNet& net);
TransformerNet parse_net(const std::string& text);

/// JSON array of {"X": row-major, "Y": row-major, "d": d, "L": l}.
std::string serialize_dataset(const Dataset& ds);
Dataset parse_dataset(const std::string& text);

std::string memorize_report_json(const MemorizeReport& report,
                                 const TauBuildInfo& build);

/// CSV with header n,d,B,method,g,m,wall_time_s,max_err,certified.
/// Fields that do not apply stay empty.
std::string bench_records_csv(std::span<const BenchRecord> records);
/// One JSON object per line, nulls for fields that do not apply.
std::string bench_records_jsonl(std::span<const BenchRecord> records);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace ptlab
