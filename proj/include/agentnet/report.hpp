#pragma once

#include <iosfwd>
#include <string>

#include "agentnet/scheduler.hpp"

namespace agentnet {

// One JSON object per trace message: edge transcripts in edge order, then
// node transcripts in node order. Byte-stable for a given run configuration
// regardless of worker count.
void write_trace_jsonl(const RunTrace& trace, std::ostream& out);

// Run digest: topology, configuration, final artifact, call and exchange
// counts, token totals. Everything is deterministic except the meta block
// (wall time), which include_meta=false omits.
std::string run_summary_json(const RunTrace& trace, bool include_meta = true);

void write_ledger_csv(const RunTrace& trace, std::ostream& out);

}  // namespace agentnet
