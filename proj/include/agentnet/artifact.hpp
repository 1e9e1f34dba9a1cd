#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agentnet/topology.hpp"

namespace agentnet {

// One unit of work product. producer is the contributing node for initial
// and edge-refined artifacts; merged artifacts carry no producer (the
// aggregation marker) and list every merged input in lineage.
struct Artifact {
    std::string id;
    std::string content;
    std::optional<NodeId> producer;
    std::uint32_t version = 0;
    std::uint64_t token_count = 0;        // tokenizer count of content
    std::vector<std::string> lineage;     // parent artifact ids

    bool aggregated() const { return !producer.has_value(); }
};

}  // namespace agentnet
