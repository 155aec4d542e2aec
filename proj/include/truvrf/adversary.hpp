#pragma once

#include <cstdint>
#include <string>

#include "truvrf/dataset.hpp"

namespace truvrf {

/// What the server claims to do vs. what it actually executes.
enum class ServerKind { Honest, Neglecting, Lazy, Deceiving };

std::string to_string(ServerKind kind);
ServerKind server_kind_from_string(const std::string& name);

struct ServerBehavior {
    ServerKind kind = ServerKind::Honest;
    double keep_fraction = 0.0;  // Lazy only: fraction of the request the server keeps
    std::uint64_t seed = 0;

    void validate() const;
};

/// Ground truth for benchmarks: the set of IDs the server really forgets.
///   Honest      → the request unchanged
///   Neglecting  → nothing (empty request; the server hands back model_o itself)
///   Lazy(f)     → per class, floor((1-f) * volume) requested samples, chosen
///                 deterministically from the behavior seed
///   Deceiving   → same classes and volumes, but disjoint substitute IDs
UnlearnRequest apply_behavior(const UnlearnRequest& request, const ServerBehavior& behavior,
                              const LabeledDataset& data);

}  // namespace truvrf
