#include "truvrf/adversary.hpp"

#include <cmath>

namespace truvrf {

std::string to_string(ServerKind kind) {
    switch (kind) {
        case ServerKind::Honest: return "honest";
        case ServerKind::Neglecting: return "neglecting";
        case ServerKind::Lazy: return "lazy";
        case ServerKind::Deceiving: return "deceiving";
    }
    throw invalid_input("unknown server kind");
}

ServerKind server_kind_from_string(const std::string& name) {
    if (name == "honest") return ServerKind::Honest;
    if (name == "neglecting") return ServerKind::Neglecting;
    if (name == "lazy") return ServerKind::Lazy;
    if (name == "deceiving") return ServerKind::Deceiving;
    throw invalid_input("unknown server kind '" + name + "'");
}

void ServerBehavior::validate() const {
    if (kind == ServerKind::Lazy && !(keep_fraction > 0.0 && keep_fraction < 1.0))
        throw invalid_input("lazy keep_fraction must lie strictly between 0 and 1");
}

UnlearnRequest apply_behavior(const UnlearnRequest& request, const ServerBehavior& behavior,
                              const LabeledDataset& data) {
    behavior.validate();
    validate_request(data, request);
    switch (behavior.kind) {
        case ServerKind::Honest:
            return request;
        case ServerKind::Neglecting:
            return UnlearnRequest{};
        case ServerKind::Deceiving:
            return sample_disjoint(data, request, behavior.seed);
        case ServerKind::Lazy: {
            UnlearnRequest out;
            for (const auto& [label, ids] : request.ids_by_class) {
                if (ids.empty()) continue;
                std::size_t forget = static_cast<std::size_t>(
                    std::floor((1.0 - behavior.keep_fraction) * static_cast<double>(ids.size())));
                if (forget == 0) continue;
                std::vector<std::int64_t> ordered(ids.begin(), ids.end());
                Rng rng(mix_seed(behavior.seed, tag_seed("lazy"),
                                 static_cast<std::uint64_t>(label)));
                for (std::size_t p : rng.sample_indices(ordered.size(), forget))
                    out.ids_by_class[label].insert(ordered[p]);
            }
            return out;
        }
    }
    throw invalid_input("unknown server kind");
}

}  // namespace truvrf
