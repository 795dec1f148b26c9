#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "smot/pricing.hpp"

namespace smot {

/// Exit codes: 0 priced, 2 arbitrage detected (certificate embedded),
/// 3 infeasible or ill-posed input, 4 solver failure.
struct RunOutcome {
    int exit_code = 0;
    nlohmann::ordered_json report;
};

RunOutcome run_config(const nlohmann::json& config);
RunOutcome run_config_file(const std::string& path);

struct SweepRow {
    double axis = 0.0;
    double primal = std::nan("");
    double dual = std::nan("");
    double gap = std::nan("");
    std::string status;
};

struct SweepOutcome {
    int exit_code = 0;
    std::string axis;
    std::vector<SweepRow> rows;
    bool gap_monotone_nondecreasing = true;
    /// Header `axis,P,V,gap,status`, 17-significant-digit round-trip decimals,
    /// one trailing comment line with the monotone-gap annotation.
    std::string csv() const;
};

SweepOutcome sweep_config(const nlohmann::json& config, const std::string& axis,
                          const std::vector<double>& values, int workers = 1);

/// printf %.17g, the shortest representation that round-trips IEEE doubles.
std::string format_double(double v);

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace smot
