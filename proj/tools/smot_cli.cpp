#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "smot/runner.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supermartingale optimal transport pricing under a short-selling ban"};

    std::string config_path;
    std::string out_path;
    std::string sweep_arg;
    std::string routes_arg;
    long long seed = -1;
    bool verbose = false;

    app.add_option("--config", config_path, "problem config (JSON)")->required();
    app.add_option("--out", out_path, "output path (report JSON, or CSV when sweeping)");
    app.add_option("--sweep", sweep_arg, "AXIS=v1,v2,... with AXIS in {proxy_factor, grid_size, N}");
    app.add_option("--routes", routes_arg, "comma list of direct,beta,gammaN");
    app.add_option("--seed", seed, "seed for randomized payoff tables");
    app.add_flag("--verbose", verbose, "progress notes on stderr");

    CLI11_PARSE(app, argc, argv);

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot open config: " << config_path << "\n";
        return 3;
    }
    nlohmann::json config;
    try {
        config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "config parse error in " << config_path << ": " << e.what() << "\n";
        return 3;
    }
    if (!routes_arg.empty()) {
        nlohmann::json routes = nlohmann::json::array();
        std::stringstream ss(routes_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) routes.push_back(tok);
        config["routes"] = routes;
    }
    if (seed >= 0) config["seed"] = seed;

    auto emit = [&](const std::string& text) {
        if (out_path.empty() || out_path == "-") {
            std::cout << text;
            return true;
        }
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot write: " << out_path << "\n";
            return false;
        }
        out << text;
        return true;
    };

    try {
        if (!sweep_arg.empty()) {
            auto eq = sweep_arg.find('=');
            if (eq == std::string::npos) {
                std::cerr << "--sweep expects AXIS=v1,v2,...\n";
                return 3;
            }
            std::string axis = sweep_arg.substr(0, eq);
            auto values = parse_values(sweep_arg.substr(eq + 1));
            int workers = config.value("workers", 1);
            auto sweep = smot::sweep_config(config, axis, values, workers);
            if (verbose)
                std::cerr << "sweep " << axis << ": " << sweep.rows.size()
                          << " points, gap monotone nondecreasing: "
                          << (sweep.gap_monotone_nondecreasing ? "yes" : "no") << "\n";
            if (!emit(sweep.csv())) return 3;
            return sweep.exit_code;
        }
        auto res = smot::run_config(config);
        if (verbose && res.report.contains("pricing"))
            std::cerr << "P=" << res.report["pricing"]["primal_value"]
                      << " V=" << res.report["pricing"]["dual_value"]
                      << " gap=" << res.report["pricing"]["gap"] << "\n";
        if (!emit(res.report.dump(2) + "\n")) return 3;
        return res.exit_code;
    } catch (const smot::Error& e) {
        std::cerr << e.what() << "\n";
        switch (e.code()) {
            case smot::ErrorCode::IterationLimitExceeded:
            case smot::ErrorCode::NumericalBreakdown:
            case smot::ErrorCode::CertificateVerificationFailed:
                return 4;
            default:
                return 3;
        }
    }
}
