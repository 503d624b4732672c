// catfl command-line front end: deterministic protocol simulations, the
// sign/verify latency benchmark, the latency cost model, and offline
// pseudonym tracing.

#include <CLI11.hpp>

#include <catfl/bench.hpp>
#include <catfl/config.hpp>
#include <catfl/sim.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace catfl;

Curve curve_by_name(const std::string& name) {
    if (name == "toy") return Curve::toy();
    if (name == "prod") return Curve::secp256k1();
    throw sim::ConfigError("unknown curve '" + name + "' (expected toy or prod)");
}

void print_metrics(const sim::Metrics& m) {
    std::printf("entities: K=%u protocol (+TRA/KGC: %u)\n", m.protocol_entities,
                m.total_entities);
    std::printf("accepted: %llu  rejected: %llu\n",
                static_cast<unsigned long long>(m.accepted),
                static_cast<unsigned long long>(m.rejected));
    for (const auto& [reason, count] : m.rejects_by_reason) {
        std::printf("  reject[%s] = %llu\n", reason.c_str(),
                    static_cast<unsigned long long>(count));
    }
    if (m.detection_rate) {
        std::printf("adversarial: %llu sent, %llu rejected, detection rate %.3f\n",
                    static_cast<unsigned long long>(m.adversarial_total),
                    static_cast<unsigned long long>(m.adversarial_rejected),
                    *m.detection_rate);
    }
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& curve_name, std::uint64_t seed_override, bool have_seed) {
    std::ifstream cfg_file(config_path);
    if (!cfg_file) {
        std::fprintf(stderr, "error: cannot open config file '%s'\n", config_path.c_str());
        return 2;
    }
    sim::SimConfig cfg = sim::parse_sim_config(cfg_file);
    if (have_seed) cfg.seed = seed_override;

    Curve curve = curve_by_name(curve_name);
    sim::SimState state = sim::build(cfg, curve);
    sim::run_rounds(state, state.cfg.fl.rounds);
    sim::Metrics metrics = sim::compute_metrics(state.transcript, state.cfg.pairs);
    sim::RunOutcome outcome = sim::evaluate_run(state, metrics);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream ts(std::filesystem::path(out_dir) / "transcript.jsonl");
        state.transcript.write_jsonl(ts);
    }
    {
        std::ofstream ms(std::filesystem::path(out_dir) / "metrics.csv");
        sim::write_metrics_csv(ms, state);
    }
    {
        std::ofstream tra(std::filesystem::path(out_dir) / "tra_state.json");
        tra << sim::export_tra_state(state.params, state.tra).dump(2) << "\n";
    }

    print_metrics(metrics);
    if (!state.rounds.empty()) {
        std::printf("final mse: %.9g after %zu rounds\n", state.rounds.back().mse,
                    state.rounds.size());
    }
    if (!outcome.ok) {
        std::fprintf(stderr, "scenario assertion failed: %s\n", outcome.message.c_str());
        return 1;
    }
    std::printf("scenario assertions hold\n");
    return 0;
}

int cmd_bench(const std::string& curve_name, std::size_t iters, std::size_t payload,
              std::uint64_t rounds, std::uint64_t messages, double lambda_us,
              std::uint32_t pairs, std::uint64_t seed, const std::string& out_dir) {
    Curve curve = curve_by_name(curve_name);
    bench::BenchResult result = bench::run_bench(curve, iters, payload, seed);
    std::printf("payload %zu bytes, %zu iterations\n", result.payload_bytes, iters);
    auto show = [](const char* name, const bench::LatencyStats& s) {
        std::printf("%-16s median %10.2f us  (q1 %10.2f, q3 %10.2f)\n", name, s.median_us,
                    s.q1_us, s.q3_us);
    };
    show("catfl sign", result.catfl_sign);
    show("catfl verify", result.catfl_verify);
    show("baseline sign", result.baseline_sign);
    show("baseline verify", result.baseline_verify);
    std::printf("bytes/message: catfl %zu, baseline %zu\n", result.catfl_bytes,
                result.baseline_bytes);

    bench::CostReport report =
        bench::build_report(curve, result, rounds, messages, lambda_us, pairs);
    if (out_dir.empty()) {
        bench::write_cost_csv(std::cout, report);
    } else {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(std::filesystem::path(out_dir) / "cost_report.csv");
        bench::write_cost_csv(os, report);
    }
    return 0;
}

int cmd_cost(std::uint64_t rounds, std::uint64_t messages, double t_sign, double t_veri,
             double base_t_sign, double base_t_veri, double lambda_us, std::uint32_t pairs,
             const std::string& curve_name, std::size_t payload, const std::string& out_dir) {
    Curve curve = curve_by_name(curve_name);
    bench::CostReport report;
    report.entities_k = bench::entity_count(pairs);
    report.rows.push_back(bench::make_row(
        "catfl", clpa::envelope_size(curve, payload), 1, 1,
        bench::CostModelInput{rounds, messages, t_sign, t_veri, lambda_us, pairs}));
    report.rows.push_back(bench::make_row(
        "baseline_pki", pki::message_size(curve, payload), 1, 2,
        bench::CostModelInput{rounds, messages, base_t_sign, base_t_veri, lambda_us, pairs}));
    if (out_dir.empty()) {
        bench::write_cost_csv(std::cout, report);
    } else {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(std::filesystem::path(out_dir) / "cost_report.csv");
        bench::write_cost_csv(os, report);
    }
    return 0;
}

int cmd_trace(const std::string& tra_path, const std::string& transcript_path,
              const std::string& aid_hex) {
    auto aid_data = from_hex(aid_hex);
    if (!aid_data) {
        std::fprintf(stderr, "error: pseudonym is not valid hex\n");
        return 2;
    }
    std::ifstream tra_file(tra_path);
    if (!tra_file) {
        std::fprintf(stderr, "error: cannot open TRA state '%s'\n", tra_path.c_str());
        return 2;
    }
    nlohmann::json tra_json = nlohmann::json::parse(tra_file);
    sim::TraExport tra = sim::import_tra_state(tra_json);

    if (!transcript_path.empty()) {
        std::ifstream ts(transcript_path);
        if (!ts) {
            std::fprintf(stderr, "error: cannot open transcript '%s'\n", transcript_path.c_str());
            return 2;
        }
        bool found = false;
        std::string line;
        while (std::getline(ts, line)) {
            if (line.empty()) continue;
            auto event = nlohmann::json::parse(line);
            if (event.value("aid", "") == aid_hex) {
                found = true;
                break;
            }
        }
        if (!found) {
            std::printf("not-found: pseudonym does not appear in the transcript\n");
            return 1;
        }
    }

    auto aid = sim::aid_from_bytes(tra.params.curve, *aid_data);
    if (!aid) {
        std::fprintf(stderr, "error: pseudonym bytes are malformed for this curve\n");
        return 2;
    }
    auto rid = clpa::trace(tra.tra, tra.params, *aid);
    if (!rid) {
        std::printf("untraceable\n");
        return 0;
    }
    std::printf("traced: %s (rid %s)\n", rid->name().c_str(), rid->hex().c_str());
    return 0;
}

int cmd_attack(const std::string& curve_name, std::uint32_t seeds, const std::string& which,
               std::uint32_t rounds, std::uint32_t pairs, const std::string& out_dir) {
    Curve curve = curve_by_name(curve_name);
    std::vector<sim::ScenarioKind> catalog;
    if (which == "all") {
        catalog = {sim::ScenarioKind::fake_server, sim::ScenarioKind::client_modification,
                   sim::ScenarioKind::replay, sim::ScenarioKind::a1_pk_replacement,
                   sim::ScenarioKind::a2_master_key};
    } else {
        catalog = {sim::scenario_from_string(which)};
    }

    bool all_ok = true;
    std::string csv = "scenario,seeds,adversarial_total,adversarial_rejected,detection_rate\n";
    for (auto kind : catalog) {
        std::uint64_t total = 0;
        std::uint64_t rejected = 0;
        bool scenario_ok = true;
        for (std::uint32_t seed = 1; seed <= seeds; ++seed) {
            sim::SimConfig cfg;
            cfg.pairs = pairs;
            cfg.fl.rounds = rounds;
            cfg.fl.dimension = 2;
            cfg.fl.points_per_client = 30;
            cfg.fl.local_epochs = 1;
            cfg.fl.participants_per_round = 2 * pairs;
            cfg.fl.data_seed = seed;
            cfg.poisson_lambda = 2.0;
            cfg.seed = seed;
            cfg.scenario = {kind, rounds > 1 ? rounds - 1 : 1, 0};
            sim::SimState state = sim::build(cfg, curve);
            sim::run_rounds(state, cfg.fl.rounds);
            auto metrics = sim::compute_metrics(state.transcript, cfg.pairs);
            auto outcome = sim::evaluate_run(state, metrics);
            total += metrics.adversarial_total;
            rejected += metrics.adversarial_rejected;
            scenario_ok = scenario_ok && outcome.ok;
        }
        double rate = total == 0 ? 0.0 : static_cast<double>(rejected) /
                                             static_cast<double>(total);
        scenario_ok = scenario_ok && total > 0 && rejected == total;
        char line[160];
        std::snprintf(line, sizeof line, "%s,%u,%llu,%llu,%.3f",
                      std::string(sim::to_string(kind)).c_str(), seeds,
                      static_cast<unsigned long long>(total),
                      static_cast<unsigned long long>(rejected), rate);
        csv += line;
        csv += "\n";
        std::printf("%-22s detection rate %.3f over %u seeds (%llu envelopes)%s\n",
                    std::string(sim::to_string(kind)).c_str(), rate, seeds,
                    static_cast<unsigned long long>(total), scenario_ok ? "" : "  [FAIL]");
        all_ok = all_ok && scenario_ok;
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(std::filesystem::path(out_dir) / "attack_report.csv");
        os << csv;
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CATFL certificateless-authentication simulator and benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string curve_name = "prod";
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "execute a simulation from a config file");
    run->add_option("--config", config_path, "key=value config file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--curve", curve_name, "toy or prod (default prod)");
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");

    std::size_t iters = 200;
    std::size_t payload = 256;
    std::uint64_t rounds = 50;
    std::uint64_t messages = 100;
    double lambda_us = 0.0;
    std::uint32_t pairs = 1;
    std::string bench_out;
    std::uint64_t bench_seed = 7;
    auto* bench_cmd = app.add_subcommand("bench", "measure sign/verify latencies");
    bench_cmd->add_option("--curve", curve_name, "toy or prod (default prod)");
    bench_cmd->add_option("--iters", iters, "iterations (>= 100)");
    bench_cmd->add_option("--payload", payload, "payload bytes");
    bench_cmd->add_option("--rounds", rounds, "training rounds N for the report");
    bench_cmd->add_option("--messages", messages, "user messages M for the report");
    bench_cmd->add_option("--lambda", lambda_us, "mean per-round waiting latency (us)");
    bench_cmd->add_option("--pairs", pairs, "sender/receiver pairs P");
    bench_cmd->add_option("--seed", bench_seed, "benchmark seed");
    bench_cmd->add_option("--out", bench_out, "directory for cost_report.csv");

    double t_sign = 0.0, t_veri = 0.0;
    double base_t_sign = -1.0, base_t_veri = -1.0;
    auto* cost_cmd = app.add_subcommand("cost", "evaluate the latency cost model");
    cost_cmd->add_option("--rounds", rounds, "training rounds N")->required();
    cost_cmd->add_option("--messages", messages, "user messages M")->required();
    cost_cmd->add_option("--t-sign", t_sign, "signature latency (us)")->required();
    cost_cmd->add_option("--t-veri", t_veri, "verification latency (us)")->required();
    cost_cmd->add_option("--base-t-sign", base_t_sign, "baseline sign latency (default t-sign)");
    cost_cmd->add_option("--base-t-veri", base_t_veri, "baseline verify latency (default t-veri)");
    cost_cmd->add_option("--lambda", lambda_us, "mean per-round waiting latency (us)");
    cost_cmd->add_option("--pairs", pairs, "sender/receiver pairs P");
    cost_cmd->add_option("--curve", curve_name, "toy or prod (default prod)");
    cost_cmd->add_option("--payload", payload, "payload bytes for wire arithmetic");
    cost_cmd->add_option("--out", bench_out, "directory for cost_report.csv");

    std::string tra_path;
    std::string transcript_path;
    std::string aid_hex;
    auto* trace_cmd = app.add_subcommand("trace", "recover the identity behind a pseudonym");
    trace_cmd->add_option("--tra", tra_path, "tra_state.json from a run")->required();
    trace_cmd->add_option("--transcript", transcript_path, "transcript.jsonl to search");
    trace_cmd->add_option("--aid", aid_hex, "pseudonym bytes in hex")->required();

    std::uint32_t seeds = 100;
    std::string which = "all";
    std::uint32_t attack_rounds = 3;
    auto* attack_cmd = app.add_subcommand("attack", "run the attack catalog");
    attack_cmd->add_option("--curve", curve_name, "toy or prod (default prod)");
    attack_cmd->add_option("--seeds", seeds, "seeds per scenario");
    attack_cmd->add_option("--scenario", which, "scenario name or 'all'");
    attack_cmd->add_option("--rounds", attack_rounds, "rounds per run");
    attack_cmd->add_option("--pairs", pairs, "sender/receiver pairs P");
    attack_cmd->add_option("--out", bench_out, "directory for attack_report.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, out_dir, curve_name, seed, !seed_opt->empty());
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(curve_name, iters, payload, rounds, messages, lambda_us, pairs,
                             bench_seed, bench_out);
        }
        if (cost_cmd->parsed()) {
            if (base_t_sign < 0) base_t_sign = t_sign;
            if (base_t_veri < 0) base_t_veri = t_veri;
            return cmd_cost(rounds, messages, t_sign, t_veri, base_t_sign, base_t_veri,
                            lambda_us, pairs, curve_name, payload, bench_out);
        }
        if (trace_cmd->parsed()) {
            return cmd_trace(tra_path, transcript_path, aid_hex);
        }
        if (attack_cmd->parsed()) {
            return cmd_attack(curve_name, seeds, which, attack_rounds, pairs, bench_out);
        }
    } catch (const sim::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
