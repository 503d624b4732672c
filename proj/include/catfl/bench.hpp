#pragma once

#include <catfl/baseline.hpp>
#include <catfl/clpa.hpp>
#include <catfl/rng.hpp>
#include <catfl/wire.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace catfl::bench {

struct LatencyStats {
    double median_us = 0.0;
    double q1_us = 0.0;
    double q3_us = 0.0;
    std::size_t iterations = 0;
};

/// Runs `warmup` unmeasured calls, then `iters` timed ones.
inline LatencyStats measure(const std::function<void()>& op, std::size_t iters,
                            std::size_t warmup = 10) {
    for (std::size_t i = 0; i < warmup; ++i) op();
    std::vector<double> samples(iters);
    for (std::size_t i = 0; i < iters; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        op();
        auto t1 = std::chrono::steady_clock::now();
        samples[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    std::sort(samples.begin(), samples.end());
    auto at = [&](double frac) {
        auto idx = static_cast<std::size_t>(frac * static_cast<double>(samples.size() - 1));
        return samples[idx];
    };
    return LatencyStats{at(0.5), at(0.25), at(0.75), iters};
}

struct BenchResult {
    LatencyStats catfl_sign;
    LatencyStats catfl_verify;
    LatencyStats baseline_sign;
    LatencyStats baseline_verify;
    std::size_t catfl_bytes = 0;
    std::size_t baseline_bytes = 0;
    std::size_t payload_bytes = 0;
};

/// Measures sign/verify for both schemes over fixed-size payloads.
inline BenchResult run_bench(const Curve& curve, std::size_t iters, std::size_t payload_bytes,
                             std::uint64_t seed) {
    if (iters < 100) throw std::invalid_argument("bench: need at least 100 iterations");
    SeededRng rng(seed);
    const std::uint64_t now = 1000000;

    Bytes payload(payload_bytes);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng.next_u64());

    auto [params, tra, kgc] = clpa::setup(curve, rng);
    auto rid = clpa::RealIdentity::from_name("bench-entity");
    tra.register_identity(rid);
    auto batch = clpa::replenish_pseudonyms(tra, kgc, params, rid, 1, now, rng);
    auto keys = clpa::extract_usk(params, batch[0].first, batch[0].second, rng);
    if (!keys) throw std::runtime_error("bench: key extraction failed");
    const auto& aid = batch[0].first;

    BenchResult out;
    out.payload_bytes = payload_bytes;
    out.catfl_bytes = clpa::envelope_size(curve, payload_bytes);
    out.baseline_bytes = pki::message_size(curve, payload_bytes);

    clpa::SignedEnvelope env = clpa::sign(params, aid, *keys, payload, now, rng);
    std::uint64_t sink = 0;
    out.catfl_sign = measure(
        [&] { env = clpa::sign(params, aid, *keys, payload, now, rng); }, iters);
    out.catfl_verify = measure(
        [&] { sink += clpa::verify(params, env, now) == clpa::Verdict::accept ? 1 : 0; }, iters);

    auto ca = pki::make_ca(curve, rng);
    auto kp = pki::keygen(curve, rng);
    auto cert = pki::issue_certificate(curve, ca, rid.bits, kp.pk, 0, now + 86400, rng);
    pki::SignedMessage msg = pki::baseline_sign(curve, kp, cert, payload, now, rng);
    out.baseline_sign = measure(
        [&] { msg = pki::baseline_sign(curve, kp, cert, payload, now, rng); }, iters);
    out.baseline_verify = measure(
        [&] {
            sink += pki::baseline_verify(curve, ca.key.pk, msg, now) == pki::CertVerdict::accept;
        },
        iters);
    if (sink == 0) throw std::runtime_error("bench: verification never succeeded");
    return out;
}

/// Inputs to the latency cost formula; latencies come from `run_bench` in
/// bench mode and are user-supplied only in the standalone cost mode.
struct CostModelInput {
    std::uint64_t rounds_n = 0;    // FL training rounds
    std::uint64_t messages_m = 0;  // user-to-user messages
    double t_sign_us = 0.0;
    double t_veri_us = 0.0;
    double poisson_lambda_us = 0.0;  // mean per-round waiting latency
    std::uint32_t pairs = 1;
};

struct CostTotals {
    double training_us = 0.0;   // N * (T_sign + T_veri)
    double messaging_us = 0.0;  // M * (T_sign + T_veri)
    double waiting_us = 0.0;    // N * lambda, the Poisson mean per round
    double total_us = 0.0;
};

inline CostTotals cost_model(const CostModelInput& in) {
    if (in.t_sign_us < 0 || in.t_veri_us < 0 || in.poisson_lambda_us < 0) {
        throw std::invalid_argument("cost_model: negative input");
    }
    CostTotals t;
    double per_op = in.t_sign_us + in.t_veri_us;
    t.training_us = static_cast<double>(in.rounds_n) * per_op;
    t.messaging_us = static_cast<double>(in.messages_m) * per_op;
    t.waiting_us = static_cast<double>(in.rounds_n) * in.poisson_lambda_us;
    t.total_us = t.training_us + t.messaging_us + t.waiting_us;
    return t;
}

/// Number of protocol entities: one server plus a sender and receiver per
/// pair (K = 2P + 1).
inline std::uint32_t entity_count(std::uint32_t pairs) { return 2 * pairs + 1; }

struct CostRow {
    std::string scheme;
    std::size_t bytes_per_message = 0;
    int sign_ops_per_message = 0;
    int verify_ops_per_message = 0;
    double t_sign_us = 0.0;
    double t_veri_us = 0.0;
    CostTotals totals;
};

struct CostReport {
    std::vector<CostRow> rows;
    std::uint32_t entities_k = 0;
};

inline CostRow make_row(const std::string& scheme, std::size_t bytes_per_message, int sign_ops,
                        int verify_ops, const CostModelInput& in) {
    return CostRow{scheme, bytes_per_message, sign_ops, verify_ops, in.t_sign_us, in.t_veri_us,
                   cost_model(in)};
}

/// Per-scheme comparison rows from measured latencies and wire arithmetic.
/// CATFL verifies with one multi-term equation; the baseline checks the
/// certificate signature and then the message signature.
inline CostReport build_report(const Curve& curve, const BenchResult& bench, std::uint64_t rounds_n,
                               std::uint64_t messages_m, double poisson_lambda_us,
                               std::uint32_t pairs) {
    CostModelInput catfl_in{rounds_n,
                            messages_m,
                            bench.catfl_sign.median_us,
                            bench.catfl_verify.median_us,
                            poisson_lambda_us,
                            pairs};
    CostModelInput base_in{rounds_n,
                           messages_m,
                           bench.baseline_sign.median_us,
                           bench.baseline_verify.median_us,
                           poisson_lambda_us,
                           pairs};
    CostReport report;
    report.entities_k = entity_count(pairs);
    report.rows.push_back(make_row("catfl", clpa::envelope_size(curve, bench.payload_bytes), 1, 1,
                                   catfl_in));
    report.rows.push_back(make_row("baseline_pki", pki::message_size(curve, bench.payload_bytes),
                                   1, 2, base_in));
    return report;
}

inline const char* cost_csv_header() {
    return "scheme,bytes_per_message,sign_ops_per_message,verify_ops_per_message,t_sign_us,"
           "t_veri_us,training_cost_us,messaging_cost_us,waiting_cost_us,total_cost_us,entities_k";
}

inline void write_cost_csv(std::ostream& os, const CostReport& report) {
    os << cost_csv_header() << "\n";
    char line[512];
    for (const auto& r : report.rows) {
        std::snprintf(line, sizeof line, "%s,%zu,%d,%d,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%u",
                      r.scheme.c_str(), r.bytes_per_message, r.sign_ops_per_message,
                      r.verify_ops_per_message, r.t_sign_us, r.t_veri_us, r.totals.training_us,
                      r.totals.messaging_us, r.totals.waiting_us, r.totals.total_us,
                      report.entities_k);
        os << line << "\n";
    }
}

}  // namespace catfl::bench
