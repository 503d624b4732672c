#pragma once

#include <catfl/clpa.hpp>
#include <catfl/fl.hpp>
#include <catfl/rng.hpp>
#include <catfl/sha256.hpp>
#include <catfl/wire.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace catfl::sim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ScenarioKind {
    none,
    fake_server,
    client_modification,
    replay,
    a1_pk_replacement,
    a2_master_key,
};

inline std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::none: return "none";
        case ScenarioKind::fake_server: return "fake_server";
        case ScenarioKind::client_modification: return "client_modification";
        case ScenarioKind::replay: return "replay";
        case ScenarioKind::a1_pk_replacement: return "a1_pk_replacement";
        case ScenarioKind::a2_master_key: return "a2_master_key";
    }
    return "unknown";
}

inline ScenarioKind scenario_from_string(std::string_view name) {
    for (auto k : {ScenarioKind::none, ScenarioKind::fake_server,
                   ScenarioKind::client_modification, ScenarioKind::replay,
                   ScenarioKind::a1_pk_replacement, ScenarioKind::a2_master_key}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown attack scenario: " + std::string(name));
}

struct AttackScenario {
    ScenarioKind kind = ScenarioKind::none;
    std::uint32_t target_round = 1;
    std::uint32_t target_entity = 0;  // client index for client-side scenarios
};

struct SimConfig {
    std::uint32_t pairs = 1;  // P sender/receiver pairs; the CS is the +1 of K = 2P+1
    fl::FLConfig fl;
    AttackScenario scenario;
    double poisson_lambda = 5.0;  // mean extra waiting seconds per round
    std::uint64_t seed = 1;

    void validate() const {
        if (pairs == 0) throw ConfigError("sim config: pairs must be positive");
        fl.validate();
        if (scenario.kind != ScenarioKind::none) {
            if (scenario.target_round == 0 || scenario.target_round > fl.rounds) {
                throw ConfigError("sim config: target round outside the training schedule");
            }
            if (scenario.target_entity >= 2 * pairs) {
                throw ConfigError("sim config: target entity out of range");
            }
        }
        if (poisson_lambda < 0.0) throw ConfigError("sim config: negative waiting latency");
    }
};

struct TranscriptEvent {
    std::uint64_t time = 0;
    std::uint32_t round = 0;  // 0 for build-time events
    std::string from;
    std::string to;
    std::string kind;     // provision | update | broadcast | u2u
    std::string verdict;  // ok | accept | reject
    std::string reason;   // empty unless rejected
    std::string aid;      // hex of the canonical pseudonym bytes
    std::string digest;   // hex of sha256 over the wire bytes
    bool adversarial = false;
    std::size_t bytes = 0;
};

struct Transcript {
    std::vector<TranscriptEvent> events;

    void write_jsonl(std::ostream& os) const {
        for (const auto& e : events) {
            nlohmann::ordered_json j;
            j["time"] = e.time;
            j["round"] = e.round;
            j["from"] = e.from;
            j["to"] = e.to;
            j["kind"] = e.kind;
            j["verdict"] = e.verdict;
            j["reason"] = e.reason;
            j["aid"] = e.aid;
            j["digest"] = e.digest;
            j["adversarial"] = e.adversarial;
            j["bytes"] = e.bytes;
            os << j.dump() << "\n";
        }
    }

    std::string jsonl() const {
        std::ostringstream os;
        write_jsonl(os);
        return os.str();
    }
};

struct RoundStats {
    std::uint32_t round = 0;
    double mse = 0.0;
    std::size_t bytes = 0;
    std::uint32_t accepted = 0;
    std::uint32_t rejected = 0;
};

struct EntityState {
    std::string name;
    clpa::RealIdentity rid;
    std::vector<std::pair<clpa::Pseudonym, clpa::PartialSecretKey>> stock;
    clpa::Pseudonym aid;
    clpa::FullKeyPair keys;
    clpa::ReplayCache replay;
    fl::ModelVector model;
};

struct SimState {
    SimConfig cfg;
    clpa::SystemParams params;
    clpa::TraState tra;
    clpa::KgcState kgc;
    EntityState cs;
    std::vector<EntityState> users;  // pair j: users[2j] sends to users[2j+1]
    fl::Task task;
    fl::ModelVector global;
    SeededRng rng;
    std::uint64_t clock = 0;
    Transcript transcript;
    std::vector<RoundStats> rounds;
    bool safety_ok = true;  // aggregate always matches the accepted-set recomputation
    std::optional<clpa::SignedEnvelope> captured;  // for the replay scenario
    Bytes captured_wire;
};

inline constexpr std::uint64_t kEpoch = 1000000;  // simulated-seconds origin
inline constexpr std::uint64_t kRoundStep = 10;   // base per-round advance

// -- scripted forgery strategy families --

/// A1-style forgery `strategy` in {0,1,2}: the adversary substitutes a
/// public key whose secrets it knows but holds no KGC master secret.
///   0: raw key substitution on the observed envelope
///   1: substitution plus a recomputed key tag
///   2: full re-sign treating the substituted nonce as the partial secret
inline clpa::SignedEnvelope craft_a1_forgery(const clpa::SystemParams& params,
                                             const clpa::SignedEnvelope& observed, int strategy,
                                             std::uint64_t now, SeededRng& rng) {
    const Curve& c = params.curve;
    Scalar own_secret = c.random_scalar(rng);  // stands in for the victim's secret value
    Scalar own_nonce = c.random_scalar(rng);   // stands in for the KGC's nonce
    clpa::SignedEnvelope forged = observed;
    forged.sent_at = now;
    forged.pk = clpa::PublicKey{c.mul_base(own_secret), c.mul_base(own_nonce)};
    if (strategy >= 1) {
        forged.key_tag = clpa::compute_key_tag(params, forged.aid, forged.pk.kgc_commitment);
    }
    if (strategy >= 2) {
        Scalar nonce = c.random_scalar(rng);
        forged.commitment = c.mul_base(nonce);
        Scalar c1 = hash_to_scalar(
            c, "H2:", clpa::detail::challenge1_material(params, forged.payload, forged.aid,
                                                        forged.pk, forged.commitment,
                                                        forged.sent_at));
        Scalar c2 = hash_to_scalar(
            c, "H3:", clpa::detail::challenge2_material(params, forged.payload, forged.aid,
                                                        forged.pk, forged.commitment, c1));
        // missing term: c2 * key_tag * kgc_master
        forged.response =
            c.s_sub(nonce, c.s_add(c.s_mul(c1, own_secret), c.s_mul(c2, own_nonce)));
    }
    return forged;
}

/// A2-style forgery `strategy` in {0,1,2}: the adversary holds the KGC
/// master secret but cannot touch the victim's published keys.
///   0: fresh commitment with a random response
///   1: response built from the known key_tag*master share only
///   2: observed signature spliced onto a new payload
inline clpa::SignedEnvelope craft_a2_forgery(const clpa::SystemParams& params,
                                             const clpa::SignedEnvelope& observed,
                                             const Scalar& kgc_master, int strategy,
                                             std::uint64_t now, SeededRng& rng) {
    const Curve& c = params.curve;
    clpa::SignedEnvelope forged = observed;
    forged.sent_at = now;
    Bytes payload = {'a', 't', 'k', ':'};
    append_u64be(payload, rng.next_u64());
    forged.payload = payload;
    if (strategy == 0) {
        forged.commitment = c.mul_base(c.random_scalar(rng));
        forged.response = c.random_scalar(rng);
    } else if (strategy == 1) {
        Scalar nonce = c.random_scalar(rng);
        forged.commitment = c.mul_base(nonce);
        Scalar c1 = hash_to_scalar(
            c, "H2:", clpa::detail::challenge1_material(params, forged.payload, forged.aid,
                                                        forged.pk, forged.commitment,
                                                        forged.sent_at));
        Scalar c2 = hash_to_scalar(
            c, "H3:", clpa::detail::challenge2_material(params, forged.payload, forged.aid,
                                                        forged.pk, forged.commitment, c1));
        // knows key_tag * master; lacks the nonce share and the secret value
        forged.response = c.s_sub(nonce, c.s_mul(c2, c.s_mul(forged.key_tag, kgc_master)));
    }
    // strategy 2 keeps the observed (commitment, response) pair
    return forged;
}

struct SweepResult {
    std::size_t attempts = 0;
    std::size_t accepted = 0;
};

inline SweepResult a1_pk_replacement_sweep(const clpa::SystemParams& params,
                                           const clpa::SignedEnvelope& observed,
                                           std::size_t attempts, std::uint64_t now,
                                           SeededRng& rng) {
    SweepResult res;
    for (std::size_t i = 0; i < attempts; ++i) {
        auto forged = craft_a1_forgery(params, observed, static_cast<int>(i % 3), now, rng);
        ++res.attempts;
        if (clpa::verify(params, forged, now) == clpa::Verdict::accept) ++res.accepted;
    }
    return res;
}

inline SweepResult a2_master_key_sweep(const clpa::SystemParams& params,
                                       const clpa::SignedEnvelope& observed,
                                       const Scalar& kgc_master, std::size_t attempts,
                                       std::uint64_t now, SeededRng& rng) {
    SweepResult res;
    for (std::size_t i = 0; i < attempts; ++i) {
        auto forged =
            craft_a2_forgery(params, observed, kgc_master, static_cast<int>(i % 3), now, rng);
        ++res.attempts;
        if (clpa::verify(params, forged, now) == clpa::Verdict::accept) ++res.accepted;
    }
    return res;
}

namespace detail {

inline std::string client_name(std::uint32_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "client-%02u", index);
    return buf;
}

inline void provision(SimState& st, EntityState& ent) {
    ent.stock = clpa::replenish_pseudonyms(st.tra, st.kgc, st.params, ent.rid, 2, st.clock,
                                           st.rng);
    ent.aid = ent.stock.front().first;
    auto keys = clpa::extract_usk(st.params, ent.aid, ent.stock.front().second, st.rng);
    if (!keys) throw clpa::ProtocolError("build: partial key check failed for " + ent.name);
    ent.keys = std::move(*keys);
    st.transcript.events.push_back(TranscriptEvent{
        st.clock, 0, "tra+kgc", ent.name, "provision", "ok", "",
        to_hex(clpa::aid_bytes(st.params.curve, ent.aid)), "", false, 0});
}

struct Delivery {
    std::string from;
    std::string to;
    std::string kind;
    bool adversarial = false;
};

/// Pushes wire bytes through decode + verify and logs one transcript event.
/// Returns the envelope when it was accepted.
inline std::optional<clpa::SignedEnvelope> deliver(SimState& st, std::uint32_t round,
                                                   const Bytes& wire, const Delivery& how,
                                                   clpa::ReplayCache& cache) {
    TranscriptEvent ev;
    ev.time = st.clock;
    ev.round = round;
    ev.from = how.from;
    ev.to = how.to;
    ev.kind = how.kind;
    ev.adversarial = how.adversarial;
    ev.bytes = wire.size();
    ev.digest = to_hex(sha256(wire));

    auto env = clpa::decode_envelope(st.params, wire);
    std::optional<clpa::SignedEnvelope> out;
    if (!env) {
        ev.verdict = "reject";
        ev.reason = std::string(clpa::to_string(clpa::Verdict::reject_malformed));
    } else {
        ev.aid = to_hex(clpa::aid_bytes(st.params.curve, env->aid));
        auto verdict = clpa::verify(st.params, *env, st.clock, &cache);
        if (verdict == clpa::Verdict::accept) {
            ev.verdict = "accept";
            out = std::move(*env);
        } else {
            ev.verdict = "reject";
            ev.reason = std::string(clpa::to_string(verdict));
        }
    }
    st.transcript.events.push_back(std::move(ev));
    return out;
}

/// Self-minted credentials: a pseudonym the TRA never issued plus a key
/// pair whose partial secret is a blind guess at the unknown KGC share.
inline std::pair<clpa::Pseudonym, clpa::FullKeyPair> forge_identity(const clpa::SystemParams& params,
                                                                    std::uint64_t now,
                                                                    SeededRng& rng) {
    const Curve& c = params.curve;
    clpa::Pseudonym aid;
    aid.point = c.mul_base(c.random_scalar(rng));
    for (auto& b : aid.masked_id) b = static_cast<std::uint8_t>(rng.next_u64());
    aid.issued_at = now;

    Scalar guessed_partial = c.random_scalar(rng);
    GroupElement commitment = c.mul_base(c.random_scalar(rng));
    Scalar tag = clpa::compute_key_tag(params, aid, commitment);
    Scalar secret_value = c.random_scalar(rng);
    clpa::FullKeyPair keys{secret_value, guessed_partial,
                           clpa::PublicKey{c.mul_base(secret_value), commitment}, tag};
    return {aid, keys};
}

}  // namespace detail

/// Workflow steps 1-5: system setup, identity registration, pseudonym and
/// partial-key provisioning, user-key extraction, and global model init.
inline SimState build(const SimConfig& cfg_in, const Curve& curve) {
    SimConfig cfg = cfg_in;
    cfg.fl.total_clients = 2 * cfg.pairs;
    if (cfg.fl.participants_per_round > cfg.fl.total_clients) {
        cfg.fl.participants_per_round = cfg.fl.total_clients;
    }
    cfg.validate();

    SimState st{.cfg = cfg,
                .params = clpa::SystemParams{curve, {}, {}, 0, 0, {}},
                .tra = {},
                .kgc = {},
                .cs = {},
                .users = {},
                .task = {},
                .global = {},
                .rng = SeededRng(cfg.seed),
                .clock = kEpoch,
                .transcript = {},
                .rounds = {},
                .safety_ok = true,
                .captured = std::nullopt,
                .captured_wire = {}};
    auto setup = clpa::setup(curve, st.rng);
    st.params = std::move(setup.params);
    st.tra = std::move(setup.tra);
    st.kgc = std::move(setup.kgc);

    st.cs.name = "cs";
    st.cs.rid = clpa::RealIdentity::from_name("cs");
    st.tra.register_identity(st.cs.rid);
    st.users.resize(cfg.fl.total_clients);
    for (std::uint32_t i = 0; i < cfg.fl.total_clients; ++i) {
        st.users[i].name = detail::client_name(i);
        st.users[i].rid = clpa::RealIdentity::from_name(st.users[i].name);
        st.tra.register_identity(st.users[i].rid);
    }

    detail::provision(st, st.cs);
    for (auto& u : st.users) detail::provision(st, u);

    SeededRng data_rng(cfg.fl.data_seed);
    st.task = fl::make_task(cfg.fl, data_rng);
    st.global.weights.assign(cfg.fl.dimension, 0.0);
    st.global.round = 0;
    for (auto& u : st.users) u.model = st.global;
    st.cs.model = st.global;
    return st;
}

/// Installs (or replaces) the adversary for subsequent rounds.
inline void inject(SimState& st, const AttackScenario& scenario) {
    SimConfig probe = st.cfg;
    probe.scenario = scenario;
    probe.validate();
    st.cfg.scenario = scenario;
}

/// Workflow steps 6-8 for `n` rounds: signed updates in, aggregation over
/// accepted updates only, a signed global broadcast out, and one signed
/// user-to-user payload per pair, with the configured adversary interleaved.
inline Transcript& run_rounds(SimState& st, std::uint32_t n) {
    const auto& scenario = st.cfg.scenario;

    for (std::uint32_t round = 1; round <= n; ++round) {
        st.clock += kRoundStep + poisson_sample(st.rng, st.cfg.poisson_lambda);
        const bool attack_now =
            scenario.kind != ScenarioKind::none && round == scenario.target_round;
        const std::size_t first_event = st.transcript.events.size();

        // participant selection: seeded sample without replacement
        std::vector<std::uint32_t> pool(st.users.size());
        for (std::uint32_t i = 0; i < pool.size(); ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < st.cfg.fl.participants_per_round; ++i) {
            auto j = i + static_cast<std::uint32_t>(st.rng.next_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::uint32_t> chosen(pool.begin(),
                                          pool.begin() + st.cfg.fl.participants_per_round);
        // the adversary picks an active client, so pull the target in
        if (attack_now && scenario.kind != ScenarioKind::fake_server &&
            std::find(chosen.begin(), chosen.end(), scenario.target_entity) == chosen.end()) {
            chosen.front() = scenario.target_entity;
        }
        std::sort(chosen.begin(), chosen.end());

        // clients train, sign, and submit; the CS drops whatever fails verify
        std::vector<std::pair<std::string, fl::ModelVector>> delivered;  // digest, update
        std::optional<clpa::SignedEnvelope> victim_env;
        for (auto idx : chosen) {
            auto& user = st.users[idx];
            fl::ModelVector local = fl::local_train(user.model, st.task.shards[idx],
                                                    st.cfg.fl.local_epochs,
                                                    st.cfg.fl.learning_rate);
            local.round = round;
            Bytes update = fl::encode_update(local);
            auto env = clpa::sign(st.params, user.aid, user.keys, update, st.clock, st.rng);
            Bytes wire = clpa::encode_envelope(st.params, env);

            const bool is_target = attack_now && idx == scenario.target_entity;
            if (is_target) victim_env = env;

            if (is_target && scenario.kind == ScenarioKind::a1_pk_replacement) {
                // in-flight substitution: the honest copy never arrives
                for (int s = 0; s < 3; ++s) {
                    auto forged = craft_a1_forgery(st.params, env, s, st.clock, st.rng);
                    Bytes fw = clpa::encode_envelope(st.params, forged);
                    detail::deliver(st, round, fw, {user.name, "cs", "update", true},
                                    st.cs.replay);
                }
                continue;
            }
            if (is_target && scenario.kind == ScenarioKind::client_modification) {
                // flip one payload bit in flight (payload starts after its
                // 4-byte length prefix)
                std::size_t off = 4 + st.rng.next_below(env.payload.size());
                wire[off] ^= static_cast<std::uint8_t>(1u << st.rng.next_below(8));
            }
            const bool tampered = is_target && scenario.kind == ScenarioKind::client_modification;

            auto got = detail::deliver(st, round, wire, {user.name, "cs", "update", tampered},
                                       st.cs.replay);
            if (got) {
                auto model = fl::decode_update(got->payload);
                if (model) delivered.emplace_back(to_hex(sha256(wire)), std::move(*model));
                if (is_target && scenario.kind == ScenarioKind::replay) {
                    st.captured = *got;
                    st.captured_wire = wire;
                }
            }
        }

        // remaining scripted submissions to the CS
        if (attack_now && scenario.kind == ScenarioKind::replay && st.captured) {
            // exact duplicate, still inside the freshness window
            detail::deliver(st, round, st.captured_wire, {"attacker", "cs", "update", true},
                            st.cs.replay);
        }
        if (attack_now && scenario.kind == ScenarioKind::a2_master_key && victim_env) {
            for (int s = 0; s < 3; ++s) {
                auto forged =
                    craft_a2_forgery(st.params, *victim_env, st.kgc.master, s, st.clock, st.rng);
                Bytes fw = clpa::encode_envelope(st.params, forged);
                detail::deliver(st, round, fw,
                                {st.users[scenario.target_entity].name, "cs", "update", true},
                                st.cs.replay);
            }
        }

        // aggregate accepted updates only, then cross-check against the
        // transcript's accepted set
        std::vector<fl::ModelVector> accepted;
        for (std::size_t i = first_event; i < st.transcript.events.size(); ++i) {
            const auto& ev = st.transcript.events[i];
            if (ev.kind != "update" || ev.verdict != "accept") continue;
            for (const auto& [digest, model] : delivered) {
                if (digest == ev.digest) {
                    accepted.push_back(model);
                    break;
                }
            }
        }
        if (!accepted.empty()) {
            std::vector<double> weights(accepted.size(), 1.0);
            fl::ModelVector agg = fl::aggregate(accepted, weights);
            std::uint32_t accept_events = 0;
            for (std::size_t i = first_event; i < st.transcript.events.size(); ++i) {
                const auto& ev = st.transcript.events[i];
                if (ev.kind == "update" && ev.verdict == "accept") ++accept_events;
            }
            if (accept_events != accepted.size()) st.safety_ok = false;
            st.global = std::move(agg);
        }

        // CS broadcast (replaced wholesale by the fake server at its round)
        Bytes global_bytes = fl::encode_update(st.global);
        Bytes broadcast_wire;
        std::string broadcaster = "cs";
        bool broadcast_adversarial = false;
        if (attack_now && scenario.kind == ScenarioKind::fake_server) {
            auto [fake_aid, fake_keys] = detail::forge_identity(st.params, st.clock, st.rng);
            auto env =
                clpa::sign(st.params, fake_aid, fake_keys, global_bytes, st.clock, st.rng);
            broadcast_wire = clpa::encode_envelope(st.params, env);
            broadcaster = "attacker";
            broadcast_adversarial = true;
        } else {
            auto env =
                clpa::sign(st.params, st.cs.aid, st.cs.keys, global_bytes, st.clock, st.rng);
            broadcast_wire = clpa::encode_envelope(st.params, env);
        }
        for (auto& user : st.users) {
            auto got = detail::deliver(
                st, round, broadcast_wire,
                {broadcaster, user.name, "broadcast", broadcast_adversarial}, user.replay);
            if (got) {
                auto model = fl::decode_update(got->payload);
                if (model) user.model = std::move(*model);
            }
        }

        // one signed user-to-user payload per pair
        for (std::uint32_t pair = 0; pair < st.cfg.pairs; ++pair) {
            auto& sender = st.users[2 * pair];
            auto& receiver = st.users[2 * pair + 1];
            char text[64];
            std::snprintf(text, sizeof text, "semantic r=%u pair=%u", round, pair);
            Bytes payload(text, text + std::char_traits<char>::length(text));
            auto env = clpa::sign(st.params, sender.aid, sender.keys, payload, st.clock, st.rng);
            Bytes wire = clpa::encode_envelope(st.params, env);
            detail::deliver(st, round, wire, {sender.name, receiver.name, "u2u", false},
                            receiver.replay);
        }

        RoundStats rs;
        rs.round = round;
        rs.mse = fl::evaluate(st.global, st.task.test);
        for (std::size_t i = first_event; i < st.transcript.events.size(); ++i) {
            const auto& ev = st.transcript.events[i];
            rs.bytes += ev.bytes;
            if (ev.verdict == "accept") ++rs.accepted;
            if (ev.verdict == "reject") ++rs.rejected;
        }
        st.rounds.push_back(rs);
    }

    // replay epilogue: re-deliver the captured envelope after its window
    if (scenario.kind == ScenarioKind::replay && st.captured) {
        std::uint64_t late = st.captured->sent_at + st.params.freshness_window + 1;
        if (late > st.clock) st.clock = late;
        detail::deliver(st, n, st.captured_wire, {"attacker", "cs", "update", true},
                        st.cs.replay);
    }
    return st.transcript;
}

struct Metrics {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::map<std::string, std::uint64_t> rejects_by_reason;
    std::map<std::uint32_t, std::size_t> bytes_per_round;
    std::uint64_t adversarial_total = 0;
    std::uint64_t adversarial_rejected = 0;
    std::optional<double> detection_rate;  // absent without adversarial traffic
    std::uint32_t protocol_entities = 0;   // K = 2P+1: the users plus the CS
    std::uint32_t total_entities = 0;      // K plus TRA and KGC
};

inline Metrics compute_metrics(const Transcript& transcript, std::uint32_t pairs) {
    Metrics m;
    m.protocol_entities = 2 * pairs + 1;
    m.total_entities = m.protocol_entities + 2;
    for (const auto& e : transcript.events) {
        if (e.kind == "provision") continue;
        m.bytes_per_round[e.round] += e.bytes;
        if (e.verdict == "accept") ++m.accepted;
        if (e.verdict == "reject") {
            ++m.rejected;
            ++m.rejects_by_reason[e.reason];
        }
        if (e.adversarial) {
            ++m.adversarial_total;
            if (e.verdict == "reject") ++m.adversarial_rejected;
        }
    }
    if (m.adversarial_total > 0) {
        m.detection_rate = static_cast<double>(m.adversarial_rejected) /
                           static_cast<double>(m.adversarial_total);
    }
    return m;
}

inline void write_metrics_csv(std::ostream& os, const SimState& st) {
    os << "round,mse,bytes_sent,accepted,rejected\n";
    char line[160];
    for (const auto& r : st.rounds) {
        std::snprintf(line, sizeof line, "%u,%.9g,%zu,%u,%u", r.round, r.mse, r.bytes,
                      r.accepted, r.rejected);
        os << line << "\n";
    }
}

/// Scenario exit conditions: an honest run converges with zero rejections;
/// an adversarial run detects every adversarial envelope and never lets a
/// rejected update into the aggregate.
struct RunOutcome {
    bool ok = false;
    std::string message;
};

inline RunOutcome evaluate_run(const SimState& st, const Metrics& m) {
    if (!st.safety_ok) return {false, "rejected update reached the aggregate"};
    if (st.cfg.scenario.kind == ScenarioKind::none) {
        if (m.rejected != 0) return {false, "honest run saw rejections"};
        if (!st.rounds.empty()) {
            auto ls = fl::least_squares(st.task.shards);
            double ls_mse = fl::evaluate(fl::ModelVector{ls, 0}, st.task.test);
            if (st.rounds.back().mse > 1.5 * ls_mse) {
                return {false, "final MSE above 1.5x the least-squares reference"};
            }
        }
        return {true, ""};
    }
    if (m.adversarial_total == 0) return {false, "adversary produced no traffic"};
    if (!m.detection_rate || *m.detection_rate != 1.0) {
        return {false, "adversarial envelope accepted"};
    }
    if (st.cfg.scenario.kind == ScenarioKind::replay) {
        if (!m.rejects_by_reason.contains("replay") || !m.rejects_by_reason.contains("stale")) {
            return {false, "replay run missing a stale or duplicate rejection"};
        }
    }
    return {true, ""};
}

}  // namespace catfl::sim
