#include <catch2/catch_amalgamated.hpp>

#include <catfl/config.hpp>
#include <catfl/sim.hpp>

#include <sstream>

using namespace catfl;
using namespace catfl::sim;

namespace {

SimConfig small_config(std::uint64_t seed, ScenarioKind kind = ScenarioKind::none,
                       std::uint32_t rounds = 3) {
    SimConfig cfg;
    cfg.pairs = 1;
    cfg.fl.rounds = rounds;
    cfg.fl.participants_per_round = 2;
    cfg.fl.local_epochs = 2;
    cfg.fl.learning_rate = 0.05;
    cfg.fl.dimension = 2;
    cfg.fl.points_per_client = 40;
    cfg.fl.data_seed = seed + 1000;
    cfg.poisson_lambda = 3.0;
    cfg.seed = seed;
    if (kind != ScenarioKind::none) {
        cfg.scenario = AttackScenario{kind, rounds > 1 ? 2u : 1u, 0};
    }
    return cfg;
}

}  // namespace

TEST_CASE("build wires up the whole roster") {
    auto cfg = small_config(1);
    auto st = build(cfg, Curve::toy());

    SECTION("P=1 gives three protocol entities beyond TRA and KGC") {
        REQUIRE(st.users.size() == 2);
        auto m = compute_metrics(st.transcript, cfg.pairs);
        REQUIRE(m.protocol_entities == 3);
        REQUIRE(m.total_entities == 5);
    }

    SECTION("every entity passed the partial-key check and holds stock") {
        REQUIRE(st.cs.stock.size() == 2);
        for (const auto& u : st.users) {
            REQUIRE(u.stock.size() == 2);
            REQUIRE(u.keys.pk.user_key ==
                    st.params.curve.mul_base(u.keys.secret_value));
        }
    }

    SECTION("provision events only, all ok") {
        REQUIRE(st.transcript.events.size() == 3);
        for (const auto& e : st.transcript.events) {
            REQUIRE(e.kind == "provision");
            REQUIRE(e.verdict == "ok");
            REQUIRE(e.round == 0);
        }
    }

    SECTION("zero rounds leaves the transcript at build events") {
        run_rounds(st, 0);
        REQUIRE(st.transcript.events.size() == 3);
        REQUIRE(st.rounds.empty());
    }
}

TEST_CASE("deterministic transcripts") {
    auto cfg = small_config(42);

    auto st1 = build(cfg, Curve::toy());
    run_rounds(st1, cfg.fl.rounds);
    auto st2 = build(cfg, Curve::toy());
    run_rounds(st2, cfg.fl.rounds);
    REQUIRE(st1.transcript.jsonl() == st2.transcript.jsonl());

    std::ostringstream csv1, csv2;
    write_metrics_csv(csv1, st1);
    write_metrics_csv(csv2, st2);
    REQUIRE(csv1.str() == csv2.str());

    auto other = cfg;
    other.seed = 43;
    auto st3 = build(other, Curve::toy());
    run_rounds(st3, cfg.fl.rounds);
    REQUIRE(st1.transcript.jsonl() != st3.transcript.jsonl());
}

TEST_CASE("honest run") {
    auto cfg = small_config(7, ScenarioKind::none, 15);
    cfg.fl.local_epochs = 5;
    cfg.fl.learning_rate = 0.1;
    auto st = build(cfg, Curve::toy());
    run_rounds(st, cfg.fl.rounds);
    auto m = compute_metrics(st.transcript, cfg.pairs);

    SECTION("zero rejections and no detection-rate field") {
        REQUIRE(m.rejected == 0);
        REQUIRE_FALSE(m.detection_rate.has_value());
        REQUIRE(m.accepted > 0);
    }

    SECTION("scenario assertions hold, including convergence") {
        auto outcome = evaluate_run(st, m);
        INFO(outcome.message);
        REQUIRE(outcome.ok);
    }

    SECTION("per-round byte totals match the wire arithmetic") {
        // per round: 2 updates + 2 broadcast deliveries of the global
        // model, plus one u2u payload "semantic r=<r> pair=0"
        const auto& curve = st.params.curve;
        std::size_t update_bytes = clpa::envelope_size(curve, fl::update_size(cfg.fl.dimension));
        for (const auto& r : st.rounds) {
            char text[64];
            std::snprintf(text, sizeof text, "semantic r=%u pair=%u", r.round, 0u);
            std::size_t u2u_bytes =
                clpa::envelope_size(curve, std::char_traits<char>::length(text));
            std::size_t expect = 4 * update_bytes + u2u_bytes;
            REQUIRE(r.bytes == expect);
        }
        for (const auto& [round, total] : m.bytes_per_round) {
            if (round == 0) continue;
            REQUIRE(total == st.rounds[round - 1].bytes);
        }
    }

    SECTION("metrics csv has one row per round") {
        std::ostringstream os;
        write_metrics_csv(os, st);
        std::istringstream is(os.str());
        std::string header;
        std::getline(is, header);
        REQUIRE(header == "round,mse,bytes_sent,accepted,rejected");
        std::size_t rows = 0;
        std::string line;
        while (std::getline(is, line)) {
            if (!line.empty()) ++rows;
        }
        REQUIRE(rows == cfg.fl.rounds);
    }
}

TEST_CASE("rejected updates are excluded from the aggregate") {
    // one round, one tampering client: the global model must equal the
    // surviving client's update exactly
    auto cfg = small_config(11, ScenarioKind::client_modification, 1);
    cfg.scenario.target_round = 1;
    cfg.scenario.target_entity = 0;
    auto st = build(cfg, Curve::secp256k1());
    run_rounds(st, 1);

    auto m = compute_metrics(st.transcript, cfg.pairs);
    REQUIRE(m.adversarial_total == 1);
    REQUIRE(m.adversarial_rejected == 1);

    // recompute the surviving update independently from the task data
    SeededRng data_rng(cfg.fl.data_seed);
    auto task = fl::make_task(cfg.fl, data_rng);
    fl::ModelVector zeros{std::vector<double>(cfg.fl.dimension, 0.0), 0};
    auto survivor = fl::local_train(zeros, task.shards[1], cfg.fl.local_epochs,
                                    cfg.fl.learning_rate);
    survivor.round = 1;
    REQUIRE(st.global == survivor);

    auto outcome = evaluate_run(st, m);
    INFO(outcome.message);
    REQUIRE(outcome.ok);
}

TEST_CASE("fake server broadcast is rejected by every client") {
    auto cfg = small_config(5, ScenarioKind::fake_server);
    auto st = build(cfg, Curve::secp256k1());
    run_rounds(st, cfg.fl.rounds);

    std::uint32_t adversarial_broadcasts = 0;
    for (const auto& e : st.transcript.events) {
        if (e.kind != "broadcast") continue;
        if (e.round == cfg.scenario.target_round) {
            REQUIRE(e.from == "attacker");
            REQUIRE(e.adversarial);
            REQUIRE(e.verdict == "reject");
            REQUIRE(e.reason == "equation-failure");
            ++adversarial_broadcasts;
        } else {
            REQUIRE(e.verdict == "accept");
        }
    }
    REQUIRE(adversarial_broadcasts == st.users.size());

    auto m = compute_metrics(st.transcript, cfg.pairs);
    REQUIRE(m.detection_rate == 1.0);
    REQUIRE(evaluate_run(st, m).ok);

    SECTION("the self-minted pseudonym is untraceable") {
        for (const auto& e : st.transcript.events) {
            if (!e.adversarial) continue;
            auto bytes = from_hex(e.aid);
            REQUIRE(bytes.has_value());
            auto aid = aid_from_bytes(st.params.curve, *bytes);
            REQUIRE(aid.has_value());
            REQUIRE_FALSE(clpa::trace(st.tra, st.params, *aid).has_value());
        }
    }
}

TEST_CASE("client modification is detected and traced") {
    auto cfg = small_config(6, ScenarioKind::client_modification);
    auto st = build(cfg, Curve::secp256k1());
    run_rounds(st, cfg.fl.rounds);
    auto m = compute_metrics(st.transcript, cfg.pairs);
    REQUIRE(m.adversarial_total == 1);
    REQUIRE(m.detection_rate == 1.0);
    REQUIRE(evaluate_run(st, m).ok);

    // the tampered envelope still names a TRA-issued pseudonym, so the
    // offender is identifiable
    for (const auto& e : st.transcript.events) {
        if (!e.adversarial) continue;
        REQUIRE(e.verdict == "reject");
        auto bytes = from_hex(e.aid);
        auto aid = aid_from_bytes(st.params.curve, *bytes);
        REQUIRE(aid.has_value());
        auto rid = clpa::trace(st.tra, st.params, *aid);
        REQUIRE(rid.has_value());
        REQUIRE(rid->name() == st.users[cfg.scenario.target_entity].name);
    }
}

TEST_CASE("replay is rejected both in and out of the window") {
    auto cfg = small_config(8, ScenarioKind::replay);
    auto st = build(cfg, Curve::secp256k1());
    run_rounds(st, cfg.fl.rounds);
    auto m = compute_metrics(st.transcript, cfg.pairs);

    REQUIRE(m.adversarial_total == 2);
    REQUIRE(m.detection_rate == 1.0);
    REQUIRE(m.rejects_by_reason.at("replay") == 1);
    REQUIRE(m.rejects_by_reason.at("stale") == 1);
    REQUIRE(evaluate_run(st, m).ok);
}

TEST_CASE("a1 public-key replacement strategies are rejected") {
    auto cfg = small_config(9, ScenarioKind::a1_pk_replacement);
    auto st = build(cfg, Curve::secp256k1());
    run_rounds(st, cfg.fl.rounds);
    auto m = compute_metrics(st.transcript, cfg.pairs);

    REQUIRE(m.adversarial_total == 3);
    REQUIRE(m.adversarial_rejected == 3);
    REQUIRE(m.rejects_by_reason.contains("theta-mismatch"));
    REQUIRE(m.rejects_by_reason.contains("equation-failure"));
    REQUIRE(evaluate_run(st, m).ok);
}

TEST_CASE("a2 master-key strategies are rejected") {
    auto cfg = small_config(10, ScenarioKind::a2_master_key);
    auto st = build(cfg, Curve::secp256k1());
    run_rounds(st, cfg.fl.rounds);
    auto m = compute_metrics(st.transcript, cfg.pairs);

    REQUIRE(m.adversarial_total == 3);
    REQUIRE(m.adversarial_rejected == 3);
    REQUIRE(evaluate_run(st, m).ok);
}

TEST_CASE("scripted forgery sweeps never produce an accepted envelope") {
    SeededRng rng(77);
    auto sys = clpa::setup(Curve::secp256k1(), rng);
    const std::uint64_t now = 123456;
    auto rid = clpa::RealIdentity::from_name("victim");
    sys.tra.register_identity(rid);
    auto batch = clpa::replenish_pseudonyms(sys.tra, sys.kgc, sys.params, rid, 1, now, rng);
    auto keys = clpa::extract_usk(sys.params, batch[0].first, batch[0].second, rng);
    REQUIRE(keys.has_value());
    Bytes payload(32, 0x55);
    auto observed = clpa::sign(sys.params, batch[0].first, *keys, payload, now, rng);

    auto a1 = a1_pk_replacement_sweep(sys.params, observed, 60, now, rng);
    REQUIRE(a1.attempts == 60);
    REQUIRE(a1.accepted == 0);

    auto a2 = a2_master_key_sweep(sys.params, observed, sys.kgc.master, 60, now, rng);
    REQUIRE(a2.attempts == 60);
    REQUIRE(a2.accepted == 0);
}

TEST_CASE("inject replaces the scenario") {
    auto cfg = small_config(12);
    auto st = build(cfg, Curve::secp256k1());
    inject(st, AttackScenario{ScenarioKind::client_modification, 1, 1});
    run_rounds(st, cfg.fl.rounds);
    auto m = compute_metrics(st.transcript, cfg.pairs);
    REQUIRE(m.adversarial_total == 1);
    REQUIRE(m.detection_rate == 1.0);

    SECTION("invalid scenarios are refused") {
        auto st2 = build(cfg, Curve::toy());
        REQUIRE_THROWS_AS(inject(st2, AttackScenario{ScenarioKind::replay, 99, 0}), ConfigError);
        REQUIRE_THROWS_AS(inject(st2, AttackScenario{ScenarioKind::replay, 1, 7}), ConfigError);
    }
}

TEST_CASE("config parsing") {
    SECTION("well-formed file") {
        std::istringstream in(
            "# comment\n"
            "pairs = 2\n"
            "rounds = 5\n"
            "participation = 3\n"
            "local_epochs = 4\n"
            "learning_rate = 0.125\n"
            "dimension = 6\n"
            "data_seed = 99\n"
            "points_per_client = 55\n"
            "noise_sigma = 0.2\n"
            "scenario = replay\n"
            "target_round = 3\n"
            "target_entity = 1\n"
            "poisson_lambda = 2.5\n"
            "seed = 31\n");
        auto cfg = parse_sim_config(in);
        REQUIRE(cfg.pairs == 2);
        REQUIRE(cfg.fl.rounds == 5);
        REQUIRE(cfg.fl.participants_per_round == 3);
        REQUIRE(cfg.fl.local_epochs == 4);
        REQUIRE(cfg.fl.learning_rate == 0.125);
        REQUIRE(cfg.fl.dimension == 6);
        REQUIRE(cfg.fl.data_seed == 99);
        REQUIRE(cfg.fl.points_per_client == 55);
        REQUIRE(cfg.fl.noise_sigma == 0.2);
        REQUIRE(cfg.scenario.kind == ScenarioKind::replay);
        REQUIRE(cfg.scenario.target_round == 3);
        REQUIRE(cfg.scenario.target_entity == 1);
        REQUIRE(cfg.poisson_lambda == 2.5);
        REQUIRE(cfg.seed == 31);
    }

    SECTION("errors carry the line number") {
        std::istringstream bad_key("pairs = 1\nbogus = 2\n");
        try {
            parse_sim_config(bad_key);
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
        }

        std::istringstream bad_value("rounds = soon\n");
        try {
            parse_sim_config(bad_value);
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("line 1") != std::string::npos);
        }

        std::istringstream bad_scenario("scenario = quantum\n");
        REQUIRE_THROWS_AS(parse_sim_config(bad_scenario), ConfigError);

        std::istringstream no_equals("pairs 1\n");
        REQUIRE_THROWS_AS(parse_sim_config(no_equals), ConfigError);
    }

    SECTION("validation rejects inconsistent scenarios") {
        SimConfig cfg = small_config(1);
        cfg.scenario = AttackScenario{ScenarioKind::replay, 99, 0};
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("tra state export and import") {
    auto cfg = small_config(13, ScenarioKind::client_modification);
    auto st = build(cfg, Curve::toy());
    run_rounds(st, cfg.fl.rounds);

    auto exported = export_tra_state(st.params, st.tra);
    auto reloaded = import_tra_state(exported);

    SECTION("curve and keys survive the round trip") {
        REQUIRE(reloaded.params.curve.spec().p == st.params.curve.spec().p);
        REQUIRE(reloaded.params.tra_key == st.params.tra_key);
        REQUIRE(reloaded.params.kgc_key == st.params.kgc_key);
        REQUIRE(reloaded.tra.master == st.tra.master);
        REQUIRE(reloaded.tra.roster == st.tra.roster);
    }

    SECTION("an issued pseudonym from the transcript traces after reload") {
        bool checked = false;
        for (const auto& e : st.transcript.events) {
            if (e.kind != "update" || e.aid.empty()) continue;
            auto bytes = from_hex(e.aid);
            REQUIRE(bytes.has_value());
            auto aid = aid_from_bytes(reloaded.params.curve, *bytes);
            REQUIRE(aid.has_value());
            auto rid = clpa::trace(reloaded.tra, reloaded.params, *aid);
            REQUIRE(rid.has_value());
            REQUIRE(rid->name() == e.from);
            checked = true;
            break;
        }
        REQUIRE(checked);
    }
}
