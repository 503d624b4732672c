#include <catch2/catch_amalgamated.hpp>

#include <catfl/baseline.hpp>
#include <catfl/bench.hpp>
#include <catfl/wire.hpp>

#include <sstream>

using namespace catfl;

namespace {

struct PkiFixture {
    Curve curve;
    pki::CaState ca;
    pki::KeyPair kp;
    pki::Certificate cert;
    SeededRng rng;
};

PkiFixture make_pki(const Curve& curve, std::uint64_t seed) {
    SeededRng rng(seed);
    auto ca = pki::make_ca(curve, rng);
    auto kp = pki::keygen(curve, rng);
    auto cert = pki::issue_certificate(curve, ca, clpa::RealIdentity::from_name("subject").bits,
                                       kp.pk, 1000, 100000, rng);
    return PkiFixture{curve, ca, kp, cert, std::move(rng)};
}

}  // namespace

TEST_CASE("schnorr signatures") {
    Curve curve = Curve::secp256k1();
    SeededRng rng(4);
    auto kp = pki::keygen(curve, rng);
    Bytes msg = {'h', 'i'};

    SECTION("sign then verify") {
        auto sig = pki::schnorr_sign(curve, "BM:", kp, msg, rng);
        REQUIRE(pki::schnorr_verify(curve, "BM:", kp.pk, msg, sig));
    }

    SECTION("wrong message, wrong key, wrong tag all fail") {
        auto sig = pki::schnorr_sign(curve, "BM:", kp, msg, rng);
        Bytes other = {'h', 'o'};
        REQUIRE_FALSE(pki::schnorr_verify(curve, "BM:", kp.pk, other, sig));
        auto kp2 = pki::keygen(curve, rng);
        REQUIRE_FALSE(pki::schnorr_verify(curve, "BM:", kp2.pk, msg, sig));
        REQUIRE_FALSE(pki::schnorr_verify(curve, "BC:", kp.pk, msg, sig));
    }

    SECTION("tampered signature parts fail") {
        auto sig = pki::schnorr_sign(curve, "BM:", kp, msg, rng);
        auto bad = sig;
        bad.response = curve.s_add(bad.response, Scalar{1});
        REQUIRE_FALSE(pki::schnorr_verify(curve, "BM:", kp.pk, msg, bad));
        bad = sig;
        bad.commitment = curve.add(bad.commitment, curve.generator());
        REQUIRE_FALSE(pki::schnorr_verify(curve, "BM:", kp.pk, msg, bad));
    }
}

TEST_CASE("certificate-based message authentication") {
    auto f = make_pki(Curve::secp256k1(), 8);
    Bytes payload(64, 0x2a);
    const std::uint64_t now = 5000;

    SECTION("honest message verifies") {
        auto msg = pki::baseline_sign(f.curve, f.kp, f.cert, payload, now, f.rng);
        REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, now) ==
                pki::CertVerdict::accept);
    }

    SECTION("expired and not-yet-valid certificates are rejected") {
        auto msg = pki::baseline_sign(f.curve, f.kp, f.cert, payload, now, f.rng);
        REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, 100001) ==
                pki::CertVerdict::reject_expired);
        REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, 999) ==
                pki::CertVerdict::reject_expired);
    }

    SECTION("tampered certificate subject key is caught by the CA signature") {
        auto msg = pki::baseline_sign(f.curve, f.kp, f.cert, payload, now, f.rng);
        auto other = pki::keygen(f.curve, f.rng);
        msg.cert.subject_pk = other.pk;
        REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, now) ==
                pki::CertVerdict::reject_cert_signature);
    }

    SECTION("self-issued certificate fails the trust anchor comparison") {
        auto rogue_ca = pki::make_ca(f.curve, f.rng);
        auto rogue_cert = pki::issue_certificate(
            f.curve, rogue_ca, clpa::RealIdentity::from_name("subject").bits, f.kp.pk, 1000,
            100000, f.rng);
        auto msg = pki::baseline_sign(f.curve, f.kp, rogue_cert, payload, now, f.rng);
        REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, now) ==
                pki::CertVerdict::reject_untrusted_issuer);
    }

    SECTION("payload tampering is caught by the message signature") {
        auto msg = pki::baseline_sign(f.curve, f.kp, f.cert, payload, now, f.rng);
        msg.payload[3] ^= 0x01;
        REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, now) ==
                pki::CertVerdict::reject_message_signature);
    }

    SECTION("certificate bit-flip sweep never verifies") {
        auto wire = pki::encode_certificate(f.curve, f.cert);
        SeededRng flip_rng(99);
        for (int trial = 0; trial < 100; ++trial) {
            Bytes bad = wire;
            std::size_t byte = flip_rng.next_below(bad.size());
            bad[byte] ^= static_cast<std::uint8_t>(1u << flip_rng.next_below(8));
            auto cert = pki::decode_certificate(f.curve, bad);
            if (!cert) continue;  // malformed at decode
            if (*cert == f.cert) continue;  // flip landed in a length prefix unused bit? no-op
            auto msg = pki::baseline_sign(f.curve, f.kp, *cert, payload, now, f.rng);
            REQUIRE(pki::baseline_verify(f.curve, f.ca.key.pk, msg, now) !=
                    pki::CertVerdict::accept);
        }
    }
}

TEST_CASE("certificate wire format") {
    auto f = make_pki(Curve::toy(), 2);

    SECTION("round trip and size arithmetic") {
        auto wire = pki::encode_certificate(f.curve, f.cert);
        REQUIRE(wire.size() == pki::certificate_size(f.curve));
        auto back = pki::decode_certificate(f.curve, wire);
        REQUIRE(back.has_value());
        REQUIRE(*back == f.cert);
    }

    SECTION("message size arithmetic") {
        Bytes payload(10, 0x01);
        auto msg = pki::baseline_sign(f.curve, f.kp, f.cert, payload, 5000, f.rng);
        auto wire = pki::encode_message(f.curve, msg);
        REQUIRE(wire.size() == pki::message_size(f.curve, payload.size()));
    }
}

TEST_CASE("per-message comparison against the certificateless envelope") {
    // equal payloads, same curve: the certificate's subject/validity
    // metadata plus its issuer signature outweigh the envelope's pseudonym
    // and second public-key point
    for (const Curve& curve : {Curve::toy(), Curve::secp256k1()}) {
        for (std::size_t payload : {0ull, 24ull, 256ull, 4096ull}) {
            REQUIRE(clpa::envelope_size(curve, payload) < pki::message_size(curve, payload));
        }
    }
}

TEST_CASE("cost model") {
    SECTION("zero inputs give zero cost") {
        auto t = bench::cost_model(bench::CostModelInput{0, 0, 5.0, 7.0, 3.0, 1});
        REQUIRE(t.training_us == 0.0);
        REQUIRE(t.messaging_us == 0.0);
        REQUIRE(t.waiting_us == 0.0);
        REQUIRE(t.total_us == 0.0);
    }

    SECTION("training cost for N=10, T_sign=2, T_veri=3 is 50") {
        auto t = bench::cost_model(bench::CostModelInput{10, 0, 2.0, 3.0, 0.0, 1});
        REQUIRE(t.training_us == Catch::Approx(50.0));
    }

    SECTION("exactly linear in N and M at three points per axis") {
        bench::CostModelInput base{0, 0, 2.5, 4.5, 1.5, 2};
        for (std::uint64_t n : {1ull, 10ull, 100ull}) {
            for (std::uint64_t m : {1ull, 10ull, 100ull}) {
                auto in = base;
                in.rounds_n = n;
                in.messages_m = m;
                auto t = bench::cost_model(in);
                REQUIRE(t.training_us == Catch::Approx(static_cast<double>(n) * 7.0));
                REQUIRE(t.messaging_us == Catch::Approx(static_cast<double>(m) * 7.0));
                REQUIRE(t.waiting_us == Catch::Approx(static_cast<double>(n) * 1.5));
                REQUIRE(t.total_us ==
                        Catch::Approx(t.training_us + t.messaging_us + t.waiting_us));
            }
        }
    }

    SECTION("entity count follows K = 2P + 1") {
        REQUIRE(bench::entity_count(1) == 3);
        REQUIRE(bench::entity_count(5) == 11);
    }
}

TEST_CASE("poisson sampling by inversion") {
    SECTION("monte-carlo mean for lambda = 4") {
        SeededRng rng(31337);
        double sum = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) sum += static_cast<double>(poisson_sample(rng, 4.0));
        double mean = sum / n;
        REQUIRE(mean > 3.9);
        REQUIRE(mean < 4.1);
    }

    SECTION("lambda zero always returns zero") {
        SeededRng rng(1);
        for (int i = 0; i < 10; ++i) REQUIRE(poisson_sample(rng, 0.0) == 0);
    }
}

TEST_CASE("latency benchmark") {
    Curve curve = Curve::toy();

    SECTION("iteration floor is enforced") {
        REQUIRE_THROWS_AS(bench::run_bench(curve, 99, 16, 1), std::invalid_argument);
    }

    SECTION("measurements are ordered and bytes favor the envelope") {
        auto result = bench::run_bench(curve, 100, 64, 1);
        for (const auto* s : {&result.catfl_sign, &result.catfl_verify, &result.baseline_sign,
                              &result.baseline_verify}) {
            REQUIRE(s->q1_us <= s->median_us);
            REQUIRE(s->median_us <= s->q3_us);
            REQUIRE(s->median_us > 0.0);
        }
        REQUIRE(result.catfl_bytes < result.baseline_bytes);
        REQUIRE(result.catfl_bytes == clpa::envelope_size(curve, 64));
    }

    SECTION("cost report rows") {
        auto result = bench::run_bench(curve, 100, 32, 2);
        auto report = bench::build_report(curve, result, 50, 100, 2.0, 3);
        REQUIRE(report.entities_k == 7);
        REQUIRE(report.rows.size() == 2);
        REQUIRE(report.rows[0].scheme == "catfl");
        REQUIRE(report.rows[0].verify_ops_per_message == 1);
        REQUIRE(report.rows[1].scheme == "baseline_pki");
        REQUIRE(report.rows[1].verify_ops_per_message == 2);
        REQUIRE(report.rows[0].verify_ops_per_message <
                report.rows[1].verify_ops_per_message);
        REQUIRE(report.rows[0].bytes_per_message < report.rows[1].bytes_per_message);
    }
}

TEST_CASE("cost report csv schema") {
    bench::CostReport report;
    report.entities_k = 3;
    report.rows.push_back(bench::make_row("catfl", 482, 1, 1,
                                          bench::CostModelInput{10, 20, 2.0, 3.0, 1.5, 1}));
    report.rows.push_back(bench::make_row("baseline_pki", 498, 1, 2,
                                          bench::CostModelInput{10, 20, 2.5, 6.0, 1.5, 1}));
    std::ostringstream os;
    bench::write_cost_csv(os, report);
    const std::string expected =
        "scheme,bytes_per_message,sign_ops_per_message,verify_ops_per_message,t_sign_us,"
        "t_veri_us,training_cost_us,messaging_cost_us,waiting_cost_us,total_cost_us,entities_k\n"
        "catfl,482,1,1,2.000,3.000,50.000,100.000,15.000,165.000,3\n"
        "baseline_pki,498,1,2,2.500,6.000,85.000,170.000,15.000,270.000,3\n";
    REQUIRE(os.str() == expected);
}

TEST_CASE("bench medians are repeatable") {
    // consecutive runs on the production curve agree within 25%; a shared
    // CI host can burst-load one whole run, so a disagreeing pair is
    // re-measured up to twice before it counts as a failure
    Curve curve = Curve::secp256k1();
    auto close = [](double x, double y) {
        double hi = std::max(x, y), lo = std::min(x, y);
        return hi / lo <= 1.25;
    };
    bool agreed = false;
    for (int attempt = 0; attempt < 3 && !agreed; ++attempt) {
        auto a = bench::run_bench(curve, 100, 128, 1);
        auto b = bench::run_bench(curve, 100, 128, 2);
        agreed = close(a.catfl_sign.median_us, b.catfl_sign.median_us) &&
                 close(a.catfl_verify.median_us, b.catfl_verify.median_us) &&
                 close(a.baseline_sign.median_us, b.baseline_sign.median_us) &&
                 close(a.baseline_verify.median_us, b.baseline_verify.median_us);
    }
    REQUIRE(agreed);
}
