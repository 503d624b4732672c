#pragma once

#include <catfl/sim.hpp>

#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace catfl::sim {

/// Parses the key=value run configuration. '#' starts a comment; blank
/// lines are skipped. Errors name the offending line.
inline SimConfig parse_sim_config(std::istream& in) {
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        std::string entry = line.substr(first, last - first + 1);

        auto fail = [&](const std::string& why) -> ConfigError {
            return ConfigError("config line " + std::to_string(lineno) + ": " + why);
        };
        auto eq = entry.find('=');
        if (eq == std::string::npos) throw fail("expected key=value, got '" + entry + "'");
        std::string key = entry.substr(0, eq);
        std::string value = entry.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        if (key.empty() || value.empty()) throw fail("empty key or value");

        auto as_u64 = [&]() -> std::uint64_t {
            try {
                std::size_t used = 0;
                auto v = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw fail("'" + value + "' is not a nonnegative integer");
            }
        };
        auto as_u32 = [&]() -> std::uint32_t {
            auto v = as_u64();
            if (v > UINT32_MAX) throw fail("'" + value + "' out of range");
            return static_cast<std::uint32_t>(v);
        };
        auto as_double = [&]() -> double {
            try {
                std::size_t used = 0;
                auto v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw fail("'" + value + "' is not a number");
            }
        };

        if (key == "pairs") cfg.pairs = as_u32();
        else if (key == "rounds") cfg.fl.rounds = as_u32();
        else if (key == "participation") cfg.fl.participants_per_round = as_u32();
        else if (key == "local_epochs") cfg.fl.local_epochs = as_u32();
        else if (key == "learning_rate") cfg.fl.learning_rate = as_double();
        else if (key == "dimension") cfg.fl.dimension = as_u32();
        else if (key == "data_seed") cfg.fl.data_seed = as_u64();
        else if (key == "points_per_client") cfg.fl.points_per_client = as_u32();
        else if (key == "noise_sigma") cfg.fl.noise_sigma = as_double();
        else if (key == "scenario") {
            try {
                cfg.scenario.kind = scenario_from_string(value);
            } catch (const ConfigError& e) {
                throw fail(e.what());
            }
        } else if (key == "target_round") cfg.scenario.target_round = as_u32();
        else if (key == "target_entity") cfg.scenario.target_entity = as_u32();
        else if (key == "poisson_lambda") cfg.poisson_lambda = as_double();
        else if (key == "seed") cfg.seed = as_u64();
        else throw fail("unknown key '" + key + "'");
    }
    return cfg;
}

/// TRA state export: enough to reconstruct trace() offline — the curve, the
/// master secret, both authority keys, the roster, and the issuance list.
inline nlohmann::ordered_json export_tra_state(const clpa::SystemParams& params,
                                               const clpa::TraState& tra) {
    nlohmann::ordered_json j;
    const auto& sp = params.curve.spec();
    j["curve"] = {{"p", sp.p.str()},         {"a", sp.a.str()}, {"b", sp.b.str()},
                  {"gx", sp.gx.str()},       {"gy", sp.gy.str()}, {"q", sp.q.str()},
                  {"cofactor", sp.cofactor}};
    j["master"] = tra.master.v.str();
    j["tra_key"] = to_hex(params.curve.encode_element(params.tra_key));
    j["kgc_key"] = to_hex(params.curve.encode_element(params.kgc_key));
    j["freshness_window"] = params.freshness_window;
    j["pseudonym_lifetime"] = params.pseudonym_lifetime;
    auto roster = nlohmann::ordered_json::array();
    for (const auto& rid : tra.roster) roster.push_back(to_hex(rid));
    j["roster"] = roster;
    auto issued = nlohmann::ordered_json::array();
    for (const auto& [aid_key, record] : tra.issued) {
        issued.push_back({{"aid", to_hex(aid_key)},
                          {"rid", record.rid.hex()},
                          {"issued_at", record.issued_at}});
    }
    j["issued"] = issued;
    return j;
}

struct TraExport {
    clpa::SystemParams params;
    clpa::TraState tra;
};

inline TraExport import_tra_state(const nlohmann::json& j) {
    CurveSpec sp;
    const auto& c = j.at("curve");
    sp.p = Int(c.at("p").get<std::string>());
    sp.a = Int(c.at("a").get<std::string>());
    sp.b = Int(c.at("b").get<std::string>());
    sp.gx = Int(c.at("gx").get<std::string>());
    sp.gy = Int(c.at("gy").get<std::string>());
    sp.q = Int(c.at("q").get<std::string>());
    sp.cofactor = c.at("cofactor").get<unsigned>();
    Curve curve(sp);

    auto element = [&](const std::string& hex) {
        auto bytes = from_hex(hex);
        if (!bytes) throw ConfigError("tra state: bad element hex");
        auto pt = curve.decode_element(*bytes);
        if (!pt) throw ConfigError("tra state: element not on curve");
        return *pt;
    };
    auto params = clpa::make_params(curve, element(j.at("tra_key").get<std::string>()),
                                    element(j.at("kgc_key").get<std::string>()),
                                    j.at("freshness_window").get<std::uint64_t>(),
                                    j.at("pseudonym_lifetime").get<std::uint64_t>());

    clpa::TraState tra;
    tra.master = curve.reduce(Int(j.at("master").get<std::string>()));
    for (const auto& hex : j.at("roster")) {
        auto bytes = from_hex(hex.get<std::string>());
        if (!bytes || bytes->size() != 16) throw ConfigError("tra state: bad roster entry");
        Bits128 rid;
        std::copy(bytes->begin(), bytes->end(), rid.begin());
        tra.roster.insert(rid);
    }
    for (const auto& rec : j.at("issued")) {
        auto aid_bytes = from_hex(rec.at("aid").get<std::string>());
        auto rid_bytes = from_hex(rec.at("rid").get<std::string>());
        if (!aid_bytes || !rid_bytes || rid_bytes->size() != 16) {
            throw ConfigError("tra state: bad issuance record");
        }
        clpa::IssueRecord record;
        std::copy(rid_bytes->begin(), rid_bytes->end(), record.rid.bits.begin());
        record.issued_at = rec.at("issued_at").get<std::uint64_t>();
        tra.issued.emplace(*aid_bytes, record);
    }
    return TraExport{std::move(params), std::move(tra)};
}

/// Parses the canonical pseudonym bytes (element || masked id || be8 time).
inline std::optional<clpa::Pseudonym> aid_from_bytes(const Curve& curve,
                                                     std::span<const std::uint8_t> data) {
    if (data.size() != curve.element_size() + 16 + 8) return std::nullopt;
    auto pt = curve.decode_element(data.subspan(0, curve.element_size()));
    if (!pt || pt->inf) return std::nullopt;
    clpa::Pseudonym aid;
    aid.point = std::move(*pt);
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(curve.element_size()),
              data.begin() + static_cast<std::ptrdiff_t>(curve.element_size() + 16),
              aid.masked_id.begin());
    std::uint64_t t = 0;
    for (std::size_t i = data.size() - 8; i < data.size(); ++i) t = (t << 8) | data[i];
    aid.issued_at = t;
    return aid;
}

}  // namespace catfl::sim
