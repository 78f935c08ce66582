#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rowlight/error.hpp"
#include "rowlight/sim_device.hpp"

namespace rowlight::device {

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::InvalidFixture, what); }

std::int64_t parse_int(std::string_view text) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        invalid("not an integer: '" + std::string(text) + "'");
    }
    return v;
}

Rational reduced(std::int64_t num, std::int64_t den) {
    if (den == 0) {
        invalid("ratio with zero denominator");
    }
    const std::int64_t g = std::gcd(num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

TransferModel parse_model(const YAML::Node& node, int depth) {
    if (depth > 16) {
        invalid("transfer model nested too deeply");
    }
    if (node.IsScalar() && node.Scalar() == "open") {
        return {Open{}};
    }
    if (!node.IsMap() || node.size() != 1) {
        invalid("transfer model must be 'open' or a single-key mapping");
    }
    const auto kind = node.begin()->first.as<std::string>();
    const YAML::Node body = node.begin()->second;
    if (kind == "open") {
        return {Open{}};
    }
    if (kind == "constant") {
        return {Constant{body.as<int>()}};
    }
    if (kind == "divider") {
        if (!body["source"] || !body["ratio"]) {
            invalid("divider needs 'source' and 'ratio'");
        }
        return {Divider{PinId(body["source"].as<std::string>()),
                        parse_ratio(body["ratio"].as<std::string>())}};
    }
    if (kind == "noisy") {
        if (!body["base"] || !body["amplitude"]) {
            invalid("noisy needs 'base' and 'amplitude'");
        }
        Noisy n;
        n.base = std::make_shared<const TransferModel>(parse_model(body["base"], depth + 1));
        n.amplitude_mv = body["amplitude"].as<int>();
        n.seed = body["seed"] ? body["seed"].as<std::uint64_t>() : 0;
        return {std::move(n)};
    }
    invalid("unknown transfer model '" + kind + "'");
}

}  // namespace

Rational parse_ratio(std::string_view text) {
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return reduced(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        const std::string_view whole = text.substr(0, dot);
        const std::string_view frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 9) {
            invalid("unsupported decimal ratio '" + std::string(text) + "'");
        }
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) {
            den *= 10;
        }
        const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
        return reduced(w * den + parse_int(frac), den);
    }
    return reduced(parse_int(text), 1);
}

FixtureFile parse_fixture_yaml(std::string_view yaml) {
    FixtureFile out;
    try {
        const YAML::Node root = YAML::Load(std::string(yaml));
        if (root.IsNull()) {
            return out;
        }
        if (!root.IsMap()) {
            invalid("fixture must be a mapping");
        }
        if (const YAML::Node pins = root["pins"]; pins && !pins.IsNull()) {
            if (!pins.IsMap()) {
                invalid("'pins' must be a mapping");
            }
            // Iterating keeps duplicate keys, so SimDevice can reject them.
            for (const auto& kv : pins) {
                out.fixture.pins.push_back(
                    {PinId(kv.first.as<std::string>()), parse_model(kv.second, 0)});
            }
        }
        if (const YAML::Node hold = root["hold"]; hold && !hold.IsNull()) {
            if (!hold.IsMap()) {
                invalid("'hold' must be a mapping of pin to millivolts");
            }
            for (const auto& kv : hold) {
                if (!out.options.hold_mv.emplace(PinId(kv.first.as<std::string>()), kv.second.as<int>()).second) {
                    invalid("pin " + kv.first.as<std::string>() + " held twice");
                }
            }
        }
        if (root["latency_ms"]) {
            out.options.latency_ms = root["latency_ms"].as<int>();
        }
    } catch (const YAML::Exception& e) {
        invalid(e.what());
    }
    return out;
}

FixtureFile load_fixture_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open fixture " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_fixture_yaml(buf.str());
}

}  // namespace rowlight::device
